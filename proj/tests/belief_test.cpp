#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "test_support.hpp"

namespace fevi {
namespace {

using testing::expect_error;

// Direct long-double evaluation of (1/beta) log sum_k w_k exp(beta x_k), no shifting.
long double naive_log_partition(const std::vector<double>& w, const std::vector<double>& x, long double beta) {
  long double acc = 0.0L;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * std::exp(beta * x[k]);
  return std::log(acc) / beta;
}

long double naive_kl(const std::vector<double>& p, const std::vector<double>& q) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) acc += p[i] * std::log(static_cast<long double>(p[i]) / q[i]);
  return acc;
}

TEST(PosteriorUpdate, IncrementsObservedCount) {
  const auto b = posterior_update(DirichletCounts{{1, 1, 1}}, 1);
  EXPECT_EQ(b.counts, (std::vector<double>{1, 2, 1}));
}

TEST(PosteriorUpdate, RepeatedObservations) {
  DirichletCounts b{{1, 1}};
  for (int i = 0; i < 5; ++i) b = posterior_update(b, 0);
  EXPECT_EQ(b.counts, (std::vector<double>{6, 1}));
  const auto m = dirichlet_mean(b);
  EXPECT_DOUBLE_EQ(m[0], 6.0 / 7.0);
  EXPECT_DOUBLE_EQ(m[1], 1.0 / 7.0);
}

TEST(PosteriorUpdate, ManyObservationsConcentrateMean) {
  DirichletCounts b{{1, 1, 1, 1}};
  for (int i = 0; i < 999; ++i) b = posterior_update(b, 2);
  const auto m = dirichlet_mean(b);
  const double total = 4.0 + 999.0;
  EXPECT_NEAR(m[2], 1000.0 / total, 1e-15);
  for (std::size_t i : {0u, 1u, 3u}) EXPECT_NEAR(m[i], 1.0 / total, 1e-15);
}

TEST(PosteriorUpdate, RejectsObservationOutsideSupport) {
  expect_error(Errc::UnsupportedSuccessor, [] { posterior_update(DirichletCounts{{1, 1}}, 2); });
}

TEST(Materialize, PointMassIsSingleParticle) {
  const auto m = materialize(PointMass{{0.3, 0.7}}, 256, 1);
  ASSERT_EQ(m.particles.size(), 1u);
  EXPECT_EQ(m.particles[0].weight, 1.0);
  EXPECT_EQ(m.particles[0].theta, (std::vector<double>{0.3, 0.7}));
}

TEST(Materialize, MixtureIsIdentity) {
  FiniteMixture mix{{{0.2, {1.0, 0.0}}, {0.3, {0.5, 0.5}}, {0.5, {0.1, 0.9}}}};
  const auto out = materialize(mix, 7, 3);
  ASSERT_EQ(out.particles.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(out.particles[k].weight, mix.particles[k].weight);
    EXPECT_EQ(out.particles[k].theta, mix.particles[k].theta);
  }
}

TEST(Materialize, DirichletSampleMeanMatchesClosedForm) {
  const auto m = materialize(DirichletCounts{{5, 5}}, 10000, 99);
  ASSERT_EQ(m.particles.size(), 10000u);
  double mean = 0.0;
  for (const auto& p : m.particles) {
    EXPECT_EQ(p.weight, 1.0 / 10000.0);
    EXPECT_NEAR(p.theta[0] + p.theta[1], 1.0, 1e-12);
    mean += p.theta[0];
  }
  mean /= 10000.0;
  // Var(theta0) = 1/44 for Dirichlet(5,5); 0.02 is about 13 standard errors.
  EXPECT_NEAR(mean, 0.5, 0.02);
}

TEST(Materialize, DeterministicInSeed) {
  const auto a = materialize(DirichletCounts{{1, 2, 3}}, 50, 7);
  const auto b = materialize(DirichletCounts{{1, 2, 3}}, 50, 7);
  const auto c = materialize(DirichletCounts{{1, 2, 3}}, 50, 8);
  for (std::size_t k = 0; k < 50; ++k) EXPECT_EQ(a.particles[k].theta, b.particles[k].theta);
  EXPECT_NE(a.particles[0].theta, c.particles[0].theta);
}

TEST(Materialize, RejectsZeroSamples) {
  expect_error(Errc::PreconditionViolation, [] { materialize(DirichletCounts{{1, 1}}, 0, 1); });
}

TEST(ValidateBelief, Invariants) {
  EXPECT_NO_THROW(validate_belief(PointMass{{0.25, 0.75}}));
  expect_error(Errc::InvalidBelief, [] { validate_belief(PointMass{{0.25, 0.7}}); });
  expect_error(Errc::InvalidBelief, [] { validate_belief(FiniteMixture{{{0.5, {1.0}}, {0.4, {1.0}}}}); });
  expect_error(Errc::InvalidBelief, [] { validate_belief(DirichletCounts{{1.0, 0.0}}); });
}

TEST(Tilt, SingleParticleIsIdentity) {
  for (double beta : {-kInf, -400.0, -1.0, 0.0, 2.0, 400.0, kInf}) {
    const auto t = tilt(FiniteMixture{{{1.0, {1.0}}}}, beta, std::vector<double>{1.0});
    EXPECT_DOUBLE_EQ(t.log_partition, 1.0) << beta;
    EXPECT_EQ(t.weights, std::vector<double>{1.0});
  }
}

TEST(Tilt, FiniteBetaMatchesDirectFormula) {
  const std::vector<double> w{0.5, 0.5}, x{0.0, 1.0};
  const auto t = tilt(w, 1.0, x);
  const long double expected = naive_log_partition(w, x, 1.0L);
  EXPECT_NEAR(t.log_partition, static_cast<double>(expected), 1e-15);
  EXPECT_NEAR(t.log_partition, 0.620115, 1e-6);
  const long double e = std::exp(1.0L);
  EXPECT_NEAR(t.weights[0], static_cast<double>(1.0L / (1.0L + e)), 1e-15);
  EXPECT_NEAR(t.weights[1], static_cast<double>(e / (1.0L + e)), 1e-15);
  EXPECT_NEAR(t.weights[0], 0.2689, 1e-4);
}

TEST(Tilt, Limits) {
  const std::vector<double> w{0.5, 0.5}, x{0.0, 1.0};
  const auto worst = tilt(w, -kInf, x);
  EXPECT_EQ(worst.log_partition, 0.0);
  EXPECT_EQ(worst.weights, (std::vector<double>{1.0, 0.0}));
  const auto best = tilt(w, kInf, x);
  EXPECT_EQ(best.log_partition, 1.0);
  EXPECT_EQ(best.weights, (std::vector<double>{0.0, 1.0}));
  const auto bayes = tilt(w, 0.0, x);
  EXPECT_EQ(bayes.log_partition, 0.5);
  EXPECT_EQ(bayes.weights, (std::vector<double>{0.5, 0.5}));
}

TEST(Tilt, InfiniteBetaSplitsTies) {
  const auto t = tilt(std::vector<double>{0.2, 0.3, 0.5}, kInf, std::vector<double>{2.0, 1.0, 2.0});
  EXPECT_EQ(t.weights, (std::vector<double>{0.5, 0.0, 0.5}));
}

TEST(Tilt, LargeBetaDoesNotOverflow) {
  // |beta x| around 4000: naive exponentiation overflows a double.
  const std::vector<double> w{0.25, 0.75}, x{10.0, 9.0};
  const auto t = tilt(w, 400.0, x);
  const double expected = 10.0 + std::log(0.25 + 0.75 * std::exp(-400.0)) / 400.0;
  EXPECT_NEAR(t.log_partition, expected, 1e-12);
  const auto n = tilt(w, -400.0, x);
  EXPECT_NEAR(n.log_partition, 9.0 - std::log(0.75 + 0.25 * std::exp(-400.0)) / 400.0, 1e-12);
}

TEST(Tilt, RejectsNonFiniteValues) {
  expect_error(Errc::NonFiniteValue, [] { tilt(std::vector<double>{1.0}, 1.0, std::vector<double>{kInf}); });
  expect_error(Errc::NonFiniteValue,
               [] { tilt(std::vector<double>{0.5, 0.5}, 0.0, std::vector<double>{0.0, std::nan("")}); });
}

TEST(KlDivergence, Examples) {
  EXPECT_EQ(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}), 0.0);
  const std::vector<double> p{0.7311, 0.2689}, q{0.5, 0.5};
  const double kl = kl_divergence(p, q);
  EXPECT_NEAR(kl, static_cast<double>(naive_kl(p, q)), 1e-15);
  EXPECT_NEAR(kl, 0.1110, 5e-5);  // inputs carry four digits
  EXPECT_EQ(kl_divergence(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}), std::log(2.0));
}

TEST(KlDivergence, RejectsMissingSupport) {
  expect_error(Errc::AbsoluteContinuityViolation,
               [] { kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}); });
}

// Properties.

struct RandomTilt {
  std::vector<double> w, x;
};

RandomTilt random_tilt(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> n(1, 8);
  const auto k = n(rng);
  return {testing::random_simplex(k, rng), testing::random_vector(k, rng, 10.0)};
}

TEST(TiltProperty, VariationalInequality) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> beta_dist(-20.0, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = random_tilt(rng);
    double beta = beta_dist(rng);
    if (beta == 0.0) beta = 1.0;
    const auto t = tilt(inst.w, beta, inst.x);
    auto objective = [&](const std::vector<double>& psi) {
      double e = 0.0;
      for (std::size_t k = 0; k < psi.size(); ++k) e += psi[k] * inst.x[k];
      return e - kl_divergence(psi, inst.w) / beta;
    };
    EXPECT_NEAR(objective(t.weights), t.log_partition, 1e-8);
    for (int j = 0; j < 5; ++j) {
      const auto other = testing::random_simplex(inst.w.size(), rng);
      if (beta > 0) EXPECT_GE(t.log_partition, objective(other) - 1e-9);
      else EXPECT_LE(t.log_partition, objective(other) + 1e-9);
    }
  }
}

TEST(TiltProperty, MonotoneInBeta) {
  std::mt19937_64 rng(32);
  const std::vector<double> betas{-kInf, -400, -20, -1, -1e-3, 0, 1e-3, 1, 20, 400, kInf};
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_tilt(rng);
    double prev = -kInf;
    for (double beta : betas) {
      const double u = tilt(inst.w, beta, inst.x).log_partition;
      EXPECT_GE(u, prev - 1e-12) << "beta " << beta;
      prev = u;
    }
  }
}

TEST(TiltProperty, SmallBetaApproachesMean) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_tilt(rng);
    const double mean = tilt(inst.w, 0.0, inst.x).log_partition;
    const auto [lo, hi] = std::minmax_element(inst.x.begin(), inst.x.end());
    const double range = *hi - *lo;
    for (double beta : {1e-6, -1e-6}) EXPECT_NEAR(tilt(inst.w, beta, inst.x).log_partition, mean, 1e-4 * range + 1e-15);
  }
}

TEST(TiltProperty, ShiftInvariance) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_tilt(rng);
    const double c = shift(rng);
    auto moved = inst.x;
    for (auto& v : moved) v += c;
    for (double beta : {-kInf, -50.0, -0.5, 0.0, 0.5, 50.0, kInf}) {
      const auto a = tilt(inst.w, beta, inst.x);
      const auto b = tilt(inst.w, beta, moved);
      EXPECT_NEAR(b.log_partition, a.log_partition + c, 1e-10);
      for (std::size_t k = 0; k < a.weights.size(); ++k) EXPECT_NEAR(a.weights[k], b.weights[k], 1e-10);
    }
  }
}

TEST(TiltProperty, WeightsNormalizeAndStayInSupport) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_tilt(rng);
    inst.w[0] = 0.0;  // a zero-weight particle must stay at zero
    const double rest = std::accumulate(inst.w.begin(), inst.w.end(), 0.0);
    if (rest == 0.0) continue;
    for (auto& v : inst.w) v /= rest;
    for (double beta : {-kInf, -3.0, 0.0, 3.0, kInf}) {
      const auto t = tilt(inst.w, beta, inst.x);
      EXPECT_NEAR(std::accumulate(t.weights.begin(), t.weights.end(), 0.0), 1.0, 1e-10);
      EXPECT_EQ(t.weights[0], 0.0);
      EXPECT_GE(kl_divergence(t.weights, inst.w), 0.0);
    }
  }
}

}  // namespace
}  // namespace fevi
