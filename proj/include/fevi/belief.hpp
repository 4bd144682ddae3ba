#pragma once

// Beliefs over per-(s,a) transition vectors, their particle materialization,
// and exponential tilting toward optimistic or pessimistic models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fevi/errors.hpp"
#include "fevi/numeric.hpp"
#include "fevi/rng.hpp"

namespace fevi {

struct TransitionParticle {
  double weight;
  std::vector<double> theta;
};

struct PointMass {
  std::vector<double> theta;
};

struct FiniteMixture {
  std::vector<TransitionParticle> particles;

  std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(particles.size());
    for (const auto& p : particles) w.push_back(p.weight);
    return w;
  }
};

struct DirichletCounts {
  std::vector<double> counts;
};

using BeliefModel = std::variant<PointMass, FiniteMixture, DirichletCounts>;

/// One belief per state-action pair, indexed like Mdp::pair_index.
using BeliefSet = std::vector<BeliefModel>;

/// Tilted particle weights psi and the scaled log-partition U.
struct BiasedBelief {
  std::vector<double> weights;
  double log_partition;
};

namespace detail {

inline void check_probability_vector(std::span<const double> v, double tol, const char* what) {
  double total = 0.0;
  for (double p : v) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(Errc::InvalidBelief, std::string(what) + " has a negative entry");
    total += p;
  }
  if (v.empty() || std::abs(total - 1.0) > tol)
    throw Error(Errc::InvalidBelief, std::string(what) + " does not sum to 1");
}

}  // namespace detail

/// Size of the successor support the belief is defined over.
inline std::size_t support_size(const BeliefModel& belief) {
  return std::visit(
      [](const auto& b) -> std::size_t {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, PointMass>) return b.theta.size();
        else if constexpr (std::is_same_v<T, FiniteMixture>)
          return b.particles.empty() ? 0 : b.particles.front().theta.size();
        else return b.counts.size();
      },
      belief);
}

inline void validate_belief(const BeliefModel& belief) {
  std::visit(
      [](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          detail::check_probability_vector(b.theta, 1e-12, "point mass");
        } else if constexpr (std::is_same_v<T, FiniteMixture>) {
          if (b.particles.empty()) throw Error(Errc::InvalidBelief, "empty mixture");
          double total = 0.0;
          for (const auto& p : b.particles) {
            if (!(p.weight >= 0.0)) throw Error(Errc::InvalidBelief, "negative particle weight");
            if (p.theta.size() != b.particles.front().theta.size())
              throw Error(Errc::InvalidBelief, "particles disagree on support size");
            detail::check_probability_vector(p.theta, 1e-12, "particle");
            total += p.weight;
          }
          if (std::abs(total - 1.0) > 1e-12) throw Error(Errc::InvalidBelief, "mixture weights do not sum to 1");
        } else {
          if (b.counts.empty()) throw Error(Errc::InvalidBelief, "empty Dirichlet");
          for (double c : b.counts)
            if (!(c > 0.0) || !std::isfinite(c)) throw Error(Errc::InvalidBelief, "Dirichlet counts must be positive");
        }
      },
      belief);
}

/// Increments the count of the observed support index.
inline DirichletCounts posterior_update(const DirichletCounts& belief, std::size_t observed) {
  if (observed >= belief.counts.size())
    throw Error(Errc::UnsupportedSuccessor,
                "successor index " + std::to_string(observed) + " outside a support of size " +
                    std::to_string(belief.counts.size()));
  DirichletCounts out = belief;
  out.counts[observed] += 1.0;
  return out;
}

inline std::vector<double> dirichlet_mean(const DirichletCounts& belief) {
  const double total = std::accumulate(belief.counts.begin(), belief.counts.end(), 0.0);
  std::vector<double> mean(belief.counts.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = belief.counts[i] / total;
  return mean;
}

/// Mean transition vector under any belief kind.
inline std::vector<double> mean_transition(const BeliefModel& belief) {
  if (const auto* pm = std::get_if<PointMass>(&belief)) return pm->theta;
  if (const auto* d = std::get_if<DirichletCounts>(&belief)) return dirichlet_mean(*d);
  const auto& mix = std::get<FiniteMixture>(belief);
  std::vector<double> mean(mix.particles.front().theta.size(), 0.0);
  for (const auto& p : mix.particles)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p.weight * p.theta[i];
  return mean;
}

inline std::vector<double> sample_dirichlet(std::span<const double> counts, Rng& rng) {
  std::vector<double> theta(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::gamma_distribution<double> gamma(counts[i], 1.0);
    theta[i] = gamma(rng);
    total += theta[i];
  }
  if (total <= 0.0) {
    // All draws underflowed; only possible for tiny shape parameters.
    std::fill(theta.begin(), theta.end(), 0.0);
    theta[std::distance(counts.begin(), std::max_element(counts.begin(), counts.end()))] = 1.0;
    return theta;
  }
  for (auto& t : theta) t /= total;
  return theta;
}

/// Particle approximation of a belief. Dirichlet counts are replaced by
/// `sample_count` i.i.d. draws with equal weight, deterministic in `seed`.
inline FiniteMixture materialize(const BeliefModel& belief, std::size_t sample_count, std::uint64_t seed) {
  if (const auto* pm = std::get_if<PointMass>(&belief)) return FiniteMixture{{{1.0, pm->theta}}};
  if (const auto* mix = std::get_if<FiniteMixture>(&belief)) return *mix;
  const auto& d = std::get<DirichletCounts>(belief);
  if (sample_count == 0) throw Error(Errc::PreconditionViolation, "sample_count must be >= 1");
  Rng rng(seed);
  FiniteMixture out;
  out.particles.reserve(sample_count);
  const double w = 1.0 / static_cast<double>(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) out.particles.push_back({w, sample_dirichlet(d.counts, rng)});
  return out;
}

/// Scaled log-partition U = (1/beta) log sum_k w_k exp(beta x_k) with the
/// beta -> 0 (mean) and beta -> +-inf (max/min) limits handled exactly.
inline double log_partition(std::span<const double> weights, std::span<const double> x, double beta) {
  if (beta == 0.0) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += weights[k] * x[k];
    return acc;
  }
  if (std::isinf(beta)) {
    double best = beta > 0 ? -kInf : kInf;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (weights[k] <= 0.0) continue;
      best = beta > 0 ? std::max(best, x[k]) : std::min(best, x[k]);
    }
    return best;
  }
  return scaled_log_sum_exp(weights, x, beta);
}

inline BiasedBelief tilt(std::span<const double> weights, double beta, std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "particle value is not finite");
  if (std::isnan(beta)) throw Error(Errc::PreconditionViolation, "beta is NaN");
  BiasedBelief out;
  out.log_partition = log_partition(weights, x, beta);
  if (beta == 0.0) out.weights.assign(weights.begin(), weights.end());
  else if (std::isinf(beta)) out.weights = uniform_over_extremes(weights, x, beta > 0);
  else out.weights = tilted_weights(weights, x, beta);
  return out;
}

inline BiasedBelief tilt(const FiniteMixture& mixture, double beta, std::span<const double> x) {
  return tilt(mixture.weights(), beta, x);
}

/// KL(p || q) in nats with 0 ln 0 = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0)
      throw Error(Errc::AbsoluteContinuityViolation, "p has mass where q has none (index " + std::to_string(i) + ")");
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(acc, 0.0);
}

}  // namespace fevi
