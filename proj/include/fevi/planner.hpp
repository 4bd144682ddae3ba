#pragma once

// Free-energy value iteration: the generalized Bellman operator combining a
// KL-bounded policy (alpha) with KL-tilted model beliefs (beta).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fevi/belief.hpp"
#include "fevi/errors.hpp"
#include "fevi/mdp.hpp"
#include "fevi/numeric.hpp"
#include "fevi/rng.hpp"

namespace fevi {

enum class StopRule { ResidualBased, TheoremBound };

struct PlannerConfig {
  double alpha = kInf;  // (0, +inf]
  double beta = 0.0;    // [-inf, +inf]
  double epsilon = 1e-6;
  std::size_t max_iterations = 100000;
  StopRule stop_rule = StopRule::ResidualBased;
  std::size_t particle_count = 256;
  std::uint64_t master_seed = 0;
  std::optional<Policy> prior_policy;  // uniform when empty
  FreeEnergyVector initial_free_energy;  // zeros when empty
};

/// Materialized particle set per state-action pair.
using MixtureSet = std::vector<FiniteMixture>;

struct PlanResult {
  FreeEnergyVector free_energy;
  Policy policy;
  std::vector<BiasedBelief> biased_beliefs;  // per pair
  std::vector<double> action_values;         // per pair, U(a,s)
  std::size_t iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> kl_policy;  // per state
  std::vector<double> kl_belief;  // per pair
  double wall_time_seconds = 0.0;
};

class MaxIterationsExceededError : public Error {
 public:
  MaxIterationsExceededError(PlanResult best_so_far)
      : Error(Errc::MaxIterationsExceeded,
              "no convergence after " + std::to_string(best_so_far.iterations) + " sweeps (residual " +
                  std::to_string(best_so_far.final_residual) + ")"),
        result_(std::move(best_so_far)) {}

  const PlanResult& best_so_far() const { return result_; }

 private:
  PlanResult result_;
};

inline void validate_config(const Mdp& mdp, const PlannerConfig& config) {
  if (!(config.alpha > 0.0)) throw Error(Errc::PreconditionViolation, "alpha must be > 0");
  if (std::isnan(config.beta)) throw Error(Errc::PreconditionViolation, "beta is NaN");
  if (!(config.epsilon > 0.0)) throw Error(Errc::PreconditionViolation, "epsilon must be > 0");
  if (config.prior_policy) {
    const auto& rho = *config.prior_policy;
    if (rho.probs.size() != mdp.n_states()) throw Error(Errc::PreconditionViolation, "prior policy has wrong state count");
    for (StateId s = 0; s < mdp.n_states(); ++s) {
      const auto row = rho.row(s);
      if (row.size() != mdp.actions(s).size())
        throw Error(Errc::PreconditionViolation, "prior policy row size mismatch at state " + std::to_string(s));
      double total = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw Error(Errc::PreconditionViolation, "negative prior probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) throw Error(Errc::PreconditionViolation, "prior row does not sum to 1");
    }
  }
  if (!config.initial_free_energy.empty() && config.initial_free_energy.size() != mdp.n_states())
    throw Error(Errc::PreconditionViolation, "initial free energy has wrong size");
}

/// Dirichlet seed for pair `pair` under a master seed.
inline std::uint64_t particle_seed(std::uint64_t master_seed, std::size_t pair) {
  return derive_seed(master_seed, "particles", pair);
}

/// Materializes one pair's belief for planning. Dirichlet beliefs collapse to
/// their exact mean when beta == 0 and are sampled otherwise.
inline FiniteMixture materialize_pair(const BeliefModel& belief, std::size_t pair, const PlannerConfig& config) {
  if (const auto* d = std::get_if<DirichletCounts>(&belief); d && config.beta == 0.0)
    return FiniteMixture{{{1.0, dirichlet_mean(*d)}}};
  return materialize(belief, config.particle_count, particle_seed(config.master_seed, pair));
}

inline MixtureSet materialize_beliefs(const Mdp& mdp, const BeliefSet& beliefs, const PlannerConfig& config) {
  if (beliefs.size() != mdp.n_pairs())
    throw Error(Errc::PreconditionViolation, "need one belief per state-action pair");
  MixtureSet out;
  out.reserve(beliefs.size());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k) {
      const auto pair = mdp.pair_index(s, k);
      validate_belief(beliefs[pair]);
      if (support_size(beliefs[pair]) != mdp.action(s, k).outcomes.size())
        throw Error(Errc::InvalidBelief, "belief support does not match outcomes at state " + std::to_string(s));
      out.push_back(materialize_pair(beliefs[pair], pair, config));
    }
  }
  return out;
}

/// Per-particle backup values x_k = E_theta_k[r + gamma F(s')].
inline void particle_values(const ActionEntry& action, const FiniteMixture& mixture, std::span<const double> F,
                            double discount, std::vector<double>& out) {
  out.resize(mixture.particles.size());
  for (std::size_t k = 0; k < mixture.particles.size(); ++k)
    out[k] = expected_backup(action, mixture.particles[k].theta, F, discount);
}

struct ActionFreeEnergy {
  double value;
  BiasedBelief psi;
};

inline ActionFreeEnergy action_free_energy(const Mdp& mdp, StateId s, std::size_t slot, std::span<const double> F,
                                           const FiniteMixture& mixture, double beta) {
  std::vector<double> x;
  particle_values(mdp.action(s, slot), mixture, F, mdp.discount(), x);
  auto psi = tilt(mixture, beta, x);
  return {psi.log_partition, std::move(psi)};
}

/// (1/alpha) log sum_a rho_a exp(alpha U_a); alpha = +inf gives the max over
/// actions in the support of rho.
inline double aggregate_actions(std::span<const double> rho, std::span<const double> values, double alpha) {
  if (std::isinf(alpha)) {
    double best = -kInf;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (rho[k] > 0.0) best = std::max(best, values[k]);
    return best;
  }
  return scaled_log_sum_exp(rho, values, alpha);
}

/// pi*(a|s) ∝ rho(a|s) exp(alpha U(a,s)); alpha = +inf is uniform over the argmax.
inline std::vector<double> policy_row(std::span<const double> rho, std::span<const double> values, double alpha) {
  if (std::isinf(alpha)) return uniform_over_extremes(rho, values, true);
  return tilted_weights(rho, values, alpha);
}

inline Policy extract_policy(const Mdp& mdp, std::span<const double> action_values, const Policy& rho, double alpha) {
  for (double u : action_values)
    if (!std::isfinite(u)) throw Error(Errc::NonFiniteValue, "action value is not finite");
  Policy pi;
  pi.probs.resize(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto n = mdp.actions(s).size();
    pi.probs[s] = policy_row(rho.row(s), action_values.subspan(mdp.first_pair(s), n), alpha);
  }
  return pi;
}

namespace detail {

/// Reusable state for repeated sweeps over a fixed particle model.
class Sweeper {
 public:
  Sweeper(const Mdp& mdp, const MixtureSet& mixtures, const PlannerConfig& config)
      : mdp_(mdp), mixtures_(mixtures), config_(config),
        rho_(config.prior_policy ? *config.prior_policy : uniform_policy(mdp)) {
    weights_.reserve(mixtures.size());
    for (const auto& m : mixtures) weights_.push_back(m.weights());
  }

  const Policy& prior() const { return rho_; }

  /// Writes U(F) into `values` and BF into `out`.
  void sweep(std::span<const double> F, std::vector<double>& values, FreeEnergyVector& out) {
    values.resize(mdp_.n_pairs());
    out.resize(mdp_.n_states());
    for (StateId s = 0; s < mdp_.n_states(); ++s) {
      const auto n = mdp_.actions(s).size();
      for (std::size_t k = 0; k < n; ++k) {
        const auto pair = mdp_.pair_index(s, k);
        particle_values(mdp_.action(s, k), mixtures_[pair], F, mdp_.discount(), scratch_);
        values[pair] = log_partition(weights_[pair], scratch_, config_.beta);
      }
      const double bf =
          aggregate_actions(rho_.row(s), std::span<const double>(values).subspan(mdp_.first_pair(s), n), config_.alpha);
      if (!std::isfinite(bf))
        throw Error(Errc::NonFiniteFreeEnergy, "free energy of state " + std::to_string(s) + " is not finite");
      out[s] = bf;
    }
  }

  std::vector<BiasedBelief> biased_beliefs(std::span<const double> F) {
    std::vector<BiasedBelief> psi;
    psi.reserve(mdp_.n_pairs());
    for (StateId s = 0; s < mdp_.n_states(); ++s)
      for (std::size_t k = 0; k < mdp_.actions(s).size(); ++k) {
        const auto pair = mdp_.pair_index(s, k);
        particle_values(mdp_.action(s, k), mixtures_[pair], F, mdp_.discount(), scratch_);
        psi.push_back(tilt(weights_[pair], config_.beta, scratch_));
      }
    return psi;
  }

  const std::vector<double>& mixture_weights(std::size_t pair) const { return weights_[pair]; }

 private:
  const Mdp& mdp_;
  const MixtureSet& mixtures_;
  const PlannerConfig& config_;
  Policy rho_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> scratch_;
};

}  // namespace detail

struct BackupResult {
  FreeEnergyVector free_energy;
  std::vector<double> action_values;
  std::vector<BiasedBelief> biased_beliefs;
};

/// One synchronous application of the generalized Bellman operator.
inline BackupResult bellman_operator(std::span<const double> F, const Mdp& mdp, const MixtureSet& mixtures,
                                     const PlannerConfig& config) {
  validate_config(mdp, config);
  if (mixtures.size() != mdp.n_pairs()) throw Error(Errc::PreconditionViolation, "need one mixture per pair");
  for (double f : F)
    if (!std::isfinite(f)) throw Error(Errc::NonFiniteValue, "input free energy is not finite");
  detail::Sweeper sweeper(mdp, mixtures, config);
  BackupResult out;
  sweeper.sweep(F, out.action_values, out.free_energy);
  out.biased_beliefs = sweeper.biased_beliefs(F);
  return out;
}

/// Sweeps needed from F = 0 to be within epsilon of the fixed point:
/// ceil(log_gamma(epsilon (1 - gamma) / eta)). Zero when eta == 0.
inline std::size_t theorem2_iterations(double gamma, double epsilon, double eta) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(Errc::PreconditionViolation, "gamma must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw Error(Errc::PreconditionViolation, "epsilon must be > 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw Error(Errc::PreconditionViolation, "eta must be finite and >= 0");
  if (eta == 0.0) return 0;
  if (!(epsilon < eta / (1.0 - gamma)))
    throw Error(Errc::PreconditionViolation, "epsilon must be below eta / (1 - gamma)");
  const double i = std::log(epsilon * (1.0 - gamma) / eta) / std::log(gamma);
  return static_cast<std::size_t>(std::ceil(i));
}

namespace detail {

inline void fill_diagnostics(const Mdp& mdp, const MixtureSet& mixtures, const Sweeper& sweeper, PlanResult& r) {
  r.kl_policy.resize(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) r.kl_policy[s] = kl_divergence(r.policy.row(s), sweeper.prior().row(s));
  r.kl_belief.resize(mdp.n_pairs());
  for (std::size_t pair = 0; pair < mixtures.size(); ++pair)
    r.kl_belief[pair] = kl_divergence(r.biased_beliefs[pair].weights, sweeper.mixture_weights(pair));
}

}  // namespace detail

/// Generalized value iteration over a fixed particle model. Starts from
/// config.initial_free_energy (zeros by default). The returned free energy is
/// the last iterate B F_prev; action values, policy and tilted beliefs are
/// those of F_prev, so the returned F is exactly the soft-max of the returned U.
inline PlanResult value_iteration(const Mdp& mdp, const MixtureSet& mixtures, const PlannerConfig& config) {
  const auto start_time = std::chrono::steady_clock::now();
  const auto bounds = validate_mdp(mdp);
  validate_config(mdp, config);
  if (mixtures.size() != mdp.n_pairs()) throw Error(Errc::PreconditionViolation, "need one mixture per pair");

  const double g = mdp.discount();
  std::size_t sweeps_to_run = config.max_iterations;
  if (config.stop_rule == StopRule::TheoremBound) {
    if (bounds.eta > 0.0 && !(config.epsilon < bounds.eta / (1.0 - g)))
      throw Error(Errc::PreconditionViolation, "TheoremBound needs epsilon < eta / (1 - gamma)");
    sweeps_to_run = theorem2_iterations(g, config.epsilon, bounds.eta);
  }
  const double threshold = config.epsilon * std::min(1.0, (1.0 - g) / g);

  detail::Sweeper sweeper(mdp, mixtures, config);
  FreeEnergyVector prev =
      config.initial_free_energy.empty() ? FreeEnergyVector(mdp.n_states(), 0.0) : config.initial_free_energy;
  FreeEnergyVector next;
  std::vector<double> values;

  PlanResult result;
  bool converged = false;
  if (sweeps_to_run == 0 && config.stop_rule == StopRule::TheoremBound) {
    sweeper.sweep(prev, values, next);
    next = prev;
    converged = true;
  }
  while (!converged && result.iterations < sweeps_to_run) {
    if (result.iterations > 0) prev.swap(next);
    sweeper.sweep(prev, values, next);
    ++result.iterations;
    result.final_residual = sup_norm_distance(next, prev);
    if (config.stop_rule == StopRule::ResidualBased) converged = result.final_residual <= threshold;
    else converged = result.iterations == sweeps_to_run;
  }

  result.free_energy = next;
  result.action_values = values;
  result.converged = converged;
  result.policy = extract_policy(mdp, result.action_values, sweeper.prior(), config.alpha);
  result.biased_beliefs = sweeper.biased_beliefs(prev);
  detail::fill_diagnostics(mdp, mixtures, sweeper, result);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  if (!converged) throw MaxIterationsExceededError(std::move(result));
  return result;
}

inline PlanResult value_iteration(const Mdp& mdp, const BeliefSet& beliefs, const PlannerConfig& config) {
  return value_iteration(mdp, materialize_beliefs(mdp, beliefs, config), config);
}

/// 1/beta with the limits 1/(+-inf) = 0; the beta == 0 coefficient is only
/// used together with a zero divergence.
inline double inverse_temperature_cost(double param, double divergence) {
  if (std::isinf(param)) return 0.0;
  if (param == 0.0) {
    if (divergence > 1e-12)
      throw Error(Errc::PreconditionViolation, "beta = 0 requires the biased belief to equal the prior belief");
    return 0.0;
  }
  return divergence / param;
}

/// T_{pi,psi} F = g + gamma P F for a fixed policy-belief pair, where g carries
/// the expected reward minus both KL costs.
inline FreeEnergyVector policy_evaluation_operator(std::span<const double> F, const Policy& pi,
                                                   const std::vector<BiasedBelief>& psi, const Mdp& mdp,
                                                   const MixtureSet& mixtures, const PlannerConfig& config) {
  const Policy rho = config.prior_policy ? *config.prior_policy : uniform_policy(mdp);
  FreeEnergyVector out(mdp.n_states());
  std::vector<double> x;
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto pi_row = pi.row(s);
    double acc = 0.0;
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k) {
      if (pi_row[k] <= 0.0) continue;
      const auto pair = mdp.pair_index(s, k);
      const auto& mix = mixtures[pair];
      particle_values(mdp.action(s, k), mix, F, mdp.discount(), x);
      double inner = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) inner += psi[pair].weights[j] * x[j];
      inner -= inverse_temperature_cost(config.beta, kl_divergence(psi[pair].weights, mix.weights()));
      acc += pi_row[k] * inner;
    }
    acc -= inverse_temperature_cost(config.alpha, kl_divergence(pi_row, rho.row(s)));
    out[s] = acc;
  }
  return out;
}

/// Fixed point of T_{pi,psi}, iterated until successive iterates are within
/// eps * min(1, (1-gamma)/gamma).
inline FreeEnergyVector evaluate_policy_belief_pair(const Policy& pi, const std::vector<BiasedBelief>& psi,
                                                    const Mdp& mdp, const MixtureSet& mixtures,
                                                    const PlannerConfig& config, double eps,
                                                    std::size_t max_iterations = 1000000) {
  const double g = mdp.discount();
  const double threshold = eps * std::min(1.0, (1.0 - g) / g);
  FreeEnergyVector f(mdp.n_states(), 0.0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    auto next = policy_evaluation_operator(f, pi, psi, mdp, mixtures, config);
    const double delta = sup_norm_distance(next, f);
    f = std::move(next);
    if (delta <= threshold) return f;
  }
  throw Error(Errc::MaxIterationsExceeded, "policy evaluation did not converge");
}

}  // namespace fevi
