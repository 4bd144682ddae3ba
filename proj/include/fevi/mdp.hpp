#pragma once

// Finite MDP structure shared by the planner, the oracles and the gridworld.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fevi/errors.hpp"
#include "fevi/numeric.hpp"

namespace fevi {

using StateId = std::size_t;
using ActionId = int;

/// One reachable result of taking an action. The same successor state may
/// appear in several outcomes with different rewards (e.g. a gridworld goal
/// and hole both teleport to the start).
struct Outcome {
  StateId next;
  double reward;
};

struct ActionEntry {
  ActionId id;
  std::vector<Outcome> outcomes;
};

/// Immutable finite MDP. Actions are addressed either by (state, slot) where
/// slot indexes actions(state), or by a dense pair index over all (s, slot).
class Mdp {
 public:
  Mdp() = default;

  Mdp(std::vector<std::vector<ActionEntry>> actions, double discount)
      : actions_(std::move(actions)), discount_(discount) {
    offsets_.reserve(actions_.size() + 1);
    offsets_.push_back(0);
    for (const auto& row : actions_) offsets_.push_back(offsets_.back() + row.size());
  }

  std::size_t n_states() const { return actions_.size(); }
  std::size_t n_pairs() const { return offsets_.empty() ? 0 : offsets_.back(); }
  double discount() const { return discount_; }

  std::span<const ActionEntry> actions(StateId s) const { return actions_[s]; }
  const ActionEntry& action(StateId s, std::size_t slot) const { return actions_[s][slot]; }

  std::size_t pair_index(StateId s, std::size_t slot) const { return offsets_[s] + slot; }
  std::size_t first_pair(StateId s) const { return offsets_[s]; }

  /// Slot of action id `a` in state `s`, or npos if unavailable.
  std::size_t slot_of(StateId s, ActionId a) const {
    const auto& row = actions_[s];
    for (std::size_t k = 0; k < row.size(); ++k)
      if (row[k].id == a) return k;
    return npos;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::vector<ActionEntry>> actions_;
  std::vector<std::size_t> offsets_;
  double discount_ = 0.9;
};

/// F(s) per state.
using FreeEnergyVector = std::vector<double>;

/// Per-state distribution over that state's action slots.
struct Policy {
  std::vector<std::vector<double>> probs;

  std::span<const double> row(StateId s) const { return probs[s]; }
};

inline Policy uniform_policy(const Mdp& mdp) {
  Policy p;
  p.probs.resize(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto n = mdp.actions(s).size();
    p.probs[s].assign(n, 1.0 / static_cast<double>(n));
  }
  return p;
}

/// Transition probabilities over each pair's outcome list, indexed by pair.
using TransitionModel = std::vector<std::vector<double>>;

struct RewardBounds {
  double eta;
  double lower;
  double upper;
};

/// Checks the structural invariants and returns the reward bounds.
inline RewardBounds validate_mdp(const Mdp& mdp) {
  const double g = mdp.discount();
  if (!(g > 0.0 && g < 1.0))
    throw Error(Errc::DiscountOutOfRange, "discount must lie in (0, 1), got " + std::to_string(g));
  double lo = kInf;
  double hi = -kInf;
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto acts = mdp.actions(s);
    if (acts.empty()) throw Error(Errc::EmptyActionSet, "state " + std::to_string(s));
    for (std::size_t k = 0; k < acts.size(); ++k) {
      if (acts[k].outcomes.empty())
        throw Error(Errc::EmptySupport,
                    "state " + std::to_string(s) + " action " + std::to_string(acts[k].id));
      for (const auto& o : acts[k].outcomes) {
        if (!std::isfinite(o.reward))
          throw Error(Errc::NonFiniteReward, "state " + std::to_string(s));
        if (o.next >= mdp.n_states())
          throw Error(Errc::PreconditionViolation, "successor out of range in state " + std::to_string(s));
        lo = std::min(lo, o.reward);
        hi = std::max(hi, o.reward);
      }
    }
  }
  if (mdp.n_states() == 0) throw Error(Errc::PreconditionViolation, "MDP has no states");
  return {std::max(std::abs(lo), std::abs(hi)), lo, hi};
}

inline void check_stochastic(const Mdp& mdp, const TransitionModel& model) {
  if (model.size() != mdp.n_pairs())
    throw Error(Errc::NonStochasticModel, "model size does not match the number of state-action pairs");
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k) {
      const auto& row = model[mdp.pair_index(s, k)];
      if (row.size() != mdp.action(s, k).outcomes.size())
        throw Error(Errc::NonStochasticModel, "row length mismatch at state " + std::to_string(s));
      double total = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw Error(Errc::NonStochasticModel, "negative probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw Error(Errc::NonStochasticModel, "row at state " + std::to_string(s) + " sums to " +
                                                  std::to_string(total));
    }
  }
}

/// Expected one-step backup sum_i p_i (r_i + gamma V(next_i)).
inline double expected_backup(const ActionEntry& action, std::span<const double> probs,
                              std::span<const double> values, double discount) {
  double acc = 0.0;
  for (std::size_t i = 0; i < action.outcomes.size(); ++i) {
    const auto& o = action.outcomes[i];
    acc += probs[i] * (o.reward + discount * values[o.next]);
  }
  return acc;
}

/// One synchronous standard Bellman backup under a known model.
inline FreeEnergyVector classic_backup(const Mdp& mdp, const TransitionModel& model,
                                       std::span<const double> values) {
  FreeEnergyVector out(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    double best = -kInf;
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k)
      best = std::max(best, expected_backup(mdp.action(s, k), model[mdp.pair_index(s, k)], values,
                                            mdp.discount()));
    out[s] = best;
  }
  return out;
}

/// Standard value iteration with a known model. Stops once successive iterates
/// are within eps*min(1, (1-gamma)/gamma), which bounds both the distance to the
/// optimum and the Bellman residual of the returned vector by eps.
inline FreeEnergyVector classic_value_iteration(const Mdp& mdp, const TransitionModel& model,
                                                double eps, std::size_t max_iterations = 1000000) {
  validate_mdp(mdp);
  check_stochastic(mdp, model);
  const double g = mdp.discount();
  const double threshold = eps * std::min(1.0, (1.0 - g) / g);
  FreeEnergyVector v(mdp.n_states(), 0.0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    auto next = classic_backup(mdp, model, v);
    const double delta = sup_norm_distance(next, v);
    v = std::move(next);
    if (delta <= threshold) return v;
  }
  throw Error(Errc::MaxIterationsExceeded, "classic value iteration did not converge");
}

/// Greedy policy w.r.t. values: uniform over maximizing actions.
inline Policy greedy_policy(const Mdp& mdp, const TransitionModel& model,
                            std::span<const double> values) {
  Policy p;
  p.probs.resize(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto n = mdp.actions(s).size();
    std::vector<double> q(n);
    for (std::size_t k = 0; k < n; ++k)
      q[k] = expected_backup(mdp.action(s, k), model[mdp.pair_index(s, k)], values, mdp.discount());
    std::vector<double> ones(n, 1.0);
    p.probs[s] = uniform_over_extremes(ones, q, true);
  }
  return p;
}

}  // namespace fevi
