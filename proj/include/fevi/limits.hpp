#pragma once

// Independent reference planners for the limiting cases of the free-energy
// recursion, and a checker comparing the planner against them.

#include <string>
#include <vector>

#include "fevi/belief.hpp"
#include "fevi/gridworld.hpp"
#include "fevi/mdp.hpp"
#include "fevi/planner.hpp"

namespace fevi {

enum class ModelSense { WorstCase, BestCase };

/// V(s) = max_a ext_k E_{theta_k}[r + gamma V(s')] where ext ranges over the
/// particles with positive weight. Plain loops, no log-partition machinery.
inline FreeEnergyVector robust_value_iteration(const Mdp& mdp, const MixtureSet& mixtures, ModelSense sense,
                                               double eps, std::size_t max_iterations = 1000000) {
  validate_mdp(mdp);
  const double g = mdp.discount();
  const double threshold = eps * std::min(1.0, (1.0 - g) / g);
  FreeEnergyVector v(mdp.n_states(), 0.0);
  FreeEnergyVector next(mdp.n_states());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (StateId s = 0; s < mdp.n_states(); ++s) {
      double best_action = -kInf;
      for (std::size_t k = 0; k < mdp.actions(s).size(); ++k) {
        const auto& action = mdp.action(s, k);
        double ext = sense == ModelSense::WorstCase ? kInf : -kInf;
        for (const auto& particle : mixtures[mdp.pair_index(s, k)].particles) {
          if (particle.weight <= 0.0) continue;
          double q = 0.0;
          for (std::size_t i = 0; i < action.outcomes.size(); ++i)
            q += particle.theta[i] * (action.outcomes[i].reward + g * v[action.outcomes[i].next]);
          ext = sense == ModelSense::WorstCase ? std::min(ext, q) : std::max(ext, q);
        }
        best_action = std::max(best_action, ext);
      }
      next[s] = best_action;
    }
    const double delta = sup_norm_distance(next, v);
    v.swap(next);
    if (delta <= threshold) return v;
  }
  throw Error(Errc::MaxIterationsExceeded, "robust value iteration did not converge");
}

/// Mean transition model of a belief set (the Bayesian planner's model).
inline TransitionModel mean_model(const BeliefSet& beliefs) {
  TransitionModel model;
  model.reserve(beliefs.size());
  for (const auto& b : beliefs) model.push_back(mean_transition(b));
  return model;
}

struct LimitCase {
  std::string name;
  bool passed;
  double max_error;
  double tolerance;
};

/// Compares alpha = +inf planning against the classic (true model), Bayesian
/// (Dirichlet mean), robust (beta = -inf) and optimistic (beta = +inf) references.
inline std::vector<LimitCase> run_limit_ladder(const CompiledGrid& grid, double epsilon, std::size_t particle_count,
                                               std::uint64_t seed) {
  const auto& mdp = grid.mdp;
  const double tol = 2.0 * epsilon;
  std::vector<LimitCase> cases;
  auto record = [&](std::string name, const FreeEnergyVector& planned, const FreeEnergyVector& reference) {
    const double err = sup_norm_distance(planned, reference);
    cases.push_back({std::move(name), err <= tol, err, tol});
  };

  PlannerConfig config;
  config.alpha = kInf;
  config.epsilon = epsilon;
  config.particle_count = particle_count;
  config.master_seed = seed;

  {
    BeliefSet exact;
    for (const auto& row : grid.env.rows) exact.emplace_back(PointMass{row});
    config.beta = 0.0;
    record("classic", value_iteration(mdp, exact, config).free_energy,
           classic_value_iteration(mdp, grid.env.rows, epsilon));
  }
  {
    config.beta = 0.0;
    record("bayesian", value_iteration(mdp, grid.belief_template, config).free_energy,
           classic_value_iteration(mdp, mean_model(grid.belief_template), epsilon));
  }
  // Robust and optimistic cases share one particle set, sampled independently of beta.
  config.beta = 1.0;
  const MixtureSet mixtures = materialize_beliefs(mdp, grid.belief_template, config);
  {
    config.beta = -kInf;
    record("robust", value_iteration(mdp, mixtures, config).free_energy,
           robust_value_iteration(mdp, mixtures, ModelSense::WorstCase, epsilon));
  }
  {
    config.beta = kInf;
    record("optimistic", value_iteration(mdp, mixtures, config).free_energy,
           robust_value_iteration(mdp, mixtures, ModelSense::BestCase, epsilon));
  }
  return cases;
}

}  // namespace fevi
