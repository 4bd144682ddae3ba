#pragma once

// Rollouts for visit heat maps and the learn / act / replan loop.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <variant>
#include <vector>

#include "fevi/belief.hpp"
#include "fevi/errors.hpp"
#include "fevi/gridworld.hpp"
#include "fevi/mdp.hpp"
#include "fevi/planner.hpp"
#include "fevi/rng.hpp"

namespace fevi {

/// Successors drawn by first picking a particle from psi(.|a,s), then a
/// successor from that particle's transition vector.
struct BelievedModel {
  std::reference_wrapper<const MixtureSet> mixtures;
  std::reference_wrapper<const std::vector<BiasedBelief>> psi;
};

struct TrueEnv {
  std::reference_wrapper<const EnvDynamics> env;
};

using DynamicsSource = std::variant<BelievedModel, TrueEnv>;

struct RolloutReport {
  std::vector<std::size_t> visit_counts;  // includes the initial state
  std::vector<double> normalized_visits;
  double total_reward = 0.0;
  std::size_t steps = 0;

  bool operator==(const RolloutReport&) const = default;
};

namespace detail {

inline std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  return cdf;
}

/// Precomputed cumulative tables for repeated sampling from a fixed source.
class TransitionSampler {
 public:
  TransitionSampler(const Mdp& mdp, const DynamicsSource& source) {
    const auto n = mdp.n_pairs();
    if (const auto* env = std::get_if<TrueEnv>(&source)) {
      outcome_cdfs_.resize(n);
      for (std::size_t pair = 0; pair < n; ++pair) outcome_cdfs_[pair].push_back(cumulative(env->env.get().rows[pair]));
      particle_cdfs_.assign(n, {1.0});
    } else {
      const auto& b = std::get<BelievedModel>(source);
      const auto& mixtures = b.mixtures.get();
      const auto& psi = b.psi.get();
      outcome_cdfs_.resize(n);
      particle_cdfs_.resize(n);
      for (std::size_t pair = 0; pair < n; ++pair) {
        particle_cdfs_[pair] = cumulative(psi[pair].weights);
        for (std::size_t k = 0; k < mixtures[pair].particles.size(); ++k) {
          // Particles with zero tilted weight are never drawn.
          if (psi[pair].weights[k] > 0.0) outcome_cdfs_[pair].push_back(cumulative(mixtures[pair].particles[k].theta));
          else outcome_cdfs_[pair].emplace_back();
        }
      }
    }
  }

  std::size_t sample_outcome(std::size_t pair, Rng& rng) const {
    const auto& particles = particle_cdfs_[pair];
    const std::size_t k = particles.size() == 1 ? 0 : sample_cdf(particles, rng);
    const auto& cdf = outcome_cdfs_[pair][k];
    return cdf.size() == 1 ? 0 : sample_cdf(cdf, rng);
  }

 private:
  std::vector<std::vector<double>> particle_cdfs_;
  std::vector<std::vector<std::vector<double>>> outcome_cdfs_;
};

}  // namespace detail

/// Runs `steps` transitions under `policy`, counting visits (initial state
/// included, so counts sum to steps + 1) and accumulating reward.
inline RolloutReport rollout(const Mdp& mdp, const Policy& policy, const DynamicsSource& source, StateId start,
                             std::size_t steps, Rng& rng) {
  detail::TransitionSampler sampler(mdp, source);
  std::vector<std::vector<double>> action_cdfs(mdp.n_states());
  auto action_cdf = [&](StateId s) -> const std::vector<double>& {
    auto& cdf = action_cdfs[s];
    if (cdf.empty()) {
      if (s >= policy.probs.size() || policy.probs[s].size() != mdp.actions(s).size())
        throw Error(Errc::MissingPolicyRow, "no policy row for state " + std::to_string(s));
      cdf = detail::cumulative(policy.probs[s]);
    }
    return cdf;
  };

  RolloutReport report;
  report.visit_counts.assign(mdp.n_states(), 0);
  report.steps = steps;
  StateId s = start;
  ++report.visit_counts[s];
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& cdf = action_cdf(s);
    const std::size_t slot = cdf.size() == 1 ? 0 : sample_cdf(cdf, rng);
    const auto pair = mdp.pair_index(s, slot);
    const auto& o = mdp.action(s, slot).outcomes[sampler.sample_outcome(pair, rng)];
    report.total_reward += o.reward;
    s = o.next;
    ++report.visit_counts[s];
  }
  report.normalized_visits.resize(mdp.n_states());
  for (StateId i = 0; i < mdp.n_states(); ++i)
    report.normalized_visits[i] = static_cast<double>(report.visit_counts[i]) / static_cast<double>(steps + 1);
  return report;
}

struct HeatCell {
  int row;
  int col;
  double value;  // -1 marks a wall
};

/// Row-major heat map over every cell of the grid. Goal and hole cells are
/// never occupied (entering them teleports) and read 0.
inline std::vector<HeatCell> heatmap(const CompiledGrid& grid, const RolloutReport& report) {
  std::vector<HeatCell> out;
  for (int r = 0; r < grid.map.height(); ++r)
    for (int c = 0; c < grid.map.width(); ++c) {
      double v = 0.0;
      if (grid.map.at({r, c}).kind == CellKind::Wall) v = -1.0;
      else if (auto s = grid.state_at({r, c})) v = report.normalized_visits[*s];
      out.push_back({r, c, v});
    }
  return out;
}

enum class EvalSource { BelievedModel, TrueEnv };

struct EvalSpec {
  std::size_t runs = 10;
  std::size_t run_length = 2000;
  EvalSource source = EvalSource::BelievedModel;
};

struct LearnRecord {
  std::size_t step;
  std::size_t n_observations;
  double mean_reward;
  double std_reward;

  bool operator==(const LearnRecord&) const = default;
};

struct LearnCurve {
  std::vector<LearnRecord> records;
  BeliefSet final_beliefs;
  PlanResult final_plan;
};

struct EvalStats {
  double mean;
  double std;
};

/// Mean and sample standard deviation of per-step reward over independent runs
/// from the start state.
inline EvalStats evaluate_plan(const CompiledGrid& grid, const PlanResult& plan, const MixtureSet& mixtures,
                               const EvalSpec& spec, Rng& rng) {
  DynamicsSource source = spec.source == EvalSource::BelievedModel
                              ? DynamicsSource{BelievedModel{std::cref(mixtures), std::cref(plan.biased_beliefs)}}
                              : DynamicsSource{TrueEnv{std::cref(grid.env)}};
  std::vector<double> per_step(spec.runs);
  for (std::size_t r = 0; r < spec.runs; ++r) {
    const auto report = rollout(grid.mdp, plan.policy, source, grid.start, spec.run_length, rng);
    per_step[r] = report.total_reward / static_cast<double>(spec.run_length);
  }
  const double mean = std::accumulate(per_step.begin(), per_step.end(), 0.0) / static_cast<double>(spec.runs);
  double var = 0.0;
  for (double v : per_step) var += (v - mean) * (v - mean);
  var = spec.runs > 1 ? var / static_cast<double>(spec.runs - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

/// Plan, execute the first action in the true environment, update the
/// Dirichlet belief when acting from a chance tile, replan. Every chance-tile
/// observation triggers an evaluation of the updated plan; an initial
/// evaluation before the first step seeds the curve. One record per step.
inline LearnCurve learn_loop(const CompiledGrid& grid, const PlannerConfig& base_config, std::size_t interaction_steps,
                             const EvalSpec& eval_spec, std::uint64_t seed, bool warm_start = true) {
  if (interaction_steps == 0) throw Error(Errc::PreconditionViolation, "interaction_steps must be >= 1");
  if (eval_spec.runs == 0 || eval_spec.run_length == 0)
    throw Error(Errc::PreconditionViolation, "evaluation needs at least one run of positive length");
  const auto& mdp = grid.mdp;
  PlannerConfig config = base_config;
  config.master_seed = derive_seed(seed, "planner");
  const bool can_warm_start = warm_start && config.stop_rule == StopRule::ResidualBased;

  LearnCurve curve;
  curve.final_beliefs = grid.belief_template;
  auto& beliefs = curve.final_beliefs;
  MixtureSet mixtures = materialize_beliefs(mdp, beliefs, config);

  Rng act_rng = make_rng(seed, "actions");
  Rng env_rng = make_rng(seed, "environment");
  std::uint64_t evaluations = 0;

  auto replan = [&](const PlanResult* previous) {
    if (can_warm_start && previous) config.initial_free_energy = previous->free_energy;
    return value_iteration(mdp, mixtures, config);
  };
  auto evaluate = [&](const PlanResult& plan) {
    Rng eval_rng = make_rng(seed, "evaluation", evaluations++);
    return evaluate_plan(grid, plan, mixtures, eval_spec, eval_rng);
  };

  PlanResult plan = replan(nullptr);
  EvalStats stats = evaluate(plan);
  std::size_t observations = 0;
  StateId s = grid.start;
  curve.records.reserve(interaction_steps);
  for (std::size_t t = 1; t <= interaction_steps; ++t) {
    const auto row = plan.policy.row(s);
    const auto cdf = detail::cumulative(row);
    const std::size_t slot = cdf.size() == 1 ? 0 : sample_cdf(cdf, act_rng);
    const auto pair = mdp.pair_index(s, slot);
    const auto result = step(mdp, grid.env, s, mdp.action(s, slot).id, env_rng);
    if (grid.chance_pair[pair]) {
      beliefs[pair] = posterior_update(std::get<DirichletCounts>(beliefs[pair]), result.outcome);
      mixtures[pair] = materialize_pair(beliefs[pair], pair, config);
      ++observations;
      plan = replan(&plan);
      stats = evaluate(plan);
    }
    curve.records.push_back({t, observations, stats.mean, stats.std});
    s = result.next;
  }
  curve.final_plan = std::move(plan);
  return curve;
}

}  // namespace fevi
