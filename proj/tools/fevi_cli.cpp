// Command-line front end: plan, simulate, learn and limits-check on ASCII maps.
//
// Exit codes: 0 ok, 1 failed limit check, 2 bad configuration, 3 unreadable or
// invalid map, 4 planner failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "fevi/fevi.hpp"

namespace fs = std::filesystem;
using namespace fevi;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfigError = 2, kParseFailure = 3, kPlannerFailure = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string map_path;
  std::string alpha = "inf";
  std::string beta = "0";
  double gamma = 0.9;
  double epsilon = 1e-6;
  std::size_t max_iterations = 100000;
  std::string stop_rule = "residual";
  std::size_t particles = 256;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::size_t rollout_steps = 20000;
  std::string source = "believed";
  std::size_t steps = 300;
  std::size_t eval_runs = 10;
  std::size_t eval_length = 2000;
  bool timing = false;
};

double parse_extended(const std::string& name, const std::string& text) {
  try {
    return parse_double(text);
  } catch (const Error&) {
    throw ConfigError("--" + name + ": expected a number, inf or -inf, got '" + text + "'");
  }
}

PlannerConfig planner_config(const RunOptions& o) {
  PlannerConfig c;
  c.alpha = parse_extended("alpha", o.alpha);
  c.beta = parse_extended("beta", o.beta);
  c.epsilon = o.epsilon;
  c.max_iterations = o.max_iterations;
  c.particle_count = o.particles;
  c.master_seed = o.seed;
  c.stop_rule = o.stop_rule == "theorem" ? StopRule::TheoremBound : StopRule::ResidualBased;
  if (!(c.alpha > 0.0)) throw ConfigError("--alpha must be > 0");
  if (std::isnan(c.beta)) throw ConfigError("--beta must not be nan");
  if (!(o.gamma > 0.0 && o.gamma < 1.0)) throw ConfigError("--gamma must lie in (0, 1)");
  if (!(o.epsilon > 0.0)) throw ConfigError("--epsilon must be > 0");
  if (o.particles == 0) throw ConfigError("--particles must be >= 1");
  return c;
}

// Files are collected in memory and written only after every step succeeded,
// so a failing run leaves no partial outputs behind.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  std::ostream& file(const std::string& name) {
    auto& s = files_[name];
    s.imbue(std::locale::classic());
    return s;
  }

  void flush() const {
    fs::create_directories(dir_);
    for (const auto& [name, text] : files_) {
      std::ofstream out(dir_ / name, std::ios::binary);
      out << text.str();
      if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    }
  }

 private:
  fs::path dir_;
  std::map<std::string, std::ostringstream> files_;
};

void write_log(std::ostream& log, const std::string& command, const RunOptions& o, const PlannerConfig& c) {
  log << "fevi " << kVersion << '\n'
      << "command " << command << '\n'
      << "map " << o.map_path << '\n'
      << "alpha " << format_double(c.alpha) << '\n'
      << "beta " << format_double(c.beta) << '\n'
      << "gamma " << format_double(o.gamma) << '\n'
      << "epsilon " << format_double(o.epsilon) << '\n'
      << "stop_rule " << o.stop_rule << '\n'
      << "particles " << o.particles << '\n'
      << "seed " << o.seed << '\n';
}

CompiledGrid load_grid(const RunOptions& o) { return compile_mdp(parse_map(read_text_file(o.map_path)), o.gamma); }

int run_plan(const RunOptions& o, bool simulate) {
  const auto config = planner_config(o);
  const auto grid = load_grid(o);
  const auto mixtures = materialize_beliefs(grid.mdp, grid.belief_template, config);
  const auto plan = value_iteration(grid.mdp, mixtures, config);

  const bool believed = o.source == "believed";
  const DynamicsSource source = believed ? DynamicsSource{BelievedModel{std::cref(mixtures), std::cref(plan.biased_beliefs)}}
                                         : DynamicsSource{TrueEnv{std::cref(grid.env)}};
  Rng rng = make_rng(o.seed, "rollout");
  const auto report = rollout(grid.mdp, plan.policy, source, grid.start, o.rollout_steps, rng);

  Outputs out(o.output_dir);
  if (!simulate) {
    write_free_energy_csv(out.file("free_energy.csv"), plan.free_energy);
    write_policy_csv(out.file("policy.csv"), grid.mdp, plan.policy);
    write_action_values_csv(out.file("action_values.csv"), grid.mdp, plan);
    write_diagnostics_csv(out.file("diagnostics.csv"), plan, o.timing);
  }
  write_heatmap_csv(out.file("heatmap.csv"), heatmap(grid, report));
  auto& log = out.file("run.log");
  write_log(log, simulate ? "simulate" : "plan", o, config);
  log << "iterations " << plan.iterations << '\n'
      << "residual " << format_double(plan.final_residual) << '\n'
      << "rollout_source " << o.source << '\n'
      << "rollout_steps " << o.rollout_steps << '\n'
      << "rollout_reward_per_step " << format_double(report.total_reward / static_cast<double>(o.rollout_steps)) << '\n';
  out.flush();

  std::cout << "iterations " << plan.iterations << ", residual " << format_double(plan.final_residual)
            << ", F(start) " << format_double(plan.free_energy[grid.start]) << '\n';
  return kOk;
}

int run_learn(const RunOptions& o) {
  const auto config = planner_config(o);
  if (o.steps == 0) throw ConfigError("--steps must be >= 1");
  if (o.eval_runs == 0 || o.eval_length == 0) throw ConfigError("--eval-runs and --eval-length must be >= 1");
  const auto grid = load_grid(o);
  EvalSpec spec{o.eval_runs, o.eval_length, o.source == "true" ? EvalSource::TrueEnv : EvalSource::BelievedModel};
  const auto curve = learn_loop(grid, config, o.steps, spec, o.seed);

  Outputs out(o.output_dir);
  write_learn_curve_csv(out.file("learn_curve.csv"), curve);
  write_belief_table(out.file("beliefs.csv"), grid.mdp, curve.final_beliefs);
  auto& log = out.file("run.log");
  write_log(log, "learn", o, config);
  const auto& last = curve.records.back();
  log << "steps " << o.steps << '\n'
      << "eval_runs " << o.eval_runs << '\n'
      << "eval_length " << o.eval_length << '\n'
      << "eval_source " << o.source << '\n'
      << "final_iterations " << curve.final_plan.iterations << '\n'
      << "observations " << last.n_observations << '\n';
  out.flush();

  std::cout << "final mean reward " << format_double(last.mean_reward) << ", observations " << last.n_observations
            << '\n';
  return kOk;
}

int run_limits(const RunOptions& o) {
  if (!(o.epsilon > 0.0)) throw ConfigError("--epsilon must be > 0");
  if (o.particles == 0) throw ConfigError("--particles must be >= 1");
  if (!(o.gamma > 0.0 && o.gamma < 1.0)) throw ConfigError("--gamma must lie in (0, 1)");
  const auto grid = load_grid(o);
  bool all = true;
  for (const auto& c : run_limit_ladder(grid, o.epsilon, o.particles, o.seed)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " max_error=" << format_double(c.max_error)
              << " tolerance=" << format_double(c.tolerance) << '\n';
    all = all && c.passed;
  }
  return all ? kOk : kCheckFailed;
}

bool is_map_error(Errc code) {
  switch (code) {
    case Errc::NonRectangular:
    case Errc::UnknownCell:
    case Errc::MissingStart:
    case Errc::MissingGoal:
    case Errc::MultipleStart:
    case Errc::MultipleGoal:
    case Errc::ArrowIntoWall:
    case Errc::GoalUnreachable:
    case Errc::ParseError:
      return true;
    default:
      return false;
  }
}

void add_common(CLI::App* cmd, RunOptions& o, bool planning) {
  cmd->add_option("--map", o.map_path, "ASCII map file")->required();
  cmd->add_option("--gamma", o.gamma, "discount factor in (0, 1)")->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "convergence target")->capture_default_str();
  cmd->add_option("--particles", o.particles, "Dirichlet particles per state-action pair")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  if (!planning) return;
  cmd->add_option("--alpha", o.alpha, "policy inverse temperature in (0, inf]")->capture_default_str();
  cmd->add_option("--beta", o.beta, "belief inverse temperature in [-inf, inf]")->capture_default_str();
  cmd->add_option("--max-iterations", o.max_iterations, "sweep limit for residual stopping")->capture_default_str();
  cmd->add_option("--stop-rule", o.stop_rule, "residual or theorem")
      ->check(CLI::IsMember({"residual", "theorem"}))
      ->capture_default_str();
  cmd->add_option("--output-dir", o.output_dir, "directory for output files")->capture_default_str();
  cmd->add_flag("--timing", o.timing, "record wall time in diagnostics.csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-energy value iteration on gridworld maps"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  RunOptions o;

  auto* plan = app.add_subcommand("plan", "plan and write F, policy, action values, diagnostics and a heat map");
  add_common(plan, o, true);
  plan->add_option("--rollout-steps", o.rollout_steps, "heat map rollout length")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "plan, then roll out under the believed model or the true world");
  add_common(simulate, o, true);
  simulate->add_option("--rollout-steps", o.rollout_steps, "rollout length")->capture_default_str();
  simulate->add_option("--source", o.source, "believed or true")
      ->check(CLI::IsMember({"believed", "true"}))
      ->capture_default_str();

  auto* learn = app.add_subcommand("learn", "act, update beliefs on chance tiles, replan");
  add_common(learn, o, true);
  learn->add_option("--steps", o.steps, "interaction steps")->capture_default_str();
  learn->add_option("--eval-runs", o.eval_runs, "evaluation rollouts per snapshot")->capture_default_str();
  learn->add_option("--eval-length", o.eval_length, "steps per evaluation rollout")->capture_default_str();
  learn->add_option("--source", o.source, "evaluation dynamics: believed or true")
      ->check(CLI::IsMember({"believed", "true"}))
      ->capture_default_str();

  auto* limits = app.add_subcommand("limits-check", "compare limiting cases against reference planners");
  add_common(limits, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*plan) return run_plan(o, false);
    if (*simulate) return run_plan(o, true);
    if (*learn) return run_learn(o);
    return run_limits(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    if (is_map_error(e.code())) return kParseFailure;
    if (e.code() == Errc::PreconditionViolation || e.code() == Errc::DiscountOutOfRange) return kConfigError;
    return kPlannerFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPlannerFailure;
  }
}
