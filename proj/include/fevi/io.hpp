#pragma once

// Text formats: plan CSVs, rollout heat maps, learning curves and the belief
// table. Numbers are written in shortest round-trip form with a '.' decimal
// separator regardless of locale.

#include <charconv>
#include <fstream>
#include <istream>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fevi/belief.hpp"
#include "fevi/errors.hpp"
#include "fevi/gridworld.hpp"
#include "fevi/mdp.hpp"
#include "fevi/planner.hpp"
#include "fevi/sim.hpp"

namespace fevi {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Parses a double including the literals inf / -inf / +inf.
inline double parse_double(std::string_view text) {
  if (text == "inf" || text == "+inf") return kInf;
  if (text == "-inf") return -kInf;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(Errc::ParseError, "not a number: '" + std::string(text) + "'");
  return v;
}

inline std::size_t parse_index(std::string_view text) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(Errc::ParseError, "not an index: '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = text.find(sep, pos);
    out.push_back(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (auto f : split(line, ',')) fields.emplace_back(f);
    if (first) table.header = std::move(fields);
    else table.rows.push_back(std::move(fields));
    first = false;
  }
  return table;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

/// Integers go through the stream, so pin the classic locale (no digit grouping).
inline std::ostream& classic(std::ostream& out) {
  out.imbue(std::locale::classic());
  return out;
}

}  // namespace detail

inline void write_free_energy_csv(std::ostream& out, const FreeEnergyVector& f) {
  detail::classic(out) << "state,free_energy\n";
  for (std::size_t s = 0; s < f.size(); ++s) out << s << ',' << format_double(f[s]) << '\n';
}

inline void write_policy_csv(std::ostream& out, const Mdp& mdp, const Policy& pi) {
  detail::classic(out) << "state,action,probability\n";
  for (StateId s = 0; s < mdp.n_states(); ++s)
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k)
      out << s << ',' << mdp.action(s, k).id << ',' << format_double(pi.probs[s][k]) << '\n';
}

inline void write_action_values_csv(std::ostream& out, const Mdp& mdp, const PlanResult& plan) {
  detail::classic(out) << "state,action,U,kl_belief\n";
  for (StateId s = 0; s < mdp.n_states(); ++s)
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k) {
      const auto pair = mdp.pair_index(s, k);
      out << s << ',' << mdp.action(s, k).id << ',' << format_double(plan.action_values[pair]) << ','
          << format_double(plan.kl_belief[pair]) << '\n';
    }
}

/// Wall time is optional so that repeated runs can produce identical files.
inline void write_diagnostics_csv(std::ostream& out, const PlanResult& plan, bool with_timing) {
  detail::classic(out) << "iterations,residual,wall_time_s\n";
  out << plan.iterations << ',' << format_double(plan.final_residual) << ','
      << (with_timing ? format_double(plan.wall_time_seconds) : std::string()) << '\n';
}

inline void write_heatmap_csv(std::ostream& out, const std::vector<HeatCell>& cells) {
  detail::classic(out) << "row,col,normalized_visits\n";
  for (const auto& c : cells) out << c.row << ',' << c.col << ',' << format_double(c.value) << '\n';
}

inline void write_learn_curve_csv(std::ostream& out, const LearnCurve& curve) {
  detail::classic(out) << "step,n_observations,mean_reward,std_reward\n";
  for (const auto& r : curve.records)
    out << r.step << ',' << r.n_observations << ',' << format_double(r.mean_reward) << ','
        << format_double(r.std_reward) << '\n';
}

inline std::vector<LearnRecord> read_learn_curve_csv(std::istream& in) {
  const auto table = read_csv(in);
  std::vector<LearnRecord> out;
  for (const auto& row : table.rows) {
    if (row.size() != 4) throw Error(Errc::ParseError, "learn curve rows need 4 fields");
    out.push_back({parse_index(row[0]), parse_index(row[1]), parse_double(row[2]), parse_double(row[3])});
  }
  return out;
}

namespace detail {

template <typename Range, typename Fn>
std::string join(const Range& items, Fn&& fmt) {
  std::string out;
  bool first = true;
  for (const auto& item : items) {
    if (!first) out += ';';
    out += fmt(item);
    first = false;
  }
  return out;
}

}  // namespace detail

/// Belief table: one row per state-action pair with its successor support and
/// either Dirichlet counts or point-mass probabilities.
///   state,action,kind,support,values
///   4,1,dirichlet,3;5;0,2;1;1
inline void write_belief_table(std::ostream& out, const Mdp& mdp, const BeliefSet& beliefs) {
  detail::classic(out) << "state,action,kind,support,values\n";
  for (StateId s = 0; s < mdp.n_states(); ++s)
    for (std::size_t k = 0; k < mdp.actions(s).size(); ++k) {
      const auto& action = mdp.action(s, k);
      const auto& belief = beliefs[mdp.pair_index(s, k)];
      out << s << ',' << action.id << ',';
      const std::vector<double>* values = nullptr;
      if (const auto* d = std::get_if<DirichletCounts>(&belief)) {
        out << "dirichlet";
        values = &d->counts;
      } else if (const auto* pm = std::get_if<PointMass>(&belief)) {
        out << "point";
        values = &pm->theta;
      } else {
        throw Error(Errc::InvalidBelief, "finite mixtures are not part of the belief table format");
      }
      out << ',' << detail::join(action.outcomes, [](const Outcome& o) { return std::to_string(o.next); }) << ','
          << detail::join(*values, [](double v) { return format_double(v); }) << '\n';
    }
}

inline BeliefSet read_belief_table(std::istream& in, const Mdp& mdp) {
  const auto table = read_csv(in);
  if (table.rows.size() != mdp.n_pairs())
    throw Error(Errc::ParseError, "belief table has " + std::to_string(table.rows.size()) + " rows, expected " +
                                      std::to_string(mdp.n_pairs()));
  BeliefSet beliefs(mdp.n_pairs());
  std::vector<bool> filled(mdp.n_pairs(), false);
  for (const auto& row : table.rows) {
    if (row.size() != 5) throw Error(Errc::ParseError, "belief table rows need 5 fields");
    const auto s = parse_index(row[0]);
    if (s >= mdp.n_states()) throw Error(Errc::ParseError, "state out of range");
    const auto slot = mdp.slot_of(s, static_cast<ActionId>(parse_index(row[1])));
    if (slot == Mdp::npos) throw Error(Errc::ParseError, "unknown action in belief table");
    const auto& action = mdp.action(s, slot);
    const auto support = split(row[3], ';');
    if (support.size() != action.outcomes.size()) throw Error(Errc::ParseError, "support size mismatch");
    for (std::size_t i = 0; i < support.size(); ++i)
      if (parse_index(support[i]) != action.outcomes[i].next) throw Error(Errc::ParseError, "support mismatch");
    std::vector<double> values;
    for (auto v : split(row[4], ';')) values.push_back(parse_double(v));
    if (values.size() != support.size()) throw Error(Errc::ParseError, "value count mismatch");
    const auto pair = mdp.pair_index(s, slot);
    if (row[2] == "dirichlet") beliefs[pair] = DirichletCounts{std::move(values)};
    else if (row[2] == "point") beliefs[pair] = PointMass{std::move(values)};
    else throw Error(Errc::ParseError, "unknown belief kind '" + row[2] + "'");
    validate_belief(beliefs[pair]);
    filled[pair] = true;
  }
  for (bool f : filled)
    if (!f) throw Error(Errc::ParseError, "belief table is missing a state-action pair");
  return beliefs;
}

}  // namespace fevi
