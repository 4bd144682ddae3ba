#include <gtest/gtest.h>

#include <cmath>
#include <locale>
#include <random>
#include <sstream>

#include "test_support.hpp"

namespace fevi {
namespace {

using testing::expect_error;

std::string map_path(const std::string& name) { return std::string(FEVI_MAP_DIR) + "/" + name; }

// Digit grouping every three digits with an apostrophe, comma decimal point.
struct GroupingPunct : std::numpunct<char> {
  char do_decimal_point() const override { return ','; }
  char do_thousands_sep() const override { return '\''; }
  std::string do_grouping() const override { return "\3"; }
};

TEST(Numbers, ExtendedRealLiterals) {
  EXPECT_EQ(parse_double("inf"), kInf);
  EXPECT_EQ(parse_double("+inf"), kInf);
  EXPECT_EQ(parse_double("-inf"), -kInf);
  EXPECT_EQ(parse_double("0"), 0.0);
  EXPECT_EQ(parse_double("-400"), -400.0);
  EXPECT_EQ(parse_double("+0.5"), 0.5);
  EXPECT_EQ(format_double(kInf), "inf");
  EXPECT_EQ(format_double(-kInf), "-inf");
  expect_error(Errc::ParseError, [] { parse_double("3,5"); });
  expect_error(Errc::ParseError, [] { parse_double("abc"); });
  expect_error(Errc::ParseError, [] { parse_double(""); });
  expect_error(Errc::ParseError, [] { parse_index("-1"); });
}

TEST(Numbers, ShortestFormRoundTrips) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = d(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-0.01), "-0.01");
}

TEST(Csv, WritersIgnoreStreamLocale) {
  std::ostringstream out;
  out.imbue(std::locale(std::locale::classic(), new GroupingPunct));
  FreeEnergyVector f(1500, 0.5);
  write_free_energy_csv(out, f);
  std::istringstream in(out.str());
  const auto table = read_csv(in);
  ASSERT_EQ(table.rows.size(), 1500u);
  EXPECT_EQ(table.rows[1234][0], "1234");
  EXPECT_EQ(table.rows[1234][1], "0.5");
}

TEST(Csv, PlanOutputsFollowSchemas) {
  const auto g = compile_mdp(parse_map(read_text_file(map_path("smoke.map"))));
  PlannerConfig c;
  c.alpha = 3.0;
  c.beta = -2.0;
  const auto plan = value_iteration(g.mdp, g.belief_template, c);

  std::ostringstream fe, pol, av, diag;
  write_free_energy_csv(fe, plan.free_energy);
  write_policy_csv(pol, g.mdp, plan.policy);
  write_action_values_csv(av, g.mdp, plan);
  write_diagnostics_csv(diag, plan, false);

  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
  };
  const auto t_fe = parse(fe.str());
  EXPECT_EQ(t_fe.header, (std::vector<std::string>{"state", "free_energy"}));
  ASSERT_EQ(t_fe.rows.size(), g.mdp.n_states());
  for (StateId s = 0; s < g.mdp.n_states(); ++s) EXPECT_EQ(parse_double(t_fe.rows[s][1]), plan.free_energy[s]);

  const auto t_pol = parse(pol.str());
  EXPECT_EQ(t_pol.header, (std::vector<std::string>{"state", "action", "probability"}));
  EXPECT_EQ(t_pol.rows.size(), g.mdp.n_pairs());

  const auto t_av = parse(av.str());
  EXPECT_EQ(t_av.header, (std::vector<std::string>{"state", "action", "U", "kl_belief"}));
  ASSERT_EQ(t_av.rows.size(), g.mdp.n_pairs());
  for (std::size_t pair = 0; pair < g.mdp.n_pairs(); ++pair)
    EXPECT_EQ(parse_double(t_av.rows[pair][2]), plan.action_values[pair]);

  const auto t_diag = parse(diag.str());
  EXPECT_EQ(t_diag.header, (std::vector<std::string>{"iterations", "residual", "wall_time_s"}));
  ASSERT_EQ(t_diag.rows.size(), 1u);
  EXPECT_EQ(parse_index(t_diag.rows[0][0]), plan.iterations);
  EXPECT_EQ(t_diag.rows[0][2], "");
}

TEST(Csv, LearnCurveRoundTrips) {
  LearnCurve curve;
  curve.records = {{1, 0, -0.0123, 0.001}, {2, 1, 0.25, 0.0}, {3, 1, 1.0 / 3.0, 1e-17}};
  std::stringstream io;
  write_learn_curve_csv(io, curve);
  EXPECT_EQ(read_learn_curve_csv(io), curve.records);
}

TEST(BeliefTable, RoundTripIsBitExact) {
  const auto g = compile_mdp(parse_map(read_text_file(map_path("fig1_friendly.map"))));
  auto beliefs = g.belief_template;
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> count(0.1, 50.0);
  for (auto& b : beliefs)
    if (auto* d = std::get_if<DirichletCounts>(&b))
      for (auto& c : d->counts) c = count(rng);
  std::stringstream io;
  write_belief_table(io, g.mdp, beliefs);
  const auto text = io.str();
  const auto back = read_belief_table(io, g.mdp);
  ASSERT_EQ(back.size(), beliefs.size());
  for (std::size_t pair = 0; pair < beliefs.size(); ++pair) {
    ASSERT_EQ(back[pair].index(), beliefs[pair].index());
    if (const auto* d = std::get_if<DirichletCounts>(&beliefs[pair]))
      EXPECT_EQ(std::get<DirichletCounts>(back[pair]).counts, d->counts);
    else
      EXPECT_EQ(std::get<PointMass>(back[pair]).theta, std::get<PointMass>(beliefs[pair]).theta);
  }
  std::ostringstream again;
  write_belief_table(again, g.mdp, back);
  EXPECT_EQ(again.str(), text);
}

TEST(BeliefTable, RejectsMalformedInput) {
  const auto g = compile_mdp(parse_map("S>G"));
  std::ostringstream out;
  write_belief_table(out, g.mdp, g.belief_template);
  const auto good = out.str();
  auto read = [&](const std::string& text) {
    std::istringstream in(text);
    return read_belief_table(in, g.mdp);
  };
  EXPECT_NO_THROW(read(good));
  expect_error(Errc::ParseError, [&] { read("state,action,kind,support,values\n"); });
  std::string bad_kind = good;
  bad_kind.replace(bad_kind.find("dirichlet"), 9, "gaussian");
  expect_error(Errc::ParseError, [&] { read(bad_kind); });
  std::string bad_count = good;
  bad_count.replace(bad_count.rfind("1;1"), 3, "1;0");
  expect_error(Errc::InvalidBelief, [&] { read(bad_count); });
}

TEST(BeliefTable, RejectsMixtures) {
  Mdp mdp({{ActionEntry{0, {{0, 0.0}}}}}, 0.9);
  std::ostringstream out;
  expect_error(Errc::InvalidBelief,
               [&] { write_belief_table(out, mdp, BeliefSet{FiniteMixture{{{1.0, {1.0}}}}}); });
}

TEST(Files, MissingFileIsParseError) {
  expect_error(Errc::ParseError, [] { read_text_file(map_path("does_not_exist.map")); });
}

}  // namespace
}  // namespace fevi
