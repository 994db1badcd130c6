#include <gtest/gtest.h>

#include "rqa/config.hpp"

using namespace rqa;

namespace {

bool mentions(const ConfigParse& p, int line, const std::string& fragment) {
  for (const auto& i : p.issues)
    if (i.line == line && i.format().find(fragment) != std::string::npos) return true;
  return false;
}

std::string dump(const ConfigParse& p) {
  std::string s;
  for (const auto& i : p.issues) s += i.format() + "\n";
  return s;
}

}  // namespace

TEST(Config, MinimalSpectrumUsesNaturalDefaults) {
  const auto p = parse_config("scenario = kg-spectrum\ngrid_n = 9\ngrid_l = 1\n");
  ASSERT_TRUE(p.ok()) << dump(p);
  const auto& c = p.config;
  EXPECT_EQ(c.scenario, Scenario::KgSpectrum);
  EXPECT_EQ(c.units, Units::Natural);
  EXPECT_EQ(c.m, 1.0);
  EXPECT_EQ(c.c, 1.0);
  EXPECT_EQ(c.hbar, 1.0);
  EXPECT_EQ(c.gamma, 1.0);
  EXPECT_EQ(c.grid_n, std::vector<long>{9});
  EXPECT_EQ(c.eigen_dense_limit, 2048);
}

TEST(Config, GammaDefaultsToHbarSquaredOverMass) {
  const auto p = parse_config("scenario = kg-spectrum\ngrid_n = 9\ngrid_l = 1\nm = 4\nhbar = 3\n");
  ASSERT_TRUE(p.ok()) << dump(p);
  EXPECT_DOUBLE_EQ(p.config.gamma, 9.0 / 4.0);
  const auto q = parse_config("scenario = kg-spectrum\ngrid_n = 9\ngrid_l = 1\nm = 4\ngamma = 0.5\n");
  EXPECT_EQ(q.config.gamma, 0.5);
}

TEST(Config, SiUnitsFillPhysicalConstants) {
  const auto p = parse_config("scenario = kg-spectrum\nunits = si\ngrid_n = 9\ngrid_l = 1e-9\n");
  ASSERT_TRUE(p.ok()) << dump(p);
  EXPECT_EQ(p.config.c, 299792458.0);
  EXPECT_EQ(p.config.hbar, 1.054571817e-34);
  EXPECT_DOUBLE_EQ(p.config.gamma, p.config.hbar * p.config.hbar / p.config.m);
}

TEST(Config, CommentsAndBlankLines) {
  const auto p = parse_config("# header\n\nscenario = geometry-report  # trailing\nchart = unit-sphere\npoint = 1, 0.3\n");
  ASSERT_TRUE(p.ok()) << dump(p);
  EXPECT_EQ(p.config.chart, "unit-sphere");
  EXPECT_EQ(p.config.point, (std::vector<double>{1.0, 0.3}));
}

TEST(Config, MissingScenario) {
  const auto p = parse_config("grid_n = 9\n");
  ASSERT_FALSE(p.ok());
  EXPECT_TRUE(mentions(p, 0, "missing required key 'scenario'")) << dump(p);
}

TEST(Config, MissingScenarioKeys) {
  const auto p = parse_config("\nscenario = kg-evolve\ngrid_n = 9\ngrid_l = 1\n");
  EXPECT_TRUE(mentions(p, 0, "'dt'")) << dump(p);
  EXPECT_TRUE(mentions(p, 0, "'steps'")) << dump(p);
  EXPECT_TRUE(mentions(p, 0, "declared on line 2")) << dump(p);
}

TEST(Config, NegativeMassIsReportedOnItsLine) {
  const auto p = parse_config("scenario = kg-spectrum\ngrid_n = 9\ngrid_l = 1\nm = -1\n");
  ASSERT_FALSE(p.ok());
  EXPECT_TRUE(mentions(p, 4, "'m' must be positive")) << dump(p);
}

TEST(Config, UnknownDuplicateAndMalformedLines) {
  const auto p = parse_config(
      "scenario = kg-spectrum\n"
      "grid_n = 9\n"
      "grid_l = 1\n"
      "colour = blue\n"
      "grid_l = 2\n"
      "eigen_count = three\n"
      "no equals sign\n"
      "scenario_typo = x\n");
  EXPECT_TRUE(mentions(p, 4, "unknown key 'colour'")) << dump(p);
  EXPECT_TRUE(mentions(p, 5, "duplicate key 'grid_l' (first set on line 3)")) << dump(p);
  EXPECT_TRUE(mentions(p, 6, "invalid value for 'eigen_count'")) << dump(p);
  EXPECT_TRUE(mentions(p, 7, "expected 'key = value'")) << dump(p);
  EXPECT_TRUE(mentions(p, 8, "unknown key")) << dump(p);
}

TEST(Config, BadScenarioAndChoiceValues) {
  const auto p = parse_config("scenario = teleport\n");
  EXPECT_TRUE(mentions(p, 1, "invalid value for 'scenario'")) << dump(p);
  const auto q = parse_config("scenario = kg-evolve\ngrid_n = 9\ngrid_l = 1\ndt = 0.01\nsteps = 3\ninitial = spiral\n");
  EXPECT_TRUE(mentions(q, 6, "invalid value for 'initial'")) << dump(q);
}

TEST(Config, RangeChecks) {
  const auto p = parse_config(
      "scenario = kg-evolve\ngrid_n = 2\ngrid_l = 1\ndt = 0\nsteps = 0\ngrid_dims = 4\n");
  EXPECT_TRUE(mentions(p, 2, "'grid_n' entries must be >= 3")) << dump(p);
  EXPECT_TRUE(mentions(p, 4, "'dt' must be positive")) << dump(p);
  EXPECT_TRUE(mentions(p, 5, "'steps' must be >= 1")) << dump(p);
  EXPECT_TRUE(mentions(p, 6, "'grid_dims' must be 1, 2 or 3")) << dump(p);
}

TEST(Config, EchoRoundTrip) {
  for (const char* text : {
           "scenario = kg-spectrum\ngrid_n = 9\ngrid_l = 1\nm = 2.5\neigen_count = 4\n",
           "scenario = geometry-report\nchart = diag-warp\nchart_a = 1.3\npoint = 0.1, 0.2, 0.3, 0.4\n",
           "scenario = einstein-fit\ntarget = diag-warp\ntarget_a = 1.05\nmu0 = 0.1\npin_boundary = true\n",
           "scenario = kg-evolve\nunits = si\ngrid_dims = 2\ngrid_n = 9, 11\ngrid_l = 1e-9\ndt = 1e-20\nsteps = 5\n",
       }) {
    const auto p = parse_config(text);
    ASSERT_TRUE(p.ok()) << text << dump(p);
    const std::string echoed = echo_config(p.config);
    const auto q = parse_config(echoed);
    ASSERT_TRUE(q.ok()) << echoed << dump(q);
    EXPECT_EQ(q.config, p.config) << echoed;
    EXPECT_EQ(echo_config(q.config), echoed);
  }
}

TEST(Config, ScenarioNames) {
  for (Scenario s : {Scenario::GeometryReport, Scenario::ActionEval, Scenario::KgSpectrum, Scenario::KgEvolve,
                     Scenario::EinsteinFit}) {
    EXPECT_EQ(scenario_from_string(to_string(s)), s);
  }
  EXPECT_FALSE(scenario_from_string("kg_spectrum"));
}
