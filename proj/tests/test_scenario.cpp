#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "capmass/error.hpp"
#include "capmass/scenario.hpp"

using namespace capmass;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST(Config, DefaultsParseCleanly) {
  const Scenario s = parse_scenario(Config{});
  EXPECT_EQ(s.metric_kind, "euclidean");
  EXPECT_EQ(s.dimension, 3);
  EXPECT_EQ(s.region_shape, "ball");
  EXPECT_EQ(s.exhaustion.count, 4);
  EXPECT_EQ(s.seed, 20240601u);
  EXPECT_EQ(s.output_field, "none");
}

TEST(Config, EveryKeyHasHelpAndParsesAtDefault) {
  Config c;
  for (const auto& k : Config::keys()) {
    EXPECT_FALSE(k.help.empty()) << k.name;
    EXPECT_EQ(c.get(k.name), k.default_value);
  }
}

TEST(Config, UnknownKeyIsConfigError) {
  Config c;
  EXPECT_EQ(code_of([&] { c.set("metric.mas", "1"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([&] { c.get("nope"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([&] { c.set_assignment("no-equals-sign"); }), ErrorCode::Config);
}

TEST(Config, ErrorsCarryLineNumbers) {
  Config c;
  try {
    c.load_string("# header\nmetric.kind = schwarzschild\n\nbogus.key = 3\n", "cfg");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    EXPECT_NE(std::string(e.what()).find("cfg:4"), std::string::npos) << e.what();
  }
}

TEST(Config, LaterAssignmentsOverride) {
  Config c;
  c.load_string("metric.mass = 1\nmetric.mass = 2  # trailing comment\n");
  c.set_assignment("metric.kind=schwarzschild");
  EXPECT_EQ(c.get("metric.mass"), "2");
  c.set_assignment("metric.mass=3.5");
  const Scenario s = parse_scenario(c);
  EXPECT_DOUBLE_EQ(s.metric_mass, 3.5);
  EXPECT_EQ(build_metric(s).schwarzschild_mass().value_or(0.0), 3.5);
}

TEST(Config, RangeAndTypeChecks) {
  auto bad = [](const std::string& kv) {
    Config c;
    c.set_assignment(kv);
    return code_of([&] { parse_scenario(c); });
  };
  EXPECT_EQ(bad("metric.mass=-1"), ErrorCode::Config);
  EXPECT_EQ(bad("metric.mass=abc"), ErrorCode::Config);
  EXPECT_EQ(bad("exhaustion.gamma=1"), ErrorCode::Config);
  EXPECT_EQ(bad("exhaustion.count=x"), ErrorCode::Config);
  EXPECT_EQ(bad("region.shape=torus"), ErrorCode::Config);
  EXPECT_EQ(bad("region.profile=cubic"), ErrorCode::Config);
  EXPECT_EQ(bad("solver.outer_bc=periodic"), ErrorCode::Config);
  EXPECT_EQ(bad("metric.kind=wormhole"), ErrorCode::Config);
  EXPECT_EQ(bad("rng.seed=-4"), ErrorCode::Config);
}

TEST(Config, EllipsoidAxesMustBeOrdered) {
  Config c;
  c.load_string("region.shape=ellipsoid\nregion.params=1,2,3\n");
  EXPECT_EQ(code_of([&] { parse_scenario(c); }), ErrorCode::Config);
  c.set("region.params", "3,2,1,0.5,0,0");
  const Region r = build_region(parse_scenario(c));
  EXPECT_FALSE(r.contains({-2.6, 0.0, 0.0}));
  EXPECT_TRUE(r.contains({3.4, 0.0, 0.0}));
}

TEST(Config, MulticenterPolesParse) {
  Config c;
  c.load_string("metric.kind=multicenter\nmetric.centers=1,0,0; -1,0,0\nmetric.masses=0.5,0.25\n");
  const Scenario s = parse_scenario(c);
  ASSERT_EQ(s.poles.size(), 2u);
  EXPECT_DOUBLE_EQ(s.poles[1].mass, 0.25);
  EXPECT_DOUBLE_EQ(adm_mass(build_metric(s)), 0.75);
  c.set("metric.masses", "0.5");
  EXPECT_EQ(code_of([&] { parse_scenario(c); }), ErrorCode::Config);
}

TEST(Config, CanonicalFormAndHashAreStable) {
  Config a, b;
  a.load_string("metric.mass=1\nmetric.kind=schwarzschild\n");
  b.set("metric.kind", "schwarzschild");
  b.set("metric.mass", "1");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.hash(), b.hash());
  b.set("metric.mass", "2");
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), fnv1a64(a.canonical()));
  // FNV-1a 64 reference vectors
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, CanonicalRoundTrips) {
  Config a;
  a.load_string("region.shape=star\nregion.params=1,0.2\nregion.harmonics=2:0:1;3:1:0.5\n");
  Config b;
  b.load_string(a.canonical());
  EXPECT_EQ(a.hash(), b.hash());
}

TEST(Config, LoadFileMissingIsConfigError) {
  Config c;
  EXPECT_EQ(code_of([&] { c.load_file("/nonexistent/capmass.cfg"); }), ErrorCode::Config);
  const auto p = std::filesystem::temp_directory_path() / "capmass_test_cfg.txt";
  std::ofstream(p) << "metric.dimension = 4\n";
  c.load_file(p.string());
  EXPECT_EQ(parse_scenario(c).dimension, 4);
  std::filesystem::remove(p);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::Config), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::InvalidArgument), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::Domain), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::Unsupported), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::Io), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::NotConverged), kExitSolver);
  EXPECT_EQ(exit_code_for(ErrorCode::Internal), kExitSolver);
}
