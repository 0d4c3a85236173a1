#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "condwalk/experiments.hpp"

using namespace condwalk;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("condwalk_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Reports, FilesCarryEveryRow) {
  Report rep{"demo", 7};
  rep.parameters = {{"n", 3}};
  rep.rows.push_back({"demo.claim", "case one", {{"x", 0.1}, {"y", 2.0}}, "x < y", true, 7, 0.5});
  rep.rows.push_back({"demo.claim", "case,two", {{"x", 3.0}}, "x < 1", false, 7, 0.25});
  EXPECT_FALSE(rep.passed());
  const fs::path dir = scratch("reports");
  write_report(dir, rep);
  const std::string csv = slurp(dir / "demo.csv");
  EXPECT_NE(csv.find("experiment,claim,case,pass,seed,tolerance,values"), std::string::npos);
  EXPECT_NE(csv.find("\"case,two\""), std::string::npos);
  EXPECT_NE(csv.find("fail"), std::string::npos);
  const Json j = Json::parse(slurp(dir / "demo.json"));
  EXPECT_EQ(j["experiment"], "demo");
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["rows"][0]["values"]["x"].get<double>(), 0.1);
  // Wall time is kept out of the report files.
  EXPECT_EQ(slurp(dir / "demo.json").find("0.25"), std::string::npos);
  EXPECT_NE(slurp(dir / "timing.log").find("0.25"), std::string::npos);
  const std::string lng = slurp(dir / "demo.long.csv");
  EXPECT_NE(lng.find("demo,demo.claim,case one,x,0.10000000000000001"), std::string::npos);
}

TEST(Reports, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 2.0, 1e-300, -7.25e10}) EXPECT_EQ(std::stod(num_str(v)), v);
  EXPECT_EQ(site_str({3, -1}), "(3,-1)");
}

TEST(Fixtures, RecordThenHold) {
  const fs::path dir = scratch("fixtures");
  {
    FixtureStore s(dir / "f.json");
    Report rep{"x", 1};
    fixture_row(rep, s, "k", 0.5, "within 10%", [](double o, double v) { return std::abs(o - v) <= 0.1 * o; }, "n");
    EXPECT_EQ(rep.rows.back().tolerance, "recorded");
  }
  FixtureStore s(dir / "f.json");
  ASSERT_TRUE(s.get("k").has_value());
  EXPECT_EQ(*s.get("k"), 0.5);
  Report rep{"x", 1};
  auto rule = [](double o, double v) { return std::abs(o - v) <= 0.1 * o; };
  fixture_row(rep, s, "k", 0.52, "within 10%", rule, "n");
  EXPECT_TRUE(rep.rows.back().pass);
  fixture_row(rep, s, "k", 0.7, "within 10%", rule, "n");
  EXPECT_FALSE(rep.rows.back().pass);
  FixtureStore none;
  fixture_row(rep, none, "k", 9.0, "within 10%", rule, "n");
  EXPECT_TRUE(rep.rows.back().pass);
}

TEST(Inputs, RandomCasesAreSeededAndInRange) {
  EXPECT_EQ(random_green_pairs(3, 2, 10, 20.0), random_green_pairs(3, 2, 10, 20.0));
  EXPECT_NE(random_green_pairs(3, 2, 10, 20.0), random_green_pairs(4, 2, 10, 20.0));
  const auto pairs = random_green_pairs(3, 2, 10, 20.0);
  EXPECT_EQ(pairs.size(), 20u);
  for (const auto& [x, y] : pairs) {
    EXPECT_FALSE(x.is_origin());
    EXPECT_FALSE(y.is_origin());
    EXPECT_LE(x.norm(), 20.0);
    EXPECT_LE(y.norm(), 20.0);
  }
  for (const SiteSet& s : random_sets(5, 10, 5, 10.0)) {
    EXPECT_GE(s.size(), 1u);
    EXPECT_LE(s.size(), 5u);
    EXPECT_FALSE(s.contains_origin());
    EXPECT_LE(s.max_norm(), 10.0);
  }
  for (const auto& [x, s] : random_hit_cases(5, 10, 5, 10.0, 20.0)) {
    EXPECT_FALSE(s.contains(x));
    EXPECT_FALSE(x.is_origin());
  }
}

TEST(Experiments, SmallRunsPass) {
  RunContext ctx{2, 1e-4, nullptr};
  EXPECT_TRUE(run_experiment({"martingale", {{"max_norm", 6.0}}, 1, {}}, ctx).passed());
  EXPECT_TRUE(run_experiment({"kernel", {{"oracle_radius", 2}, {"series_steps", 2048}, {"table_radius", 32}}, 1, {}}, ctx)
                  .passed());
  const Report lem = run_experiment({"lemmas", {{"which", {"conditional_hit"}}}, 1, {}}, ctx);
  EXPECT_TRUE(lem.passed());
  EXPECT_FALSE(lem.find("conditional_hit.equality").empty());
  EXPECT_THROW(run_experiment({"nope", {}, 1, {}}, ctx), DomainError);
}

TEST(Experiments, RerunIsByteIdentical) {
  RunContext ctx{2, 1e-4, nullptr};
  const ExperimentSpec spec{"abscont", {{"replicas", 1000}, {"radii", {20.0}}}, 11, {}};
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_report(a, run_experiment(spec, ctx));
  ctx.threads = 1;
  write_report(b, run_experiment(spec, ctx));
  for (const char* f : {"abscont.json", "abscont.csv", "abscont.long.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}
