// Acceptance gate: one pass/fail line per criterion at full scale. Reports
// go to <out-dir>/run; the determinism check reruns the desk-scale suite.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "condwalk/experiments.hpp"

namespace cw = condwalk;
namespace fs = std::filesystem;

namespace {

// Seed of the committed fixture file; the recorded floors and constants are
// regressions under this seed.
constexpr std::uint64_t kSeed = 20261016;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Gate {
  fs::path out;
  cw::FixtureStore* fixtures = nullptr;
  int failed = 0;

  // Full-scale spec for `name`, with `extra` merged over its parameters.
  // `label` renames the report files when one experiment runs twice.
  cw::Report run(const std::string& name, const cw::Json& extra = cw::Json::object(), const std::string& label = "") {
    for (cw::ExperimentSpec spec : cw::default_suite(kSeed))
      if (spec.name == name) {
        spec.parameters.update(extra);
        return run(spec, label);
      }
    throw cw::Error("no default spec for " + name);
  }

  cw::Report run(const cw::ExperimentSpec& spec, const std::string& label) {
    cw::RunContext ctx{0, 1e-3, fixtures};
    cw::Report rep = cw::run_experiment(spec, ctx);
    if (!label.empty()) rep.experiment = label;
    cw::write_report(out / "run", rep);
    return rep;
  }

  void check(int id, const std::string& name, double limit_s, const std::function<Verdict()>& body) {
    cw::Stopwatch sw;
    Verdict v;
    try {
      v = body();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double t = sw.lap();
    const bool in_time = limit_s <= 0.0 || t <= limit_s;
    const bool ok = v.pass && in_time;
    failed += !ok;
    char head[96];
    std::snprintf(head, sizeof head, "[%s] %2d %-34s %8.1f s", ok ? "PASS" : "FAIL", id, name.c_str(), t);
    std::cout << head;
    if (limit_s > 0.0) std::cout << (in_time ? "" : " (over limit ") << (in_time ? "" : cw::num_str(limit_s) + " s)");
    std::cout << "  " << v.detail << std::endl;
  }
};

// Every row whose claim starts with one of the prefixes passes, and at
// least `min_rows` such rows exist.
Verdict rows_pass(const cw::Report& rep, const std::vector<std::string>& prefixes, std::size_t min_rows) {
  std::size_t n = 0, bad = 0;
  std::string first_bad;
  for (const auto& r : rep.rows) {
    const bool hit = std::any_of(prefixes.begin(), prefixes.end(),
                                 [&](const std::string& p) { return r.claim.rfind(p, 0) == 0 || r.case_id.rfind(p, 0) == 0 && r.claim == "fixture"; });
    if (!hit) continue;
    ++n;
    if (!r.pass) {
      ++bad;
      if (first_bad.empty()) first_bad = r.claim + " [" + r.case_id + "]";
    }
  }
  Verdict v;
  v.pass = bad == 0 && n >= min_rows;
  v.detail = std::to_string(n - bad) + "/" + std::to_string(n) + " rows";
  if (n < min_rows) v.detail += ", expected >= " + std::to_string(min_rows);
  if (bad) v.detail += ", first failure " + first_bad;
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Verdict same_tree(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a))
    if (e.path().filename() != "timing.log") names.push_back(e.path().filename().string());
  std::size_t other = 0;
  for (const auto& e : fs::directory_iterator(b)) other += e.path().filename() != "timing.log";
  std::sort(names.begin(), names.end());
  if (names.empty() || names.size() != other) return {false, "file sets differ"};
  for (const auto& n : names)
    if (!fs::exists(b / n) || slurp(a / n) != slurp(b / n)) return {false, n + " differs"};
  return {true, std::to_string(names.size()) + " files identical"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--out-dir") out = argv[i + 1];
  fs::remove_all(out);
  fs::create_directories(out);
  // Work on a copy so a run never rewrites the committed fixtures.
  fs::copy_file(CONDWALK_FIXTURES, out / "fixtures.json");
  cw::FixtureStore fixtures(out / "fixtures.json");
  Gate g{out, &fixtures};

  cw::Report kernel;
  g.check(1, "potential kernel exactness", 60.0, [&] {
    kernel = g.run("kernel");
    return rows_pass(kernel, {"kernel.integral_oracle", "kernel.series_oracle", "kernel.harmonicity"}, 3);
  });
  g.check(2, "asymptotic error constant", 60.0, [&] {
    // Computed by the criterion-1 run; the extra table at N/2 is part of it.
    Verdict v = rows_pass(kernel, {"kernel.asymptotic_constant"}, 1);
    if (const auto r = kernel.find("kernel.asymptotic_constant"); !r.empty())
      v.detail += ", drift " + cw::num_str(r.front()->value("drift")) + ", timed under criterion 1";
    return v;
  });
  g.check(3, "Green's function three-way", 600.0, [&] {
    return rows_pass(g.run("green"),
                     {"green.solver_contains_closed_form", "green.mc_vs_closed_form", "green.mc_vs_truncated_solver"},
                     60);
  });
  g.check(4, "return and hit probabilities", 300.0, [&] {
    return rows_pass(g.run("return_hit"),
                     {"return.bracket_contains_closed_form", "hit.bracket_contains_closed_form"}, 2);
  });
  cw::Report capacity;
  g.check(5, "capacity identity", 300.0, [&] {
    capacity = g.run("capacity");
    return rows_pass(capacity, {"capacity.identity", "capacity.singleton_closed_form", "capacity.hm_normalization"}, 10);
  });
  g.check(6, "decomposition dual route", 300.0,
          [&] {
            Verdict v = rows_pass(capacity, {"decomposition.dual_route"}, 10);
            v.detail += ", timed under criterion 5";
            return v;
          });
  g.check(7, "entrance-measure rate", 600.0, [&] {
    const cw::Report rep = g.run("entrance_rate");
    Verdict v = rows_pass(rep, {"entrance_rate."}, 6);
    for (const auto* r : rep.find("entrance_rate.halving"))
      v.detail += ", eps(4d)/eps(d) <= " + cw::num_str(r->value("ratio_best_case"));
    return v;
  });
  g.check(8, "absolute continuity", 300.0, [&] {
    return rows_pass(g.run("abscont"), {"abscont."}, 3);
  });
  g.check(9, "martingale property", 60.0, [&] {
    return rows_pass(g.run("martingale"), {"martingale."}, 3);
  });
  g.check(10, "envelope constants", 120.0, [&] {
    const cw::Report rep = g.run("lemmas", {{"which", {"g_envelope", "g_increment"}}}, "lemmas_envelopes");
    return rows_pass(rep, {"g_envelope.", "g_increment."}, 4);
  });
  g.check(11, "positivity floors", 600.0, [&] {
    const cw::Report rep = g.run("lemmas", {{"which", {"annulus", "disk"}}}, "lemmas_floors");
    return rows_pass(rep, {"annulus.", "disk."}, 12);
  });
  g.check(12, "determinism", 0.0, [&] {
    // Two runs of the desk-scale suite with different thread counts.
    for (int pass = 0; pass < 2; ++pass) {
      const fs::path dir = out / ("determinism_" + std::to_string(pass));
      for (const auto& spec : cw::reduced_suite(kSeed)) {
        cw::RunContext ctx{pass == 0 ? 1 : 4, 1e-3, nullptr};
        cw::write_report(dir, cw::run_experiment(spec, ctx));
      }
    }
    return same_tree(out / "determinism_0", out / "determinism_1");
  });

  std::cout << (g.failed == 0 ? "all criteria pass" : std::to_string(g.failed) + " criteria fail") << std::endl;
  return g.failed == 0 ? 0 : 1;
}
