// condwalk: command-line front end for the kernel table, closed forms,
// truncated solves, capacities, Monte Carlo runs and the verification suite.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "condwalk/experiments.hpp"

namespace cw = condwalk;
using Json = nlohmann::ordered_json;

namespace {

// JSON config files: top-level keys are global flags, objects named after
// a subcommand hold that subcommand's flags.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        j[name] = res.size() == 1 ? Json(res.front()) : Json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const Json j = Json::parse(input);
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void walk(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        walk(*it, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      items.push_back(std::move(item));
    }
  }
};

cw::Site site_arg(const std::string& s) { return cw::parse_site(s); }

std::vector<double> list_arg(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(std::stod(tok));
  return out;
}

Json bracket_json(const cw::Bracket& b) { return {{"lower", b.lower}, {"upper", b.upper}, {"width", b.width()}}; }

struct Globals {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
  double tol = 1e-3;
  std::string fixtures;
};

void emit(const Json& j) { std::cout << j.dump() << std::endl; }

int report_and_status(const cw::Report& rep, const Globals& g) {
  cw::write_report(g.out_dir, rep);
  std::size_t failed = 0;
  for (const auto& r : rep.rows) failed += !r.pass;
  std::cout << rep.experiment << ": " << rep.rows.size() - failed << "/" << rep.rows.size() << " rows pass -> "
            << (std::filesystem::path(g.out_dir) / (rep.experiment + ".json")).string() << std::endl;
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential theory of the planar random walk conditioned to avoid the origin"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config mirroring the flags (flags override)");

  Globals g;
  app.add_option("--seed", g.seed, "Base RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for report files")->capture_default_str();
  auto* tol_opt = app.add_option("--tol", g.tol, "Bracket width tolerance")->capture_default_str();
  app.add_option("--fixtures", g.fixtures, "Fixture file for recorded constants");

  // kernel-table
  auto* kt = app.add_subcommand("kernel-table", "Exact potential kernel on the window |x|_inf <= N");
  std::int32_t kt_radius = 256;
  std::string kt_out;
  kt->add_option("--radius", kt_radius, "Window radius N")->capture_default_str();
  kt->add_option("--out", kt_out, "CSV of the octant 0 <= x2 <= x1 <= N");

  // green
  auto* gr = app.add_subcommand("green", "Closed-form Green's function and hitting probabilities");
  std::string gx, gy;
  gr->add_option("--x", gx, "Site X1,X2")->required();
  gr->add_option("--y", gy, "Site Y1,Y2")->required();

  // solve
  auto* sv = app.add_subcommand("solve", "Truncated first-passage solve");
  std::string sv_chain = "hat", sv_targets, sv_x;
  double sv_radius = 64;
  sv->add_option("--chain", sv_chain, "hat or srw")->check(CLI::IsMember({"hat", "srw"}))->capture_default_str();
  sv->add_option("--radius", sv_radius, "Truncation radius R")->capture_default_str();
  sv->add_option("--targets", sv_targets, "Sites file; each site is its own absorbing label")->required();
  sv->add_option("--x", sv_x, "Start site X1,X2")->required();

  // capacity
  auto* cp = app.add_subcommand("capacity", "Escape probabilities, capacity and harmonic measure");
  std::string cp_set;
  bool cp_identity = false;
  cp->add_option("--set-file", cp_set, "Sites file")->required();
  cp->add_flag("--identity", cp_identity, "Also bracket the SRW capacity of A u {0}");

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimates");
  std::string mc_chain = "hat", mc_exp = "green", mc_out, mc_x, mc_set, mc_y0, mc_functional = "exit_octant";
  std::vector<std::string> mc_y;
  std::int64_t mc_reps = 100000;
  double mc_radius = 512, mc_r = 8, mc_c = 4;
  mc->add_option("--chain", mc_chain, "hat or srw")->check(CLI::IsMember({"hat", "srw"}))->capture_default_str();
  mc->add_option("--experiment", mc_exp, "green|entrance|abscont|annulus|disk")
      ->check(CLI::IsMember({"green", "entrance", "abscont", "annulus", "disk"}))
      ->capture_default_str();
  mc->add_option("--reps", mc_reps, "Replicas")->capture_default_str();
  mc->add_option("--radius", mc_radius, "Truncation radius (abscont: R)")->capture_default_str();
  mc->add_option("--x", mc_x, "Start site X1,X2")->required();
  mc->add_option("--y", mc_y, "Target site(s) for green");
  mc->add_option("--set-file", mc_set, "Target set for entrance");
  mc->add_option("--y0", mc_y0, "Disk or annulus center");
  mc->add_option("--r", mc_r, "Disk or inner radius")->capture_default_str();
  mc->add_option("--C", mc_c, "Annulus outer factor")->capture_default_str();
  mc->add_option("--functional", mc_functional, "exit_octant|returns_to_start|max_norm_before_return|constant")
      ->capture_default_str();
  mc->add_option("--out", mc_out, "CSV output (default: <out-dir>/mc.csv)");

  // entrance-rate
  auto* er = app.add_subcommand("entrance-rate", "Rate of the entrance measure towards the harmonic measure");
  std::string er_set, er_dir = "1,0", er_dist = "32,64,128,256";
  er->add_option("--set-file", er_set, "Sites file (default: {(3,0),(4,0),(3,1)})");
  er->add_option("--direction", er_dir, "Direction D1,D2")->capture_default_str();
  er->add_option("--distances", er_dist, "Comma-separated distances")->capture_default_str();

  // lemma-checks
  auto* lc = app.add_subcommand("lemma-checks", "Scaling and envelope checks of the auxiliary estimates");
  std::string lc_which = "ball_exit,avoid_ball,g_envelope,g_increment,annulus,disk,conditional_hit";
  lc->add_option("--which", lc_which, "Comma-separated subset")->capture_default_str();

  // suite
  auto* su = app.add_subcommand("suite", "Run a list of experiments and write their reports");
  std::string su_spec;
  bool su_reduced = false;
  su->add_option("--spec", su_spec, "JSON array of {name, parameters, seed}");
  su->add_flag("--reduced", su_reduced, "Desk-scale parameters");

  for (auto* s : app.get_subcommands({})) s->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<cw::FixtureStore> store;
    if (!g.fixtures.empty()) store.emplace(g.fixtures);
    cw::RunContext ctx{g.threads, g.tol, store ? &*store : nullptr};
    cw::BracketOptions bo;
    bo.tol = g.tol;

    if (*kt) {
      const cw::KernelTable t(kt_radius);
      if (!kt_out.empty()) {
        std::ofstream f(kt_out);
        f << "x1,x2,a\n";
        for (std::int32_t i = 0; i <= kt_radius; ++i)
          for (std::int32_t j = 0; j <= i; ++j) f << i << ',' << j << ',' << cw::num_str(t.octant(i, j)) << '\n';
      }
      emit({{"radius", kt_radius},
            {"sites", t.size()},
            {"max_harmonicity_residual", t.max_harmonicity_residual()},
            {"asymptotic_constant", cw::asymptotic_error_constant(t, kt_radius / 2.0, kt_radius)},
            {"gamma_prime", cw::AsymptoticParams{}.gamma_prime}});
      return 0;
    }
    if (*gr) {
      const cw::HatKernel hat(cw::shared_kernel());
      const cw::Site x = site_arg(gx), y = site_arg(gy);
      Json j{{"x", cw::site_str(x)},
             {"y", cw::site_str(y)},
             {"green_hat", hat.green_hat(x, y)},
             {"g_hat", hat.g_hat(x, y)},
             {"ell_hat", hat.ell_hat(x, y)},
             {"return_prob_hat_x", hat.return_prob_hat(x)}};
      if (x != y) j["hit_prob_hat"] = hat.hit_prob_hat(x, y);
      emit(j);
      return 0;
    }
    if (*sv) {
      const cw::SiteSet targets = cw::read_sites_file(sv_targets);
      cw::TruncatedDomain dom{sv_chain == "hat" ? cw::Chain::Hat : cw::Chain::Srw, sv_radius, {}, {}};
      for (cw::Site s : targets) dom.absorbing.emplace_back(cw::site_str(s), cw::SiteSet{s});
      cw::SolveOptions so;
      so.tol = std::min(1e-12, g.tol);
      const cw::HitPartition hp = cw::hit_partition(dom, site_arg(sv_x), so);
      Json probs = Json::object();
      for (const auto& [k, v] : hp.probability) probs[k] = v;
      emit({{"chain", sv_chain},
            {"radius", sv_radius},
            {"x", cw::site_str(site_arg(sv_x))},
            {"probability", probs},
            {"residual", hp.defect},
            {"error_bound", hp.error_bound},
            {"iterations", hp.iterations}});
      return 0;
    }
    if (*cp) {
      const cw::SiteSet a = cw::read_sites_file(cp_set);
      const cw::CapacityReport r = cw::capacity_report(a, bo);
      Json sites = Json::array();
      for (std::size_t i = 0; i < a.size(); ++i)
        sites.push_back({{"site", cw::site_str(a[i])}, {"es_hat", bracket_json(r.es_hat[i])}, {"hm_hat", bracket_json(r.hm_hat[i])}});
      Json j{{"set", cw::set_str(a)},
             {"cap_hat", bracket_json(r.cap_hat)},
             {"sites", sites},
             {"radius_used", r.radius_used},
             {"far_field", cw::far_field_name(r.far_field)}};
      if (cp_identity) j["cap_srw_with_origin"] = bracket_json(cw::cap_srw_with_origin(a.with(cw::kOrigin), bo));
      emit(j);
      return 0;
    }
    if (*mc) {
      cw::WalkConfig cfg;
      cfg.chain = mc_chain == "hat" ? cw::Chain::Hat : cw::Chain::Srw;
      cfg.truncation_radius = mc_radius;
      cfg.seed = g.seed;
      cfg.replicas = mc_reps;
      cfg.threads = g.threads;
      const cw::Site x = site_arg(mc_x);
      struct Row {
        std::string params;
        cw::Estimate e;
      };
      std::vector<Row> rows;
      const std::string base = "x=" + cw::site_str(x);
      if (mc_exp == "green") {
        std::vector<cw::Site> ys;
        for (const auto& s : mc_y) ys.push_back(site_arg(s));
        if (ys.empty()) throw cw::DomainError("--y is required for green");
        const auto est = cw::estimate_green_hat(x, ys, cfg);
        for (std::size_t i = 0; i < ys.size(); ++i)
          rows.push_back({base + ";y=" + cw::site_str(ys[i]) + ";R=" + cw::num_str(mc_radius), est[i]});
      } else if (mc_exp == "entrance") {
        const cw::SiteSet a = cw::read_sites_file(mc_set);
        const auto est = cw::estimate_entrance(x, a, cfg);
        for (std::size_t i = 0; i < a.size(); ++i)
          rows.push_back({base + ";site=" + cw::site_str(a[i]) + ";R=" + cw::num_str(mc_radius), est.conditional[i]});
      } else if (mc_exp == "abscont") {
        const auto r = cw::abs_continuity_check(x, mc_radius, cw::parse_functional(mc_functional), cfg);
        rows.push_back({base + ";R=" + cw::num_str(mc_radius) + ";functional=" + mc_functional + ";statistic=tv",
                        {r.tv, r.tv_sd, r.accepted, 0.0}});
        rows.push_back({base + ";R=" + cw::num_str(mc_radius) + ";functional=" + mc_functional + ";statistic=null_tv",
                        {r.null_mean, r.null_sd, r.accepted, 0.0}});
      } else if (mc_exp == "annulus") {
        const cw::Site y0 = site_arg(mc_y0);
        rows.push_back({base + ";y0=" + cw::site_str(y0) + ";r=" + cw::num_str(mc_r) + ";C=" + cw::num_str(mc_c),
                        cw::annulus_exit_estimate(x, y0, mc_r, mc_c, cfg)});
      } else {
        const cw::Site y0 = site_arg(mc_y0);
        rows.push_back({base + ";y0=" + cw::site_str(y0) + ";r=" + cw::num_str(mc_r) + ";R=" + cw::num_str(mc_radius),
                        cw::disk_avoidance_estimate(x, y0, mc_r, cfg)});
      }
      const std::filesystem::path out = mc_out.empty() ? std::filesystem::path(g.out_dir) / "mc.csv" : std::filesystem::path(mc_out);
      if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
      std::ofstream f(out);
      f << "experiment,params,estimate,stderr,n,bias_bound,seed\n";
      for (const Row& r : rows)
        f << mc_exp << ',' << cw::csv_field(r.params) << ',' << cw::num_str(r.e.mean) << ',' << cw::num_str(r.e.stderr_)
          << ',' << r.e.n << ',' << cw::num_str(r.e.truncation_bias_bound) << ',' << g.seed << '\n';
      for (const Row& r : rows)
        emit({{"experiment", mc_exp}, {"params", r.params}, {"estimate", r.e.mean}, {"stderr", r.e.stderr_},
              {"n", r.e.n}, {"bias_bound", r.e.truncation_bias_bound}, {"seed", g.seed}});
      return 0;
    }
    if (*er) {
      Json p{{"direction", list_arg(er_dir)}, {"distances", list_arg(er_dist)}};
      if (tol_opt->count() > 0) p["tol"] = g.tol;
      if (!er_set.empty()) {
        Json s = Json::array();
        for (cw::Site x : cw::read_sites_file(er_set)) s.push_back({x.x1, x.x2});
        p["set"] = s;
      }
      return report_and_status(cw::run_experiment({"entrance_rate", p, g.seed, g.out_dir}, ctx), g);
    }
    if (*lc) {
      std::vector<std::string> which;
      std::stringstream ss(lc_which);
      for (std::string t; std::getline(ss, t, ',');) which.push_back(t);
      return report_and_status(cw::run_experiment({"lemmas", {{"which", which}}, g.seed, g.out_dir}, ctx), g);
    }
    if (*su) {
      std::vector<cw::ExperimentSpec> specs;
      if (!su_spec.empty()) {
        std::ifstream f(su_spec);
        for (const auto& e : Json::parse(f))
          specs.push_back({e.at("name").get<std::string>(), e.value("parameters", Json::object()),
                           e.value("seed", g.seed), g.out_dir});
      } else {
        specs = su_reduced ? cw::reduced_suite(g.seed) : cw::default_suite(g.seed);
      }
      std::filesystem::remove(std::filesystem::path(g.out_dir) / "timing.log");
      int status = 0;
      for (const auto& s : specs) status |= report_and_status(cw::run_experiment(s, ctx), g);
      return status;
    }
  } catch (const cw::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
