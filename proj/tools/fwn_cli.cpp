// Batch front end: generate driver ensembles, solve the hybrid SDE, run the
// verification experiments, reformat reports.
//
// Exit codes: 0 success / all pass; 1 experiment fail; 2 usage or
// configuration error; 3 numeric or accuracy error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fwn/errors.hpp"
#include "fwn/experiments.hpp"
#include "fwn/fbm.hpp"
#include "fwn/sde.hpp"

namespace {

using nlohmann::json;

// temp-file-plus-rename so a crashed run never leaves a partial output
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body,
                  bool binary = false) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw fwn::ConfigError("cannot open output file " + tmp);
    out.precision(17);
    body(out);
    if (!out) throw fwn::ConfigError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw fwn::ConfigError("cannot move " + tmp + " into place");
}

struct CommonFlags {
  double hurst = 0.75;
  double horizon = 1.0;
  int n = 1025;
  int n_paths = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string format = "csv";
};

std::uint64_t env_seed() {
  if (const char* s = std::getenv("FWN_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw fwn::UsageError("FWN_SEED is not an integer");
    }
  }
  return 0;
}

// Pre-scan for --config and use its fields as defaults; explicit flags
// override them during the regular parse.
json load_config_defaults(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw fwn::UsageError(std::string("cannot read config file ") + argv[i + 1]);
      try {
        json j;
        in >> j;
        return j;
      } catch (const json::exception& e) {
        throw fwn::UsageError(std::string("config file is not valid JSON: ") + e.what());
      }
    }
  }
  return json::object();
}

void apply_config(const json& cfg, CommonFlags& f) {
  if (cfg.contains("hurst")) f.hurst = cfg["hurst"].get<double>();
  if (cfg.contains("T")) f.horizon = cfg["T"].get<double>();
  if (cfg.contains("n")) f.n = cfg["n"].get<int>();
  if (cfg.contains("paths")) f.n_paths = cfg["paths"].get<int>();
  if (cfg.contains("seed")) f.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("threads")) f.threads = cfg["threads"].get<int>();
  if (cfg.contains("out")) f.out = cfg["out"].get<std::string>();
  if (cfg.contains("format")) f.format = cfg["format"].get<std::string>();
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--hurst", f.hurst, "Hurst parameter in (1/2,1)");
  cmd->add_option("--T", f.horizon, "time horizon");
  cmd->add_option("--n", f.n, "grid nodes (2^k+1)");
  cmd->add_option("--paths", f.n_paths, "number of Monte Carlo paths");
  cmd->add_option("--seed", f.seed, "RNG seed (default FWN_SEED or 0)");
  cmd->add_option("--threads", f.threads, "worker cap, 0 = auto");
  cmd->add_option("--out", f.out, "output file")->required();
  cmd->add_option("--format", f.format, "csv|bin|json");
  cmd->add_option("--config", "JSON config file (flags override)")->expected(1);
}

int run_gen(const CommonFlags& f, const std::string& method_name, bool with_brownian,
            bool unit_variance) {
  fwn::HurstModel model = fwn::HurstModel::create(f.hurst);
  fwn::TimeGrid grid = fwn::TimeGrid::uniform(f.horizon, f.n);
  fwn::GeneratorOptions opts;
  opts.seed = f.seed;
  opts.threads = f.threads;
  opts.with_brownian = with_brownian;
  opts.unit_variance = unit_variance;
  fwn::GeneratorMethod method = fwn::method_from_name(method_name);
  fwn::DriverSource source(model, grid, method, f.n_paths, opts);
  fwn::DriverEnsemble e = source.materialize();
  if (f.format == "bin")
    atomic_write(f.out, [&](std::ostream& out) { fwn::write_ensemble_binary(out, e); }, true);
  else if (f.format == "csv")
    atomic_write(f.out, [&](std::ostream& out) { fwn::write_ensemble_csv(out, e); });
  else
    throw fwn::UsageError("gen supports --format csv|bin");
  return 0;
}

int run_solve(const CommonFlags& f, const std::string& spec_path, const std::string& method,
              int k_max, double tol) {
  fwn::SdeSpec spec;
  if (spec_path.rfind("builtin:", 0) == 0) {
    spec = fwn::builtin_sde_spec(spec_path.substr(8));
  } else {
    std::ifstream in(spec_path);
    if (!in) throw fwn::UsageError("cannot read spec file " + spec_path);
    std::stringstream ss;
    ss << in.rdbuf();
    spec = fwn::parse_sde_spec(ss.str());
  }
  fwn::HurstModel model = fwn::HurstModel::create(f.hurst);
  fwn::TimeGrid grid = fwn::TimeGrid::uniform(spec.horizon, f.n);
  fwn::GeneratorOptions gopts;
  gopts.seed = f.seed;
  gopts.threads = f.threads;
  fwn::DriverEnsemble driver = fwn::generate_via_m(model, grid, f.n_paths, gopts);

  fwn::SolveResult sol;
  if (method == "picard") {
    fwn::PicardOptions popts;
    popts.k_max = k_max;
    popts.tol = tol;
    popts.threads = f.threads;
    popts.keep_paths = true;
    sol = fwn::picard_solve(spec, driver, popts);
  } else if (method == "euler") {
    sol = fwn::euler_solve(spec, driver, f.threads, true);
  } else {
    throw fwn::UsageError("solve supports --method picard|euler");
  }

  // solution plane in the ensemble layout: b column = driver B, value = X
  fwn::DriverEnsemble view = driver;
  view.bh = sol.paths;
  if (f.format == "bin")
    atomic_write(f.out, [&](std::ostream& out) { fwn::write_ensemble_binary(out, view); }, true);
  else
    atomic_write(f.out, [&](std::ostream& out) {
      out << "path,node,t,b,x\n";
      for (int p = 0; p < view.n_paths; ++p)
        for (int i = 0; i < view.grid.n; ++i)
          out << p << ',' << i << ',' << view.grid.t(i) << ',' << view.b_row(p)[i] << ','
              << view.bh_row(p)[i] << '\n';
    });

  json side;
  side["method"] = method;
  side["k_used"] = sol.k_used;
  side["iterates_delta"] = sol.iterates_delta;
  side["fixed_point_residual"] = sol.fixed_point_residual;
  side["spec_fingerprint"] = spec.fingerprint();
  side["spec"] = spec.describe();
  side["seed"] = f.seed;
  atomic_write(f.out + ".meta.json",
               [&](std::ostream& out) { out << side.dump(2) << "\n"; });
  return 0;
}

int run_verify(const CommonFlags& f, const std::string& experiment, const std::string& sde_spec) {
  fwn::ExperimentConfig cfg;
  cfg.hurst = f.hurst;
  cfg.horizon = f.horizon;
  cfg.n = f.n;
  cfg.n_paths = f.n_paths;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.sde_spec = sde_spec;

  std::vector<std::string> names;
  if (experiment == "all")
    names = fwn::experiment_names();
  else
    names.push_back(experiment);

  std::vector<fwn::ExperimentReport> reports;
  for (const auto& name : names) {
    auto batch = fwn::run_experiment(name, cfg);
    for (const auto& r : batch)
      std::cerr << (r.pass ? "PASS" : r.verdict == fwn::Verdict::inconclusive ? "INCONCLUSIVE"
                                                                              : "FAIL")
                << ' ' << r.name << "  estimate=" << r.estimate << " se=" << r.std_error
                << " target=" << r.target << "  (" << r.wall_time << "s)\n";
    reports.insert(reports.end(), batch.begin(), batch.end());
  }

  if (f.format == "json" || f.out.rfind(".json") != std::string::npos)
    atomic_write(f.out, [&](std::ostream& out) { out << fwn::reports_to_json(reports); });
  else
    atomic_write(f.out, [&](std::ostream& out) { fwn::reports_to_csv(out, reports); });

  for (const auto& r : reports)
    if (r.verdict == fwn::Verdict::fail) return 1;
  return 0;
}

int run_report(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw fwn::UsageError("cannot read report " + in_path);
  json arr;
  try {
    in >> arr;
  } catch (const json::exception& e) {
    throw fwn::UsageError(std::string("report is not valid JSON: ") + e.what());
  }
  std::vector<fwn::ExperimentReport> reports;
  for (const auto& j : arr) {
    fwn::ExperimentReport r;
    r.name = j.at("name").get<std::string>();
    r.estimate = j.at("estimate").get<double>();
    r.std_error = j.at("std_error").get<double>();
    r.target = j.at("target").get<double>();
    r.mode = j.at("mode").get<std::string>() == "equality" ? fwn::ReportMode::equality
                                                           : fwn::ReportMode::upper_bound;
    const std::string v = j.at("verdict").get<std::string>();
    r.verdict = v == "pass" ? fwn::Verdict::pass
                : v == "fail" ? fwn::Verdict::fail
                              : fwn::Verdict::inconclusive;
    r.pass = j.at("pass").get<bool>();
    r.hurst = j.at("hurst").get<double>();
    r.horizon = j.at("T").get<double>();
    r.n = j.at("n").get<int>();
    r.n_paths = j.at("n_paths").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    reports.push_back(std::move(r));
  }
  atomic_write(out_path, [&](std::ostream& out) { fwn::reports_to_csv(out, reports); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional white-noise toolkit"};
  app.require_subcommand(1);

  CommonFlags gen_f, solve_f, verify_f;
  std::string gen_method = "circulant";
  bool gen_with_b = false, gen_unit = false;
  std::string solve_spec, solve_method = "picard";
  int solve_kmax = 12;
  double solve_tol = 1e-4;
  std::string verify_experiment = "all", verify_spec = "linear";
  std::string report_in, report_out;

  CLI::App* gen = app.add_subcommand("gen", "generate a driver ensemble");
  add_common(gen, gen_f);
  gen->add_option("--method", gen_method, "cholesky|circulant|m_synthesis");
  gen->add_flag("--with-brownian", gen_with_b, "exact generators: sample an independent B");
  gen->add_flag("--unit-variance", gen_unit, "standard fBm normalization Var = t^{2H}");

  CLI::App* solve = app.add_subcommand("solve", "solve the hybrid SDE on fresh drivers");
  add_common(solve, solve_f);
  solve->add_option("--spec", solve_spec, "SDE spec JSON file or builtin:<name>")->required();
  solve->add_option("--method", solve_method, "picard|euler");
  solve->add_option("--k-max", solve_kmax, "Picard iteration cap");
  solve->add_option("--tol", solve_tol, "Picard L2 stopping tolerance");

  CLI::App* verify = app.add_subcommand("verify", "run verification experiments");
  add_common(verify, verify_f);
  verify->add_option("--experiment", verify_experiment, "experiment name or 'all'");
  verify->add_option("--sde-spec", verify_spec, "builtin spec for picard/gronwall");

  CLI::App* report = app.add_subcommand("report", "flatten a JSON report to CSV");
  report->add_option("--in", report_in, "report JSON")->required();
  report->add_option("--out", report_out, "CSV output")->required();

  try {
    const json cfg = load_config_defaults(argc, argv);
    const std::uint64_t default_seed = env_seed();
    gen_f.seed = solve_f.seed = verify_f.seed = default_seed;
    apply_config(cfg, gen_f);
    apply_config(cfg, solve_f);
    apply_config(cfg, verify_f);
    // gen defaults to a small smoke scale; verify defaults to desk scale
    verify_f.n_paths = cfg.contains("paths") ? cfg["paths"].get<int>() : 100000;
    verify_f.format = "json";

    app.parse(argc, argv);

    if (gen->parsed()) return run_gen(gen_f, gen_method, gen_with_b, gen_unit);
    if (solve->parsed()) return run_solve(solve_f, solve_spec, solve_method, solve_kmax, solve_tol);
    if (verify->parsed()) return run_verify(verify_f, verify_experiment, verify_spec);
    if (report->parsed()) return run_report(report_in, report_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const fwn::AccuracyError& e) {
    std::cerr << "accuracy error: " << e.what() << " (achieved " << e.achieved_error
              << ", tail " << e.tail_estimate << ")\n";
    return 3;
  } catch (const fwn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << " (" << e.detail_value << ")\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
