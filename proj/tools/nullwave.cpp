#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nullwave/config.hpp"
#include "nullwave/runner.hpp"

using namespace nullwave;

namespace {

enum Exit { kOk = 0, kChecksFailed = 1, kConfigError = 2, kNumericalAbort = 3 };

void print_run(const RunResult& r, const std::vector<std::string>& paths) {
  std::printf("run %s: %s\n", r.config.name.c_str(), r.pass() ? "pass" : "FAIL");
  for (const auto& a : r.assumptions) {
    std::printf("  assumption %-4s %s\n", a.name.c_str(), a.pass ? "pass" : "fail");
  }
  for (const auto& m : r.modes) {
    for (const auto& w : m.warnings) std::printf("  warning (l = %d): %s\n", m.ell, w.c_str());
    for (const auto& c : m.checks) {
      std::printf("  l=%d %-17s lhs %.6g rhs %.6g ratio %.4g %s\n", m.ell,
                  c.name.c_str(), c.lhs, c.rhs, c.ratio, c.pass ? "pass" : "fail");
    }
    for (const auto& id : m.identities) {
      std::printf("  l=%d identity %s relative residual %.3e\n", m.ell,
                  id.which.c_str(), id.relative);
    }
  }
  for (const auto& f : r.fits) {
    if (!f.error.empty()) {
      std::printf("  fit %s (l=%d, %s): %s\n", f.spec.quantity.c_str(), f.spec.ell,
                  f.spec.claim.c_str(), f.error.c_str());
      continue;
    }
    std::printf("  fit %s (l=%d): exponent %.4f +- %.4f on [%g, %g], target %.4f, %s\n",
                f.spec.quantity.c_str(), f.spec.ell, f.fit.exponent, f.fit.stderr_,
                f.fit.u_lo, f.fit.u_hi, f.fit.target,
                verdict_name(f.fit.verdict).c_str());
    if (f.fit.inconclusive) {
      std::printf("    no plateau: local slopes in [%.4f, %.4f]\n", f.fit.local_min,
                  f.fit.local_max);
    }
  }
  for (const auto& p : paths) std::printf("  wrote %s\n", p.c_str());
}

RunConfig load_config(const std::string& path, const std::string& out_dir) {
  RunConfig c = RunConfig::load(path);
  if (!out_dir.empty()) c.output.dir = out_dir;
  c.validate();
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characteristic evolution of scale-critical wave equations"};
  app.require_subcommand(1);

  std::string config_path, out_dir;

  auto* run = app.add_subcommand("run", "Evolve, check and fit one configuration");
  run->add_option("config", config_path, "TOML configuration")->required();
  run->add_option("--output-dir", out_dir, "Override output.dir");

  std::vector<double> eps;
  auto* sweep = app.add_subcommand("sweep", "Repeat a run over several epsilon values");
  sweep->add_option("config", config_path, "TOML configuration")->required();
  sweep->add_option("--eps", eps, "Epsilon values")->required();
  sweep->add_option("--output-dir", out_dir, "Override output.dir");

  std::string csv_path, quantity = "E", claim = "energy";
  double fit_eps = 0.0, tail_gate = 0.01, c_tol = 1.0;
  std::vector<double> window;
  auto* fit = app.add_subcommand("fit", "Fit a decay exponent from a series CSV");
  fit->add_option("csv", csv_path, "Series CSV written by run")->required();
  fit->add_option("--quantity", quantity, "E, E_T, Ep:<p>, phi_R, psi_I, ...");
  fit->add_option("--claim", claim, "energy, radiation, pointwise_r, T_energy, "
                                    "higher_modes, sharp, sharp_radiation");
  fit->add_option("--eps", fit_eps, "Epsilon of the run");
  fit->add_option("--window", window, "u_lo u_hi")->expected(2);
  fit->add_option("--tail-gate", tail_gate, "Maximum tail / value ratio");
  fit->add_option("--c-tol", c_tol, "Tolerance factor for upper-bound claims");

  auto* conv = app.add_subcommand("convergence", "Three-level Richardson order");
  conv->add_option("config", config_path, "TOML configuration")->required();
  conv->add_option("--output-dir", out_dir, "Override output.dir");

  auto* assume = app.add_subcommand("check-assumptions",
                                    "Check the background and coefficient assumptions");
  assume->add_option("config", config_path, "TOML configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      const RunConfig c = load_config(config_path, out_dir);
      const RunResult r = execute_run(c);
      print_run(r, write_run_outputs(r));
      return r.pass() ? kOk : kChecksFailed;
    }
    if (*sweep) {
      const RunConfig c = load_config(config_path, out_dir);
      const SweepResult s = run_sweep(c, eps);
      for (const auto& w : s.warnings) std::printf("warning: %s\n", w.c_str());
      const std::string base = resolve_output_dir(c) + "/" + c.output.prefix;
      for (const auto& p : s.points) {
        if (p.ok) {
          print_run(p.result, write_run_outputs(p.result));
        } else {
          std::printf("run eps=%g: error: %s\n", p.epsilon, p.error.c_str());
        }
      }
      atomic_write(base + "_sweep.csv", sweep_table_csv(s));
      atomic_write(base + "_sweep.json", to_json(s).dump(2) + "\n");
      std::printf("wrote %s_sweep.csv and %s_sweep.json\n", base.c_str(), base.c_str());
      return s.pass() ? kOk : kChecksFailed;
    }
    if (*fit) {
      const CsvSeries cs = parse_series_csv(read_file(csv_path));
      const auto [vcol, tcol] = csv_columns_for(quantity);
      std::vector<double> tails;
      if (!tcol.empty() && cs.has(tcol)) tails = cs.column(tcol);
      FitSpec spec;
      spec.quantity = quantity;
      spec.claim = claim;
      spec.tail_gate = tail_gate;
      if (window.size() == 2) spec.window = std::make_pair(window[0], window[1]);
      (void)parse_claim(claim);
      const FitOutcome fo =
          fit_series(cs.column("u"), cs.column(vcol), tails, spec, fit_eps, c_tol);
      std::printf("%s\n", to_json(fo).dump(2).c_str());
      return fo.pass() ? kOk : kChecksFailed;
    }
    if (*conv) {
      const RunConfig c = load_config(config_path, out_dir);
      const auto entries = run_convergence(c);
      bool ok = true;
      for (const auto& e : entries) {
        std::printf("l=%d order %.4f (errors %.3e, %.3e)%s\n", e.ell, e.report.order,
                    e.report.error_coarse, e.report.error_fine,
                    e.report.inconclusive ? " inconclusive" : "");
        ok = ok && !e.report.inconclusive && e.report.order >= 1.8 && e.report.order <= 2.2;
      }
      const std::string path =
          resolve_output_dir(c) + "/" + c.output.prefix + "_convergence.json";
      atomic_write(path, to_json(entries).dump(2) + "\n");
      std::printf("wrote %s\n", path.c_str());
      return ok ? kOk : kChecksFailed;
    }
    if (*assume) {
      RunConfig c = RunConfig::load(config_path);
      c.validate();
      const auto reports = check_assumptions(c);
      bool ok = true;
      for (const auto& a : reports) {
        std::printf("%s: %s\n", a.name.c_str(), a.pass ? "pass" : "fail");
        for (const auto& cl : a.clauses) {
          std::printf("  %-14s sup %-12.6g growth %-8.4g %s%s\n", cl.name.c_str(), cl.sup,
                      cl.growth, cl.pass ? "pass" : "fail",
                      cl.heuristic ? " (heuristic)" : "");
        }
        ok = ok && a.pass;
      }
      return ok ? kOk : kChecksFailed;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const NumericalAbort& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return kNumericalAbort;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  }
  return kOk;
}
