#include "nullwave/runner.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace nullwave {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const ModeResult& RunResult::mode(int ell) const {
  for (const auto& m : modes) {
    if (m.ell == ell) return m;
  }
  throw std::out_of_range("no mode l = " + std::to_string(ell));
}

std::vector<AssumptionReport> check_assumptions(const RunConfig& cfg) {
  std::vector<AssumptionReport> out;
  const auto& k = cfg.checks;
  const BackgroundPtr bg = cfg.background.make();
  const PotentialSet ps = cfg.potential.make();
  if (k.h0) out.push_back(verify_h0(*bg, k.region, k.assumption_ceiling, k.growth_limit));
  if (k.h1) {
    out.push_back(verify_h1(ps, *bg, k.region, k.assumption_ceiling, k.growth_limit));
  }
  if (k.h3) {
    out.push_back(verify_h3(ps, *bg, k.region, k.assumption_ceiling, k.growth_limit));
  }
  return out;
}

namespace {

int p_index(const std::vector<double>& ps, const std::string& text,
            const std::string& quantity) {
  const double p = std::stod(text);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    if (std::abs(ps[k] - p) < 1e-12) return static_cast<int>(k);
  }
  throw std::invalid_argument("quantity '" + quantity +
                              "': p was not recorded (diagnostics.p)");
}

std::string p_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

}  // namespace

std::vector<double> series_column(const EnergySeries& s,
                                  const std::string& quantity,
                                  std::vector<double>* tails) {
  std::vector<double> v, t;
  auto take = [&](auto value, auto tail) {
    for (const auto& r : s.records) {
      v.push_back(value(r));
      t.push_back(tail(r));
    }
  };
  auto zero = [](const EnergyRecord&) { return 0.0; };
  const auto colon = quantity.find(':');
  const std::string head = quantity.substr(0, colon);
  if (quantity == "E") {
    take([](const EnergyRecord& r) { return r.E; },
         [](const EnergyRecord& r) { return r.E_tail; });
  } else if (quantity == "E_T") {
    take([](const EnergyRecord& r) { return r.E_T; },
         [](const EnergyRecord& r) { return r.E_T_tail; });
  } else if (quantity == "phi_R") {
    take([](const EnergyRecord& r) { return r.phi_R; }, zero);
  } else if (quantity == "psi_I") {
    take([](const EnergyRecord& r) { return r.psi_vmax; }, zero);
  } else if (quantity == "psi_I_extrap") {
    take([](const EnergyRecord& r) { return r.psi_extrap; }, zero);
  } else if (colon != std::string::npos &&
             (head == "Ep" || head == "Ep_Psi1" || head == "Ep_Theta0")) {
    const int k = p_index(s.p_values, quantity.substr(colon + 1), quantity);
    if (head == "Ep") {
      take([k](const EnergyRecord& r) { return r.Ep[k]; },
           [k](const EnergyRecord& r) { return r.Ep_tail[k]; });
    } else if (head == "Ep_Psi1") {
      take([k](const EnergyRecord& r) { return r.Ep_Psi1[k]; },
           [k](const EnergyRecord& r) { return r.Ep_Psi1_tail[k]; });
    } else {
      take([k](const EnergyRecord& r) { return r.Ep_Theta0[k]; },
           [k](const EnergyRecord& r) { return r.Ep_Theta0_tail[k]; });
    }
  } else {
    throw std::invalid_argument("unknown quantity '" + quantity + "'");
  }
  if (tails) *tails = std::move(t);
  return v;
}

FitOutcome fit_series(const std::vector<double>& u,
                      const std::vector<double>& values,
                      const std::vector<double>& tails, const FitSpec& spec,
                      double epsilon, double c_tol) {
  FitOutcome out;
  out.spec = spec;
  std::vector<double> uu, yy;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double y = std::abs(values[k]);
    const double t = k < tails.size() ? tails[k] : 0.0;
    if (!(u[k] > 0.0)) continue;
    if (t > spec.tail_gate * y) continue;
    uu.push_back(u[k]);
    yy.push_back(y);
  }
  try {
    FitResult fr = fit_exponent(uu, yy, spec.window);
    out.fit = compare_to_theorem(fr, parse_claim(spec.claim), epsilon, c_tol,
                                 spec.sharp_tol);
  } catch (const std::invalid_argument& e) {
    out.error = e.what();
    out.fit.claim = spec.claim;
    out.fit.verdict = Verdict::inconclusive;
  }
  return out;
}

FitOutcome fit_series(const EnergySeries& s, const FitSpec& spec,
                      double epsilon, double c_tol) {
  std::vector<double> u, tails;
  for (const auto& r : s.records) u.push_back(r.u);
  const std::vector<double> v = series_column(s, spec.quantity, &tails);
  return fit_series(u, v, tails, spec, epsilon, c_tol);
}

namespace {

class Tee final : public RowSink {
 public:
  Tee(RowSink& a, ModeField* field) : a_(a), field_(field) {}
  void row(int i, const double* psi) override {
    if (field_) std::copy(psi, psi + field_->nv() + 1, field_->row(i));
    a_.row(i, psi);
  }
  void finish() override { a_.finish(); }

 private:
  RowSink& a_;
  ModeField* field_;
};

}  // namespace

RunResult execute_run(const RunConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  res.assumptions = check_assumptions(cfg);
  for (const auto& a : res.assumptions) {
    if (!a.pass) {
      res.failures.push_back(a.name + (a.failure.empty() ? "" : ": " + a.failure));
    }
  }

  const BackgroundPtr bg = cfg.background.make();
  const PotentialSet ps = cfg.potential.make();
  const auto& k = cfg.checks;
  for (int ell : cfg.modes) {
    ModeResult m;
    m.ell = ell;
    Evolver ev(bg, ps, cfg.grid, cfg.data, ell);
    DiagnosticsRecorder rec(ev.geometry(), cfg.grid, ps, ell, cfg.diagnostics);
    bool full = cfg.output.field_dump;
    for (const auto& id : cfg.identities) full = full || id.ell == ell;
    std::optional<ModeField> field;
    if (full) field.emplace(cfg.grid, ell, ev.centre_diagonal());
    Tee tee(rec, field ? &*field : nullptr);
    ev.run(tee);
    m.warnings = ev.warnings();
    m.series = rec.take_series();
    const EnergySeries& s = m.series;

    if (!s.records.empty()) {
      const double u1 = k.hardy_u1.value_or(s.records.front().u);
      const double u2 = k.hardy_u2.value_or(s.records.back().u);
      if (k.hardy) m.checks.push_back(hardy_check_outgoing(s, u1, u2, k.hardy_C1, k.hardy_C2));
      if (k.hardy_ingoing) {
        m.checks.push_back(hardy_check_ingoing(s, u1, u2, k.hardy_ingoing_constant));
      }
    }
    if (s.records.size() >= 2) {
      if (k.iled) m.checks.push_back(iled_check(s, k.iled_constant));
      if (k.boundedness) m.checks.push_back(energy_boundedness_check(s, k.boundedness_ceiling));
      if (k.boundedness_T) m.checks.push_back(boundedness_T_check(s, k.boundedness_T_ceiling));
      if (k.pointwise) {
        for (double g : s.gammas) {
          m.checks.push_back(pointwise_from_energy_check(s, g, k.pointwise_constant));
        }
      }
    }
    for (auto& c : m.checks) {
      c.details["ell"] = ell;
      if (!c.pass) {
        res.failures.push_back(c.name + " (l = " + std::to_string(ell) + ")" +
                               (c.note.empty() ? "" : ": " + c.note));
      }
    }

    for (const auto& id : cfg.identities) {
      if (id.ell != ell) continue;
      m.identities.push_back(multiplier_identity_residual(
          *field, ev.geometry(), ps, id.u1, id.u2, id.p,
          id.which == "rp1" ? Identity::rp1 : Identity::rp2));
    }
    if (cfg.output.field_dump) {
      const std::string dir = resolve_output_dir(cfg);
      std::filesystem::create_directories(dir);
      const std::string path = dir + "/" + cfg.output.prefix + "_l" +
                               std::to_string(ell) + ".field";
      write_field_dump(*field, path);
      m.outputs.push_back(path);
    }
    res.modes.push_back(std::move(m));
  }

  for (const FitSpec& f : cfg.fits) {
    FitOutcome fo = fit_series(res.mode(f.ell).series, f, cfg.potential.epsilon,
                               cfg.c_tol);
    if (!fo.pass()) {
      res.failures.push_back("fit " + f.quantity + " (l = " + std::to_string(f.ell) +
                             ", " + f.claim + "): " +
                             (fo.error.empty() ? verdict_name(fo.fit.verdict) : fo.error));
    }
    res.fits.push_back(std::move(fo));
  }
  return res;
}

std::vector<std::string> series_columns(const EnergySeries& s) {
  std::vector<std::string> c{"u", "E", "E_tail", "E_out", "E_in"};
  for (const char* head : {"Ep", "Ep_tail", "Ep_tilde", "Ep_Psi1",
                           "Ep_Psi1_tail", "Ep_Theta0", "Ep_Theta0_tail"}) {
    for (double p : s.p_values) c.push_back(std::string(head) + "_p" + p_label(p));
  }
  for (const char* x : {"E_T", "E_T_tail", "phi_R", "psi_I", "psi_I_extrap"}) {
    c.push_back(x);
  }
  return c;
}

std::string series_csv(const EnergySeries& s, const RunConfig& cfg) {
  std::ostringstream os;
  os << "# nullwave-series v1\n";
  os << "# name=" << cfg.name << " ell=" << s.ell
     << " epsilon=" << format_double(cfg.potential.epsilon)
     << " background=" << cfg.background.kind << "\n";
  const auto cols = series_columns(s);
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << "\n";
  for (const auto& r : s.records) {
    std::vector<double> v{r.u, r.E, r.E_tail, r.E_out, r.E_in};
    for (const auto* vec : {&r.Ep, &r.Ep_tail, &r.Ep_tilde, &r.Ep_Psi1,
                            &r.Ep_Psi1_tail, &r.Ep_Theta0, &r.Ep_Theta0_tail}) {
      v.insert(v.end(), vec->begin(), vec->end());
    }
    for (double x : {r.E_T, r.E_T_tail, r.phi_R, r.psi_vmax, r.psi_extrap}) {
      v.push_back(x);
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      os << (k ? "," : "") << format_double(v[k]);
    }
    os << "\n";
  }
  return os.str();
}

const std::vector<double>& CsvSeries::column(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return columns[k];
  }
  throw std::invalid_argument("series has no column '" + name + "'");
}

bool CsvSeries::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

CsvSeries parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# nullwave-series v1", 0) != 0) {
    throw std::invalid_argument("not a nullwave-series v1 file");
  }
  CsvSeries cs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (cs.names.empty()) {
      cs.names = fields;
      cs.columns.assign(fields.size(), {});
      continue;
    }
    if (fields.size() != cs.names.size()) {
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": wrong number of fields");
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      try {
        cs.columns[k].push_back(std::stod(fields[k]));
      } catch (const std::exception&) {
        if (fields[k] == "nan" || fields[k] == "-nan") {
          cs.columns[k].push_back(std::nan(""));
        } else if (fields[k] == "inf") {
          cs.columns[k].push_back(INFINITY);
        } else {
          throw std::invalid_argument("line " + std::to_string(lineno) +
                                      ": bad number '" + fields[k] + "'");
        }
      }
    }
  }
  if (cs.names.empty()) throw std::invalid_argument("series has no header");
  return cs;
}

std::pair<std::string, std::string> csv_columns_for(const std::string& quantity) {
  if (quantity == "E") return {"E", "E_tail"};
  if (quantity == "E_T") return {"E_T", "E_T_tail"};
  if (quantity == "phi_R" || quantity == "psi_I" || quantity == "psi_I_extrap") {
    return {quantity, ""};
  }
  const auto colon = quantity.find(':');
  if (colon != std::string::npos) {
    const std::string head = quantity.substr(0, colon);
    const std::string p = p_label(std::stod(quantity.substr(colon + 1)));
    if (head == "Ep" || head == "Ep_Psi1" || head == "Ep_Theta0") {
      return {head + "_p" + p, head + "_tail_p" + p};
    }
  }
  // A raw column name.
  return {quantity, ""};
}

nlohmann::json to_json(const InequalityReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["constant"] = r.constant_used;
  j["margin"] = r.margin;
  j["ratio"] = r.ratio;
  j["pass"] = r.pass;
  j["inconclusive"] = r.inconclusive;
  if (!r.note.empty()) j["note"] = r.note;
  j["details"] = nlohmann::json::object();
  for (const auto& [k, v] : r.details) j["details"][k] = v;
  return j;
}

nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["ceiling"] = r.ceiling;
  j["growth_limit"] = r.growth_limit;
  if (!r.failure.empty()) j["failure"] = r.failure;
  j["clauses"] = nlohmann::json::array();
  for (const auto& c : r.clauses) {
    j["clauses"].push_back({{"name", c.name},
                            {"heuristic", c.heuristic},
                            {"sup", c.sup},
                            {"outer", c.outer},
                            {"growth", c.growth},
                            {"at_u", c.at_u},
                            {"at_v", c.at_v},
                            {"finite", c.finite},
                            {"pass", c.pass}});
  }
  return j;
}

nlohmann::json to_json(const FitOutcome& f) {
  nlohmann::json j;
  j["quantity"] = f.spec.quantity;
  j["ell"] = f.spec.ell;
  j["claim"] = f.spec.claim;
  j["pass"] = f.pass();
  if (!f.error.empty()) {
    j["error"] = f.error;
    j["verdict"] = verdict_name(Verdict::inconclusive);
    return j;
  }
  j["exponent"] = f.fit.exponent;
  j["stderr"] = f.fit.stderr_;
  j["window"] = {f.fit.u_lo, f.fit.u_hi};
  j["points"] = f.fit.points;
  j["plateau_quality"] = f.fit.plateau_quality;
  j["local_slope_min"] = f.fit.local_min;
  j["local_slope_max"] = f.fit.local_max;
  j["target"] = f.fit.target;
  j["tolerance"] = f.fit.tolerance;
  j["verdict"] = verdict_name(f.fit.verdict);
  if (!f.fit.note.empty()) j["note"] = f.fit.note;
  return j;
}

nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j;
  j["name"] = r.config.name;
  j["epsilon"] = r.config.potential.epsilon;
  j["background"] = r.config.background.kind;
  j["assumptions"] = nlohmann::json::array();
  for (const auto& a : r.assumptions) j["assumptions"].push_back(to_json(a));
  j["modes"] = nlohmann::json::array();
  j["inequalities"] = nlohmann::json::array();
  for (const auto& m : r.modes) {
    nlohmann::json mj;
    mj["ell"] = m.ell;
    mj["records"] = m.series.records.size();
    mj["warnings"] = m.warnings;
    mj["identities"] = nlohmann::json::array();
    for (const auto& id : m.identities) {
      nlohmann::json ij{{"which", id.which},
                        {"residual", id.residual},
                        {"relative", id.relative},
                        {"largest_term", id.largest_term}};
      for (const auto& [name, v] : id.terms) ij["terms"][name] = v;
      mj["identities"].push_back(ij);
    }
    for (const auto& c : m.checks) j["inequalities"].push_back(to_json(c));
    j["modes"].push_back(mj);
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& f : r.fits) j["fits"].push_back(to_json(f));
  j["failures"] = r.failures;
  j["pass"] = r.pass();
  return j;
}

std::string resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("NULLWAVE_OUTPUT_DIR"); env && *env) {
    return env;
  }
  return cfg.output.dir;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, target);
}

std::vector<std::string> write_run_outputs(const RunResult& r) {
  const std::string dir = resolve_output_dir(r.config);
  const std::string base = dir + "/" + r.config.output.prefix;
  std::vector<std::string> paths;
  for (const auto& m : r.modes) {
    const std::string p = base + "_l" + std::to_string(m.ell) + ".csv";
    atomic_write(p, series_csv(m.series, r.config));
    paths.push_back(p);
    paths.insert(paths.end(), m.outputs.begin(), m.outputs.end());
  }
  const std::string rp = base + "_report.json";
  atomic_write(rp, to_json(r).dump(2) + "\n");
  paths.push_back(rp);
  return paths;
}

bool SweepResult::pass() const {
  for (const auto& p : points) {
    if (!p.ok || !p.result.pass()) return false;
  }
  return true;
}

SweepResult run_sweep(const RunConfig& base, std::vector<double> epsilons) {
  SweepResult out;
  std::vector<double> eps;
  for (double e : epsilons) {
    if (std::find(eps.begin(), eps.end(), e) != eps.end()) {
      out.warnings.push_back("duplicate epsilon " + format_double(e) + " ignored");
      continue;
    }
    eps.push_back(e);
  }
  if (eps.size() < 2) {
    throw ConfigError("sweep needs at least two distinct epsilon values");
  }
  std::vector<RunConfig> cfgs;
  for (double e : eps) {
    RunConfig c = base;
    c.potential.epsilon = e;
    char buf[64];
    std::snprintf(buf, sizeof buf, "_eps%g", e);
    c.output.prefix = base.output.prefix + buf;
    c.name = base.name + buf;
    c.validate();
    cfgs.push_back(std::move(c));
  }
  std::vector<std::future<RunResult>> jobs;
  for (const auto& c : cfgs) {
    jobs.push_back(std::async(std::launch::async, [c] { return execute_run(c); }));
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    SweepPoint p;
    p.epsilon = eps[k];
    try {
      p.result = jobs[k].get();
      p.ok = true;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

nlohmann::json to_json(const SweepResult& s) {
  nlohmann::json j;
  j["warnings"] = s.warnings;
  j["points"] = nlohmann::json::array();
  for (const auto& p : s.points) {
    nlohmann::json pj;
    pj["epsilon"] = p.epsilon;
    pj["ok"] = p.ok;
    pj["sharp_pointwise_target"] = -2.0 * sharp_beta(p.epsilon);
    pj["sharp_radiation_target"] = -sharp_beta(p.epsilon);
    if (!p.ok) {
      pj["error"] = p.error;
    } else {
      pj["pass"] = p.result.pass();
      pj["fits"] = nlohmann::json::array();
      for (const auto& f : p.result.fits) pj["fits"].push_back(to_json(f));
    }
    j["points"].push_back(pj);
  }
  j["pass"] = s.pass();
  return j;
}

std::string sweep_table_csv(const SweepResult& s) {
  std::ostringstream os;
  os << "# nullwave-sweep v1\n";
  os << "epsilon,quantity,ell,claim,exponent,stderr,target,verdict\n";
  for (const auto& p : s.points) {
    if (!p.ok) {
      os << format_double(p.epsilon) << ",error,,,,,,failed\n";
      continue;
    }
    for (const auto& f : p.result.fits) {
      os << format_double(p.epsilon) << "," << f.spec.quantity << ","
         << f.spec.ell << "," << f.spec.claim << ","
         << (f.error.empty() ? format_double(f.fit.exponent) : "") << ","
         << (f.error.empty() ? format_double(f.fit.stderr_) : "") << ","
         << format_double(theorem_target(parse_claim(f.spec.claim), p.epsilon))
         << "," << verdict_name(f.fit.verdict) << "\n";
    }
  }
  return os.str();
}

std::vector<ConvergenceEntry> run_convergence(const RunConfig& cfg) {
  cfg.validate();
  const BackgroundPtr bg = cfg.background.make();
  const PotentialSet ps = cfg.potential.make();
  std::vector<ConvergenceEntry> out;
  for (int ell : cfg.modes) {
    ConvergenceEntry e;
    e.ell = ell;
    e.report = convergence_order(bg, ps, cfg.grid, cfg.data, ell);
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json to_json(const std::vector<ConvergenceEntry>& c) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : c) {
    nlohmann::json ej;
    ej["ell"] = e.ell;
    ej["h"] = e.report.h;
    ej["error_coarse"] = e.report.error_coarse;
    ej["error_fine"] = e.report.error_fine;
    ej["order"] = e.report.order;
    ej["inconclusive"] = e.report.inconclusive;
    if (!e.report.note.empty()) ej["note"] = e.report.note;
    ej["probes"] = nlohmann::json::array();
    for (const auto& p : e.report.probes) {
      ej["probes"].push_back({{"u", p.u},
                              {"v", p.v},
                              {"values", {p.values[0], p.values[1], p.values[2]}},
                              {"order", p.order},
                              {"inconclusive", p.inconclusive}});
    }
    j.push_back(ej);
  }
  return j;
}

}  // namespace nullwave
