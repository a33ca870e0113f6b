#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nullwave/config.hpp"
#include "nullwave/diagnostics.hpp"
#include "nullwave/ratefit.hpp"

namespace nullwave {

struct ModeResult {
  int ell = 0;
  EnergySeries series;
  std::vector<InequalityReport> checks;
  std::vector<IdentityResidual> identities;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;  // extra files (field dumps)
};

struct FitOutcome {
  FitSpec spec;
  FitResult fit;
  std::string error;  // set when the fit could not be made
  bool pass() const {
    return error.empty() && (fit.verdict == Verdict::meets_bound ||
                             fit.verdict == Verdict::saturates_sharp);
  }
};

struct RunResult {
  RunConfig config;
  std::vector<AssumptionReport> assumptions;
  std::vector<ModeResult> modes;
  std::vector<FitOutcome> fits;
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
  const ModeResult& mode(int ell) const;
};

/// Validates, checks the enabled assumptions, evolves every mode with
/// streaming diagnostics (full storage when identities or a dump are
/// requested), runs the enabled checks and the fits. Writes nothing except
/// field dumps. Throws ConfigError or NumericalAbort.
RunResult execute_run(const RunConfig& cfg);

std::vector<AssumptionReport> check_assumptions(const RunConfig& cfg);

/// One quantity of the series (see FitSpec::quantity); tails receives the
/// matching truncation estimates (zeros for pointwise samples).
std::vector<double> series_column(const EnergySeries& s,
                                  const std::string& quantity,
                                  std::vector<double>* tails = nullptr);

/// Fits |quantity| against u over the records that pass the tail gate.
FitOutcome fit_series(const std::vector<double>& u,
                      const std::vector<double>& values,
                      const std::vector<double>& tails, const FitSpec& spec,
                      double epsilon, double c_tol);
FitOutcome fit_series(const EnergySeries& s, const FitSpec& spec,
                      double epsilon, double c_tol);

/// Columns of the CSV series file, in order.
std::vector<std::string> series_columns(const EnergySeries& s);
std::string series_csv(const EnergySeries& s, const RunConfig& cfg);

/// Header names and numeric columns of a series CSV.
struct CsvSeries {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
  bool has(const std::string& name) const;
};
CsvSeries parse_series_csv(const std::string& text);
/// CSV column names for a fit quantity: value and tail ("" if none).
std::pair<std::string, std::string> csv_columns_for(const std::string& quantity);

nlohmann::json to_json(const InequalityReport& r);
nlohmann::json to_json(const AssumptionReport& r);
nlohmann::json to_json(const FitOutcome& f);
nlohmann::json to_json(const RunResult& r);

/// NULLWAVE_OUTPUT_DIR overrides the configured directory.
std::string resolve_output_dir(const RunConfig& cfg);
/// Writes via a temporary file in the same directory and renames it.
void atomic_write(const std::string& path, const std::string& content);
/// Series CSV per mode plus <prefix>_report.json; returns the paths.
std::vector<std::string> write_run_outputs(const RunResult& r);

std::string format_double(double x);

struct SweepPoint {
  double epsilon = 0.0;
  bool ok = false;
  std::string error;
  RunResult result;
};

struct SweepResult {
  std::vector<std::string> warnings;
  std::vector<SweepPoint> points;
  bool pass() const;
};

/// Runs base with each epsilon (deduplicated, at least two values) on a
/// worker pool; a failing point is recorded without aborting the others.
SweepResult run_sweep(const RunConfig& base, std::vector<double> epsilons);
nlohmann::json to_json(const SweepResult& s);
std::string sweep_table_csv(const SweepResult& s);

struct ConvergenceEntry {
  int ell = 0;
  ConvergenceReport report;
};
std::vector<ConvergenceEntry> run_convergence(const RunConfig& cfg);
nlohmann::json to_json(const std::vector<ConvergenceEntry>& c);

}  // namespace nullwave
