#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nullwave {

enum class Verdict { meets_bound, saturates_sharp, fails, inconclusive, none };

std::string verdict_name(Verdict v);

enum class Claim {
  energy,
  radiation,
  pointwise_r,
  pointwise_bulk,
  T_energy,
  higher_modes,
  sharp_pointwise,
  sharp_radiation,
};

/// Accepts the names above with dashes or underscores; "sharp" means
/// sharp_pointwise. Throws std::invalid_argument for unknown labels.
Claim parse_claim(const std::string& name);
std::string claim_name(Claim c);

struct FitResult {
  double exponent = 0.0;
  double stderr_ = 0.0;
  double u_lo = 0.0;
  double u_hi = 0.0;
  int points = 0;
  /// Largest deviation of the sliding local log-derivative from exponent.
  double plateau_quality = 0.0;
  /// Shallowest and steepest sliding local log-derivative.
  double local_max = 0.0;
  double local_min = 0.0;
  bool inconclusive = false;
  std::string note;
  // Filled by compare_to_theorem.
  std::string claim;
  double target = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::none;
};

/// Local slopes deviating from the global one by more than this make a fit
/// inconclusive.
inline constexpr double kPlateauLimit = 0.5;

/// Least-squares slope of log y against log u. Without a window the last
/// decade [u_max / 10, u_max] of the positive-u data is used (all of it if
/// the data span less than a decade). Throws std::invalid_argument when the
/// window holds fewer than 8 points or a non-positive y.
FitResult fit_exponent(const std::vector<double>& u,
                       const std::vector<double>& y,
                       std::optional<std::pair<double, double>> window = {});

/// beta = (1 + sqrt(1 + 4 eps)) / 2.
double sharp_beta(double epsilon);

/// Upper-bound claims pass ("meets-bound") iff exponent <= target + tol with
/// tol = c_tol sqrt(eps) + stderr. A fit without a plateau still meets an
/// upper bound when every local slope does, and fails when none does. Sharp claims pass ("saturates-sharp") iff
/// |exponent - target| <= sharp_tol (+ stderr), with target -2 beta for the
/// pointwise value at fixed r and -beta for the radiation field.
FitResult compare_to_theorem(FitResult fit, Claim claim, double epsilon,
                             double c_tol = 1.0,
                             std::optional<double> sharp_tol = {});

double theorem_target(Claim claim, double epsilon);

}  // namespace nullwave
