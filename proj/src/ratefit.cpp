#include "nullwave/ratefit.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace nullwave {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::meets_bound: return "meets-bound";
    case Verdict::saturates_sharp: return "saturates-sharp";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::none: return "none";
  }
  return "none";
}

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
};

Line least_squares(const double* x, const double* y, int n) {
  double mx = 0.0, my = 0.0;
  for (int k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  if (n > 2) {
    double ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const double e = y[k] - (l.intercept + l.slope * x[k]);
      ss += e * e;
    }
    l.stderr_ = std::sqrt(ss / (n - 2) / sxx);
  }
  return l;
}

std::string normalise(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Claim parse_claim(const std::string& name) {
  const std::string s = normalise(name);
  if (s == "energy") return Claim::energy;
  if (s == "radiation") return Claim::radiation;
  if (s == "pointwise_r") return Claim::pointwise_r;
  if (s == "pointwise_bulk") return Claim::pointwise_bulk;
  if (s == "t_energy") return Claim::T_energy;
  if (s == "higher_modes") return Claim::higher_modes;
  if (s == "sharp" || s == "sharp_pointwise") return Claim::sharp_pointwise;
  if (s == "sharp_radiation") return Claim::sharp_radiation;
  throw std::invalid_argument("unknown claim '" + name + "'");
}

std::string claim_name(Claim c) {
  switch (c) {
    case Claim::energy: return "energy";
    case Claim::radiation: return "radiation";
    case Claim::pointwise_r: return "pointwise_r";
    case Claim::pointwise_bulk: return "pointwise_bulk";
    case Claim::T_energy: return "T_energy";
    case Claim::higher_modes: return "higher_modes";
    case Claim::sharp_pointwise: return "sharp_pointwise";
    case Claim::sharp_radiation: return "sharp_radiation";
  }
  return "energy";
}

FitResult fit_exponent(const std::vector<double>& u,
                       const std::vector<double>& y,
                       std::optional<std::pair<double, double>> window) {
  if (u.size() != y.size()) {
    throw std::invalid_argument("fit: u and y differ in length");
  }
  double lo, hi;
  if (window) {
    lo = window->first;
    hi = window->second;
    if (!(lo > 0.0 && hi > lo)) {
      throw std::invalid_argument("fit: window must satisfy 0 < lo < hi");
    }
  } else {
    double umin = std::numeric_limits<double>::infinity(), umax = 0.0;
    for (double x : u) {
      if (x > 0.0) {
        umin = std::min(umin, x);
        umax = std::max(umax, x);
      }
    }
    if (!(umax > 0.0)) throw std::invalid_argument("fit: no positive u");
    hi = umax;
    lo = std::max(umin, umax / 10.0);
  }
  std::vector<double> lx, ly;
  const double tol = 1e-12 * std::max(1.0, hi);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] >= lo - tol && u[k] <= hi + tol)) continue;
    if (!(y[k] > 0.0) || !std::isfinite(y[k])) {
      throw std::invalid_argument("fit: non-positive value at u = " +
                                  std::to_string(u[k]));
    }
    lx.push_back(std::log(u[k]));
    ly.push_back(std::log(y[k]));
  }
  const int n = static_cast<int>(lx.size());
  if (n < 8) {
    throw std::invalid_argument("fit: " + std::to_string(n) +
                                " points in the window, need at least 8");
  }
  const Line g = least_squares(lx.data(), ly.data(), n);
  FitResult fr;
  fr.exponent = g.slope;
  fr.stderr_ = g.stderr_;
  fr.u_lo = std::exp(lx.front());
  fr.u_hi = std::exp(lx.back());
  fr.points = n;
  // Sliding local slopes over a quarter of the window (at least 4 points).
  const int m = std::max(4, n / 4);
  double dev = 0.0;
  fr.local_max = -std::numeric_limits<double>::infinity();
  fr.local_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k + m <= n; ++k) {
    const Line l = least_squares(lx.data() + k, ly.data() + k, m);
    dev = std::max(dev, std::abs(l.slope - g.slope));
    fr.local_max = std::max(fr.local_max, l.slope);
    fr.local_min = std::min(fr.local_min, l.slope);
  }
  fr.plateau_quality = dev;
  if (!(dev <= kPlateauLimit)) {
    fr.inconclusive = true;
    fr.note = "local log-derivative does not plateau";
  }
  return fr;
}

double sharp_beta(double epsilon) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * epsilon));
}

double theorem_target(Claim claim, double epsilon) {
  switch (claim) {
    case Claim::energy: return -3.0;
    case Claim::radiation: return -1.0;
    case Claim::pointwise_r: return -2.0;
    case Claim::pointwise_bulk: return -1.0;
    case Claim::T_energy: return -5.0;
    case Claim::higher_modes: return -4.0;
    case Claim::sharp_pointwise: return -2.0 * sharp_beta(epsilon);
    case Claim::sharp_radiation: return -sharp_beta(epsilon);
  }
  return 0.0;
}

FitResult compare_to_theorem(FitResult fit, Claim claim, double epsilon,
                             double c_tol, std::optional<double> sharp_tol) {
  fit.claim = claim_name(claim);
  fit.target = theorem_target(claim, epsilon);
  const bool sharp =
      claim == Claim::sharp_pointwise || claim == Claim::sharp_radiation;
  if (sharp) {
    const double base =
        sharp_tol ? *sharp_tol : (claim == Claim::sharp_pointwise ? 0.1 : 0.05);
    fit.tolerance = base + fit.stderr_;
  } else {
    fit.tolerance = c_tol * std::sqrt(std::abs(epsilon)) + fit.stderr_;
  }
  if (!std::isfinite(fit.exponent)) {
    fit.verdict = Verdict::inconclusive;
  } else if (fit.inconclusive) {
    const double bound = fit.target + fit.tolerance;
    if (!sharp && fit.local_max <= bound) {
      fit.verdict = Verdict::meets_bound;
    } else if (!sharp && fit.local_min > bound) {
      fit.verdict = Verdict::fails;
    } else {
      fit.verdict = Verdict::inconclusive;
    }
  } else if (sharp) {
    fit.verdict = std::abs(fit.exponent - fit.target) <= fit.tolerance
                      ? Verdict::saturates_sharp
                      : Verdict::fails;
  } else {
    fit.verdict = fit.exponent <= fit.target + fit.tolerance
                      ? Verdict::meets_bound
                      : Verdict::fails;
  }
  return fit;
}

}  // namespace nullwave
