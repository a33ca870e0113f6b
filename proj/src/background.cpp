#include "nullwave/background.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nullwave {

GeometrySample Minkowski::sample(double u, double v) const {
  GeometrySample g;
  g.r = v - u;
  g.omega2 = 4.0;
  g.dr_du = -1.0;
  g.dr_dv = 1.0;
  return g;
}

ReissnerNordstrom::ReissnerNordstrom(double mass, double charge)
    : mass_(mass), charge_(charge) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("reissner_nordstrom: mass must be >= 0");
  }
  if (!(std::abs(charge) <= mass) && !(mass == 0.0 && charge == 0.0)) {
    throw std::invalid_argument(
        "reissner_nordstrom: |charge| must not exceed the mass");
  }
  const double disc = std::sqrt(std::max(0.0, mass * mass - charge * charge));
  r_plus_ = mass + disc;
  r_minus_ = mass - disc;
  // Near-extremal logs are ill-conditioned; switch to the extremal form.
  extremal_ = mass > 0.0 && disc < 1e-8 * mass;
  if (extremal_) {
    r_plus_ = r_minus_ = mass;
  }
  if (mass > 0.0) {
    offset_ = 3.0 * mass - tortoise_unshifted(3.0 * mass);
  }
}

std::optional<double> ReissnerNordstrom::center_rho() const {
  if (mass_ == 0.0) return 0.0;
  return std::nullopt;
}

double ReissnerNordstrom::lapse(double r) const {
  return 1.0 - 2.0 * mass_ / r + charge_ * charge_ / (r * r);
}

double ReissnerNordstrom::lapse_d1(double r) const {
  return 2.0 * mass_ / (r * r) - 2.0 * charge_ * charge_ / (r * r * r);
}

double ReissnerNordstrom::lapse_d2(double r) const {
  const double r2 = r * r;
  return -4.0 * mass_ / (r2 * r) + 6.0 * charge_ * charge_ / (r2 * r2);
}

namespace {

// r* as a function of s = log(r - r+), without the normalisation offset.
double tortoise_of_s(double s, double r_plus, double r_minus, bool extremal) {
  const double delta = std::exp(s);
  const double r = r_plus + delta;
  if (extremal) {
    return r + 2.0 * r_plus * s - r_plus * r_plus / delta;
  }
  const double gap = r_plus - r_minus;
  double value = r + r_plus * r_plus / gap * s;
  if (r_minus > 0.0) {
    value -= r_minus * r_minus / gap * std::log(r - r_minus);
  }
  return value;
}

}  // namespace

double ReissnerNordstrom::tortoise_unshifted(double r) const {
  return tortoise_of_s(std::log(r - r_plus_), r_plus_, r_minus_, extremal_);
}

double ReissnerNordstrom::tortoise(double r) const {
  if (!(r > r_plus_)) {
    throw std::domain_error("reissner_nordstrom: evaluation at r <= r+");
  }
  if (mass_ == 0.0) return r;
  return tortoise_unshifted(r) + offset_;
}

double ReissnerNordstrom::radius(double rstar) const {
  if (!std::isfinite(rstar)) {
    throw std::domain_error("reissner_nordstrom: non-finite tortoise value");
  }
  if (mass_ == 0.0) {
    if (!(rstar > 0.0)) {
      throw std::domain_error("reissner_nordstrom: evaluation at r <= r+");
    }
    return rstar;
  }
  auto f = [&](double s) {
    return tortoise_of_s(s, r_plus_, r_minus_, extremal_) + offset_ - rstar;
  };
  // df/ds = e^s / D(r) = r^2 / (r - r-)
  auto df = [&](double s) {
    const double r = r_plus_ + std::exp(s);
    return r * r / (r - r_minus_);
  };

  double s;
  if (rstar > r_plus_ + 1.0) {
    s = std::log(rstar - r_plus_);
  } else if (extremal_) {
    s = rstar < 0.0 ? std::log(mass_ * mass_ / (mass_ - rstar)) : 0.0;
  } else {
    s = (rstar - r_plus_) * (r_plus_ - r_minus_) / (r_plus_ * r_plus_);
  }

  // Bracket the root; f is strictly increasing in s.
  double lo = s, hi = s;
  double step = 1.0;
  while (f(lo) > 0.0) {
    lo -= step;
    step *= 2.0;
  }
  step = 1.0;
  while (f(hi) < 0.0) {
    hi += step;
    step *= 2.0;
  }

  for (int iter = 0; iter < 200; ++iter) {
    const double fs = f(s);
    if (fs == 0.0) break;
    if (fs < 0.0) {
      lo = s;
    } else {
      hi = s;
    }
    double next = s - fs / df(s);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double change = std::abs(next - s);
    s = next;
    if (change <= 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  return r_plus_ + std::exp(s);
}

GeometrySample ReissnerNordstrom::sample_at_radius(double r) const {
  const double d = lapse(r);
  const double d1 = lapse_d1(r);
  const double d2 = lapse_d2(r);
  GeometrySample g;
  g.r = r;
  g.omega2 = 4.0 * d;
  g.dr_dv = d;
  g.dr_du = -d;
  g.d2r_dudv = -d * d1;
  g.d2r_dvdv = d * d1;
  g.d3r_dudvdv = -d * (d1 * d1 + d * d2);
  g.domega2_dv = 4.0 * d1 * d;
  g.domega2_du = -4.0 * d1 * d;
  g.d2omega2_dudv = -4.0 * d * (d1 * d1 + d * d2);
  return g;
}

GeometrySample ReissnerNordstrom::sample(double u, double v) const {
  const double rho = v - u;
  if (mass_ == 0.0) {
    if (!(rho > 0.0)) {
      throw std::domain_error("reissner_nordstrom: evaluation at r <= r+");
    }
    return sample_at_radius(rho);
  }
  return sample_at_radius(radius(rho));
}

BackgroundPtr make_minkowski() { return std::make_shared<Minkowski>(); }

BackgroundPtr make_reissner_nordstrom(double mass, double charge) {
  return std::make_shared<ReissnerNordstrom>(mass, charge);
}

std::vector<SampleRegion::Point> SampleRegion::points() const {
  std::vector<Point> pts;
  const int nu = std::max(1, n_u);
  const int nr = std::max(2, n_rho);
  pts.reserve(static_cast<std::size_t>(nu) * nr);
  for (int a = 0; a < nu; ++a) {
    const double u = nu == 1 ? u_lo : u_lo + (u_hi - u_lo) * a / (nu - 1);
    for (int b = 0; b < nr; ++b) {
      const double t = static_cast<double>(b) / (nr - 1);
      const double rho = rho_lo > 0.0
                             ? rho_lo * std::pow(rho_hi / rho_lo, t)
                             : rho_lo + (rho_hi - rho_lo) * t;
      pts.push_back({u, u + rho});
    }
  }
  return pts;
}

void BandedSup::add(double value, double r, double u, double v) {
  const double a = std::abs(value);
  if (empty_ || a > sup_) {
    sup_ = a;
    at_u_ = u;
    at_v_ = v;
    empty_ = false;
  }
  if (r >= 0.5 * r_max_) {
    outer_ = std::max(outer_, a);
  } else if (r >= 0.25 * r_max_) {
    inner_ = std::max(inner_, a);
  }
}

double BandedSup::growth() const {
  if (outer_ == 0.0) return 0.0;
  if (inner_ == 0.0) return std::numeric_limits<double>::infinity();
  return outer_ / inner_;
}

const BoundClause& AssumptionReport::clause(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("assumption report has no clause named " + name);
}

BoundClause make_clause(const std::string& name, const BandedSup& sup,
                        bool heuristic, bool finite, double ceiling,
                        double growth_limit) {
  BoundClause c;
  c.name = name;
  c.heuristic = heuristic;
  c.sup = sup.sup();
  c.outer = sup.outer();
  c.at_u = sup.at_u();
  c.at_v = sup.at_v();
  c.growth = sup.growth();
  c.finite = finite;
  const bool growing =
      c.growth > growth_limit && c.outer > kGrowthFloor * ceiling;
  if (heuristic) {
    c.pass = finite && c.outer <= 0.5 * ceiling && !growing;
  } else {
    c.pass = finite && c.sup <= ceiling && !growing;
  }
  return c;
}

AssumptionReport verify_h0(const Background& bg, const SampleRegion& region,
                           double ceiling, double growth_limit) {
  AssumptionReport report;
  report.name = "H0";
  report.ceiling = ceiling;
  report.growth_limit = growth_limit;

  const auto pts = region.points();
  std::vector<GeometrySample> samples;
  samples.reserve(pts.size());
  double r_max = 0.0;
  for (const auto& p : pts) {
    GeometrySample g = bg.sample(p.u, p.v);
    samples.push_back(g);
    if (std::isfinite(g.r)) r_max = std::max(r_max, g.r);
  }

  static const char* names[] = {"r|1-dv_r|",      "r|1+du_r|",
                                "r|omega2-4|",    "r^2|dv_omega2|",
                                "r^2|dvv_r|",     "r^2|duv_r|",
                                "r^2|duvv_r|"};
  constexpr int kClauses = 7;
  std::vector<BandedSup> sups(kClauses, BandedSup(r_max));
  std::vector<bool> finite(kClauses, true);

  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& g = samples[k];
    const double r = g.r;
    const double vals[kClauses] = {
        r * (1.0 - g.dr_dv),  r * (1.0 + g.dr_du),  r * (g.omega2 - 4.0),
        r * r * g.domega2_dv, r * r * g.d2r_dvdv,   r * r * g.d2r_dudv,
        r * r * g.d3r_dudvdv};
    for (int c = 0; c < kClauses; ++c) {
      if (!std::isfinite(vals[c]) || !std::isfinite(r)) {
        if (report.failure.empty()) {
          std::ostringstream os;
          os << "non-finite " << names[c] << " at (u, v) = (" << pts[k].u
             << ", " << pts[k].v << ")";
          report.failure = os.str();
        }
        finite[c] = false;
        continue;
      }
      sups[c].add(vals[c], r, pts[k].u, pts[k].v);
    }
  }

  for (int c = 0; c < kClauses; ++c) {
    report.clauses.push_back(make_clause(names[c], sups[c], false, finite[c],
                                         ceiling, growth_limit));
    report.pass = report.pass && report.clauses.back().pass;
  }
  return report;
}

}  // namespace nullwave
