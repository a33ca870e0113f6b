#include "nullwave/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nullwave {

namespace {

constexpr unsigned bit(Var x) { return 1u << static_cast<unsigned>(x); }

class ConstantCoefficient final : public Coefficient {
 public:
  explicit ConstantCoefficient(double c) : c_(c) {}
  double value(const Vars&) const override { return c_; }
  double partial(Var, const Vars&) const override { return 0.0; }
  bool depends_on(Var) const override { return false; }
  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << c_;
    return os.str();
  }
  bool is_zero() const override { return c_ == 0.0; }

 private:
  double c_;
};

class ExpressionCoefficient final : public Coefficient {
 public:
  explicit ExpressionCoefficient(Expression e) : e_(std::move(e)) {}
  double value(const Vars& x) const override { return e_.evaluate(x); }
  double partial(Var which, const Vars& x) const override {
    if (!e_.uses(which)) return 0.0;
    const double x0 = x.get(which);
    const double step = std::max(1e-6, 1e-8 * std::abs(x0));
    Vars lo = x, hi = x;
    lo.set(which, x0 - step);
    hi.set(which, x0 + step);
    return (e_.evaluate(hi) - e_.evaluate(lo)) / (2.0 * step);
  }
  bool depends_on(Var which) const override { return e_.uses(which); }
  std::string describe() const override { return e_.source(); }

 private:
  Expression e_;
};

class AnalyticCoefficient final : public Coefficient {
 public:
  AnalyticCoefficient(std::string name,
                      std::function<double(const Vars&)> value,
                      std::function<double(Var, const Vars&)> partial,
                      unsigned mask)
      : name_(std::move(name)),
        value_(std::move(value)),
        partial_(std::move(partial)),
        mask_(mask) {}
  double value(const Vars& x) const override { return value_(x); }
  double partial(Var which, const Vars& x) const override {
    if (!depends_on(which)) return 0.0;
    return partial_(which, x);
  }
  bool depends_on(Var which) const override { return mask_ & bit(which); }
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  std::function<double(const Vars&)> value_;
  std::function<double(Var, const Vars&)> partial_;
  unsigned mask_;
};

Vars make_vars(double u, double v, double r) { return Vars{u, v, r, u + v}; }

}  // namespace

CoefficientPtr constant_coefficient(double c) {
  return std::make_shared<ConstantCoefficient>(c);
}

CoefficientPtr expression_coefficient(const Expression& e) {
  if (e.is_constant()) return constant_coefficient(e.evaluate(Vars{}));
  return std::make_shared<ExpressionCoefficient>(e);
}

CoefficientPtr expression_coefficient(const std::string& text) {
  return expression_coefficient(Expression::parse(text));
}

CoefficientPtr analytic_coefficient(
    std::string name, std::function<double(const Vars&)> value,
    std::function<double(Var, const Vars&)> partial, unsigned depends_mask) {
  return std::make_shared<AnalyticCoefficient>(
      std::move(name), std::move(value), std::move(partial), depends_mask);
}

namespace builtin {

CoefficientPtr oscillating() {
  return analytic_coefficient(
      "sin(u + log(r))",
      [](const Vars& x) { return std::sin(x.u + std::log(x.r)); },
      [](Var w, const Vars& x) {
        const double c = std::cos(x.u + std::log(x.r));
        return w == Var::u ? c : c / x.r;
      },
      bit(Var::u) | bit(Var::r));
}

CoefficientPtr log_oscillating() {
  return analytic_coefficient(
      "sin(log(u) + log(r))",
      [](const Vars& x) { return std::sin(std::log(x.u) + std::log(x.r)); },
      [](Var w, const Vars& x) {
        const double c = std::cos(std::log(x.u) + std::log(x.r));
        return w == Var::u ? c / x.u : c / x.r;
      },
      bit(Var::u) | bit(Var::r));
}

CoefficientPtr power_r(double a) {
  std::ostringstream os;
  os.precision(17);
  os << "r^" << a;
  return analytic_coefficient(
      os.str(), [a](const Vars& x) { return std::pow(x.r, a); },
      [a](Var, const Vars& x) { return a * std::pow(x.r, a - 1.0); },
      bit(Var::r));
}

CoefficientPtr decaying(double a) {
  std::ostringstream os;
  os.precision(17);
  os << "(1 + r)^(-" << a << ") * cos(log(r))";
  return analytic_coefficient(
      os.str(),
      [a](const Vars& x) {
        return std::pow(1.0 + x.r, -a) * std::cos(std::log(x.r));
      },
      [a](Var, const Vars& x) {
        const double p = std::pow(1.0 + x.r, -a);
        const double l = std::log(x.r);
        return -a * p / (1.0 + x.r) * std::cos(l) - p * std::sin(l) / x.r;
      },
      bit(Var::r));
}

}  // namespace builtin

PotentialSet::PotentialSet() {
  w0 = w1 = q = W0 = W1 = Q = constant_coefficient(0.0);
}

PotentialSet PotentialSet::zero() { return PotentialSet(); }

PotentialSet PotentialSet::inverse_square(double epsilon) {
  PotentialSet ps;
  ps.epsilon = epsilon;
  ps.w0 = constant_coefficient(1.0);
  return ps;
}

const CoefficientPtr& PotentialSet::get(int index) const {
  switch (index) {
    case 0: return w0;
    case 1: return w1;
    case 2: return q;
    case 3: return W0;
    case 4: return W1;
    case 5: return Q;
  }
  throw std::out_of_range("PotentialSet: coefficient index out of range");
}

const char* PotentialSet::coefficient_name(int index) {
  static const char* names[] = {"w0", "w1", "q", "W0", "W1", "Q"};
  if (index < 0 || index > 5) {
    throw std::out_of_range("PotentialSet: coefficient index out of range");
  }
  return names[index];
}

CoefficientValues PotentialSet::values(double u, double v, double r) const {
  const Vars x = make_vars(u, v, r);
  CoefficientValues c;
  c.w0 = w0->value(x);
  c.w1 = w1->value(x);
  c.q = q->value(x);
  c.W0 = W0->value(x);
  c.W1 = W1->value(x);
  c.Q = Q->value(x);
  return c;
}

namespace {

double total(const Coefficient& f, const Vars& x, double dr, bool along_v) {
  double d = f.partial(along_v ? Var::v : Var::u, x);
  d += f.partial(Var::r, x) * dr;
  d += f.partial(Var::t, x);
  return d;
}

CoefficientValues totals(const PotentialSet& ps, double u, double v,
                         const GeometrySample& g, bool along_v) {
  const Vars x = make_vars(u, v, g.r);
  const double dr = along_v ? g.dr_dv : g.dr_du;
  CoefficientValues c;
  c.w0 = total(*ps.w0, x, dr, along_v);
  c.w1 = total(*ps.w1, x, dr, along_v);
  c.q = total(*ps.q, x, dr, along_v);
  c.W0 = total(*ps.W0, x, dr, along_v);
  c.W1 = total(*ps.W1, x, dr, along_v);
  c.Q = total(*ps.Q, x, dr, along_v);
  return c;
}

}  // namespace

CoefficientValues PotentialSet::d_dv(double u, double v,
                                     const GeometrySample& g) const {
  return totals(*this, u, v, g, true);
}

CoefficientValues PotentialSet::d_du(double u, double v,
                                     const GeometrySample& g) const {
  return totals(*this, u, v, g, false);
}

bool PotentialSet::depends_only_on_r() const {
  for (int k = 0; k < 6; ++k) {
    const auto& c = get(k);
    if (c->depends_on(Var::u) || c->depends_on(Var::v) ||
        c->depends_on(Var::t)) {
      return false;
    }
  }
  return true;
}

bool PotentialSet::all_zero() const {
  for (int k = 0; k < 6; ++k) {
    if (!get(k)->is_zero()) return false;
  }
  return true;
}

TildeCoefficients tilde_transform(const PotentialSet& ps,
                                  const GeometrySample& g, double u,
                                  double v) {
  const CoefficientValues c = ps.values(u, v, g.r);
  const double a = 0.25 * g.omega2;
  TildeCoefficients t;
  t.w_check0 = -a * c.w0 + a * g.dr_du / g.r * c.w1 + a * g.dr_dv * c.q;
  t.w_check1 = -a * c.w1;
  t.q_check = -a * c.q;
  t.W_check0 = -a * c.W0 + a * g.dr_du / g.r * c.W1 + a * g.dr_dv * c.Q +
               g.r * g.d2r_dudv;
  t.W_check1 = -a * c.W1;
  t.Q_check = -a * c.Q;
  t.s0 = ps.epsilon * t.w_check0 + t.W_check0;
  t.s1 = ps.epsilon * t.w_check1 + t.W_check1;
  t.sq = ps.epsilon * t.q_check + t.Q_check;
  if (ps.epsilon != 0.0) {
    t.wtilde0 = t.w_check0 + t.W_check0 / ps.epsilon;
    t.wtilde1 = t.w_check1 + t.W_check1 / ps.epsilon;
    t.qtilde = t.q_check + t.Q_check / ps.epsilon;
  }
  return t;
}

TildeCoefficients tilde_transform(const PotentialSet& ps, const Background& bg,
                                  double u, double v) {
  return tilde_transform(ps, bg.sample(u, v), u, v);
}

namespace {

struct ClauseSpec {
  const char* name;
  bool heuristic;
};

template <std::size_t N, class F>
AssumptionReport run_clauses(const char* report_name,
                             const ClauseSpec (&specs)[N],
                             const Background& bg, const SampleRegion& region,
                             double ceiling, double growth_limit, F&& eval) {
  AssumptionReport report;
  report.name = report_name;
  report.ceiling = ceiling;
  report.growth_limit = growth_limit;

  const auto pts = region.points();
  std::vector<GeometrySample> geo;
  geo.reserve(pts.size());
  double r_max = 0.0;
  for (const auto& p : pts) {
    geo.push_back(bg.sample(p.u, p.v));
    if (std::isfinite(geo.back().r)) r_max = std::max(r_max, geo.back().r);
  }
  std::vector<BandedSup> sups(N, BandedSup(r_max));
  std::vector<bool> finite(N, true);
  double vals[N];
  for (std::size_t k = 0; k < pts.size(); ++k) {
    eval(pts[k].u, pts[k].v, geo[k], vals);
    for (std::size_t c = 0; c < N; ++c) {
      if (!std::isfinite(vals[c])) {
        if (report.failure.empty()) {
          std::ostringstream os;
          os << "non-finite " << specs[c].name << " at (u, v) = (" << pts[k].u
             << ", " << pts[k].v << ")";
          report.failure = os.str();
        }
        finite[c] = false;
        continue;
      }
      sups[c].add(vals[c], geo[k].r, pts[k].u, pts[k].v);
    }
  }
  for (std::size_t c = 0; c < N; ++c) {
    report.clauses.push_back(make_clause(specs[c].name, sups[c],
                                         specs[c].heuristic, finite[c],
                                         ceiling, growth_limit));
    report.pass = report.pass && report.clauses.back().pass;
  }
  return report;
}

}  // namespace

AssumptionReport verify_h1(const PotentialSet& ps, const Background& bg,
                           const SampleRegion& region, double ceiling,
                           double growth_limit) {
  static const ClauseSpec specs[] = {
      {"|w0|", false},        {"|w1|", false},        {"|q|", false},
      {"r|dv_w0|", false},    {"r^2|dv_q|", false},   {"|W0|", true},
      {"|W1|", true},         {"|Q|", true},          {"r|dv_W0|", true},
      {"r^2|dv_W1|", true},   {"r^2|dv_Q|", true}};
  return run_clauses(
      "H1", specs, bg, region, ceiling, growth_limit,
      [&](double u, double v, const GeometrySample& g, double* out) {
        const CoefficientValues c = ps.values(u, v, g.r);
        const CoefficientValues d = ps.d_dv(u, v, g);
        const double r = g.r;
        out[0] = c.w0;
        out[1] = c.w1;
        out[2] = c.q;
        out[3] = r * d.w0;
        out[4] = r * r * d.q;
        out[5] = c.W0;
        out[6] = c.W1;
        out[7] = c.Q;
        out[8] = r * d.W0;
        out[9] = r * r * d.W1;
        out[10] = r * r * d.Q;
      });
}

AssumptionReport verify_h3(const PotentialSet& ps, const Background& bg,
                           const SampleRegion& region, double ceiling,
                           double growth_limit) {
  static const ClauseSpec specs[] = {
      {"r|du_w0|", false}, {"r|du_w1|", false}, {"r|du_q|", false},
      {"r|du_W0|", true},  {"r|du_W1|", true},  {"r|du_Q|", true}};
  return run_clauses(
      "H3", specs, bg, region, ceiling, growth_limit,
      [&](double u, double v, const GeometrySample& g, double* out) {
        const CoefficientValues d = ps.d_du(u, v, g);
        const double r = g.r;
        out[0] = r * d.w0;
        out[1] = r * d.w1;
        out[2] = r * d.q;
        out[3] = r * d.W0;
        out[4] = r * d.W1;
        out[5] = r * d.Q;
      });
}

}  // namespace nullwave
