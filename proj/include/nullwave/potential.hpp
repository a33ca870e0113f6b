#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "nullwave/background.hpp"
#include "nullwave/expression.hpp"

namespace nullwave {

/// One coefficient function of (u, v, r, t). Partial derivatives treat the
/// four arguments as independent; PotentialSet turns them into null
/// derivatives along the background.
class Coefficient {
 public:
  virtual ~Coefficient() = default;
  virtual double value(const Vars& x) const = 0;
  virtual double partial(Var which, const Vars& x) const = 0;
  virtual bool depends_on(Var which) const = 0;
  virtual std::string describe() const = 0;
  /// True for the constant 0, which lets the evolver skip the term.
  virtual bool is_zero() const { return false; }
};

using CoefficientPtr = std::shared_ptr<const Coefficient>;

CoefficientPtr constant_coefficient(double c);

/// Parsed expression; constant expressions fold to constant_coefficient.
/// Partials by central differences, step max(1e-6, 1e-8 |x|).
CoefficientPtr expression_coefficient(const Expression& e);
CoefficientPtr expression_coefficient(const std::string& text);

/// Coefficient with hand-written partial derivatives.
CoefficientPtr analytic_coefficient(
    std::string name, std::function<double(const Vars&)> value,
    std::function<double(Var, const Vars&)> partial, unsigned depends_mask);

namespace builtin {
/// sin(u + log r): bounded, oscillating linearly in u.
CoefficientPtr oscillating();
/// sin(log u + log r), for u > 0.
CoefficientPtr log_oscillating();
/// r^a.
CoefficientPtr power_r(double a);
/// (1 + r)^(-a) * cos(log r).
CoefficientPtr decaying(double a);
}  // namespace builtin

/// Values of the six coefficients at a point.
struct CoefficientValues {
  double w0 = 0.0, w1 = 0.0, q = 0.0;
  double W0 = 0.0, W1 = 0.0, Q = 0.0;
};

/// epsilon and the six coefficients w0, w1, q (scaled by epsilon) and
/// W0, W1, Q of the equation
///   Box_g phi = r^-2 [ (eps w0 + W0) phi + (eps w1 + W1) d_u phi
///                      + (eps q + Q) r d_v phi ].
struct PotentialSet {
  double epsilon = 0.0;
  CoefficientPtr w0, w1, q, W0, W1, Q;

  PotentialSet();
  static PotentialSet zero();
  /// epsilon with w0 = 1: the inverse-square potential.
  static PotentialSet inverse_square(double epsilon);

  const CoefficientPtr& get(int index) const;  // 0..5 in the order above
  static const char* coefficient_name(int index);

  CoefficientValues values(double u, double v, double r) const;
  /// Total derivatives along the background: d/dv f(u, v, r(u, v), u + v).
  CoefficientValues d_dv(double u, double v, const GeometrySample& g) const;
  CoefficientValues d_du(double u, double v, const GeometrySample& g) const;

  /// True when no coefficient depends on u, v or t (only on r).
  bool depends_only_on_r() const;
  bool all_zero() const;
};

/// Radiation-field form of the equation: with psi = r phi,
///   d_u d_v psi = -(Omega^2/4) l(l+1) psi / r^2
///                 + r^-2 (s0 psi + s1 d_u psi + sq r d_v psi).
struct TildeCoefficients {
  double w_check0 = 0.0, w_check1 = 0.0, q_check = 0.0;
  double W_check0 = 0.0, W_check1 = 0.0, Q_check = 0.0;
  double s0 = 0.0, s1 = 0.0, sq = 0.0;
  /// s / epsilon; empty when epsilon = 0.
  std::optional<double> wtilde0, wtilde1, qtilde;
};

/// The coefficients of psi in the transformed equation are
///   w_check0 = -(Omega^2/4) w0 + (d_u r) Omega^2/(4 r) w1 + (d_v r) Omega^2/4 q
///   W_check0 = same with W0, W1, Q, plus r d_u d_v r,
/// and w_check1 = -(Omega^2/4) w1, q_check = -(Omega^2/4) q, likewise for
/// the capitals. The 1/r on the w1 term comes from rewriting
/// d_u phi = (d_u psi - (d_u r) psi / r) / r.
TildeCoefficients tilde_transform(const PotentialSet& ps,
                                  const GeometrySample& g, double u, double v);
TildeCoefficients tilde_transform(const PotentialSet& ps, const Background& bg,
                                  double u, double v);

/// Bounded clauses |w_i|, |q|, r|d_v w0|, r^2|d_v q| and heuristic o(1)
/// clauses |W_i|, |Q|, r|d_v W0|, r^2|d_v W1|, r^2|d_v Q|.
AssumptionReport verify_h1(const PotentialSet& ps, const Background& bg,
                           const SampleRegion& region, double ceiling = 100.0,
                           double growth_limit = 1.25);

/// Bounded clauses r|d_u w_i|, r|d_u q| and heuristic o(1) clauses
/// r|d_u W_i|, r|d_u Q|.
AssumptionReport verify_h3(const PotentialSet& ps, const Background& bg,
                           const SampleRegion& region, double ceiling = 100.0,
                           double growth_limit = 1.25);

}  // namespace nullwave
