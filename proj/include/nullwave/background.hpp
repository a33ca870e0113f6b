#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nullwave {

/// Geometry of g = -Omega^2 du dv + r^2 dsigma at one point, with the null
/// derivatives used by the radiation-field equation and the multiplier
/// identities.
struct GeometrySample {
  double r = 0.0;
  double omega2 = 0.0;
  double dr_du = 0.0;
  double dr_dv = 0.0;
  double d2r_dudv = 0.0;
  double d2r_dvdv = 0.0;
  double d3r_dudvdv = 0.0;
  double domega2_du = 0.0;
  double domega2_dv = 0.0;
  double d2omega2_dudv = 0.0;
};

/// A spherically symmetric background in double-null gauge.
///
/// Convention: t = u + v and rho = v - u. Backgrounds are immutable after
/// construction and safe to share between threads.
class Background {
 public:
  virtual ~Background() = default;

  virtual std::string name() const = 0;
  virtual GeometrySample sample(double u, double v) const = 0;

  /// rho = v - u of the regular centre r = 0, if the spacetime has one.
  virtual std::optional<double> center_rho() const { return std::nullopt; }

  /// True if the geometry depends on (u, v) only through rho = v - u.
  virtual bool is_static() const { return false; }

  double r(double u, double v) const { return sample(u, v).r; }
  double omega2(double u, double v) const { return sample(u, v).omega2; }
  double dr_du(double u, double v) const { return sample(u, v).dr_du; }
  double dr_dv(double u, double v) const { return sample(u, v).dr_dv; }
  double d2r_dudv(double u, double v) const { return sample(u, v).d2r_dudv; }
  double d2r_dvdv(double u, double v) const { return sample(u, v).d2r_dvdv; }
  double d3r_dudvdv(double u, double v) const {
    return sample(u, v).d3r_dudvdv;
  }
  double domega2_dv(double u, double v) const {
    return sample(u, v).domega2_dv;
  }
};

using BackgroundPtr = std::shared_ptr<const Background>;

/// Flat space with r = v - u and Omega^2 = 4.
class Minkowski final : public Background {
 public:
  std::string name() const override { return "minkowski"; }
  GeometrySample sample(double u, double v) const override;
  std::optional<double> center_rho() const override { return 0.0; }
  bool is_static() const override { return true; }
};

/// Reissner-Nordstrom exterior, D(r) = 1 - 2M/r + e^2/r^2, Omega^2 = 4 D,
/// r(u, v) obtained by inverting r*(r) = v - u with r*(3M) = 3M.
class ReissnerNordstrom final : public Background {
 public:
  /// Throws std::invalid_argument unless M >= 0 and |e| <= M.
  ReissnerNordstrom(double mass, double charge);

  std::string name() const override { return "rn"; }
  GeometrySample sample(double u, double v) const override;
  std::optional<double> center_rho() const override;
  bool is_static() const override { return true; }

  double mass() const { return mass_; }
  double charge() const { return charge_; }
  double r_plus() const { return r_plus_; }
  double r_minus() const { return r_minus_; }

  double lapse(double r) const;        // D(r)
  double lapse_d1(double r) const;     // D'(r)
  double lapse_d2(double r) const;     // D''(r)

  /// Closed-form tortoise coordinate. Throws std::domain_error for r <= r+.
  double tortoise(double r) const;
  /// Inverse of tortoise(): safeguarded Newton in log(r - r+).
  double radius(double rstar) const;

  GeometrySample sample_at_radius(double r) const;

 private:
  double tortoise_unshifted(double r) const;

  double mass_;
  double charge_;
  double r_plus_;
  double r_minus_;
  bool extremal_;
  double offset_ = 0.0;
};

/// Background defined by an arbitrary sampler. Used for injected test
/// geometries (for instance a perturbed Omega^2 that violates the
/// asymptotic-flatness bounds).
class SampledBackground final : public Background {
 public:
  SampledBackground(std::string name,
                    std::function<GeometrySample(double, double)> sampler,
                    std::optional<double> center = std::nullopt)
      : name_(std::move(name)), sampler_(std::move(sampler)), center_(center) {}

  std::string name() const override { return name_; }
  GeometrySample sample(double u, double v) const override {
    return sampler_(u, v);
  }
  std::optional<double> center_rho() const override { return center_; }

 private:
  std::string name_;
  std::function<GeometrySample(double, double)> sampler_;
  std::optional<double> center_;
};

BackgroundPtr make_minkowski();
BackgroundPtr make_reissner_nordstrom(double mass, double charge);

/// Lattice of sample points in the exterior region. u is uniform on
/// [u_lo, u_hi]; rho = v - u is geometric on [rho_lo, rho_hi] so that the
/// dyadic r-bands used by the growth test are covered evenly.
struct SampleRegion {
  double u_lo = 1.0;
  double u_hi = 10.0;
  int n_u = 8;
  double rho_lo = 20.0;
  double rho_hi = 2000.0;
  int n_rho = 200;

  struct Point {
    double u;
    double v;
  };
  std::vector<Point> points() const;
};

/// sup over the sampled region of one weighted quantity.
struct BoundClause {
  std::string name;
  /// "bounded" clauses need a finite supremum; "o(1)" clauses must also be
  /// small far out, which samples cannot decide, so they are heuristic.
  bool heuristic = false;
  double sup = 0.0;
  double outer = 0.0;
  double at_u = 0.0;
  double at_v = 0.0;
  /// Ratio of the supremum over the outermost dyadic r-band to the one
  /// below it; values well above 1 flag a bound that diverges as r grows.
  double growth = 0.0;
  bool finite = true;
  bool pass = true;
};

struct AssumptionReport {
  std::string name;
  std::vector<BoundClause> clauses;
  double ceiling = 100.0;
  double growth_limit = 1.25;
  bool pass = true;
  std::string failure;  // offending point for non-finite samples

  const BoundClause& clause(const std::string& name) const;
};

using H0Report = AssumptionReport;

/// Band bookkeeping shared by the assumption checkers: sup over the whole
/// region and over the two outermost dyadic r-bands.
class BandedSup {
 public:
  explicit BandedSup(double r_max) : r_max_(r_max) {}
  void add(double value, double r, double u, double v);
  double sup() const { return sup_; }
  double outer() const { return outer_; }
  double inner() const { return inner_; }
  double growth() const;
  double at_u() const { return at_u_; }
  double at_v() const { return at_v_; }

 private:
  double r_max_;
  double sup_ = 0.0;
  double outer_ = 0.0;
  double inner_ = 0.0;
  double at_u_ = 0.0;
  double at_v_ = 0.0;
  bool empty_ = true;
};

/// Growth is only held against a clause once its outer-band value is a
/// visible fraction of the ceiling; a bounded quantity may still increase
/// across two bands of a finite sample.
inline constexpr double kGrowthFloor = 0.1;

BoundClause make_clause(const std::string& name, const BandedSup& sup,
                        bool heuristic, bool finite, double ceiling,
                        double growth_limit);

/// Checks the asymptotic-flatness bounds on the sampled region:
/// r|1 - d_v r|, r|1 + d_u r|, r|Omega^2 - 4|, r^2|d_v Omega^2| and
/// r^2 |d_vv r|, r^2 |d_uv r|, r^2 |d_uvv r|.
AssumptionReport verify_h0(const Background& bg, const SampleRegion& region,
                           double ceiling = 100.0, double growth_limit = 1.25);

}  // namespace nullwave
