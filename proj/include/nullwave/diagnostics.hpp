#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nullwave/evolve.hpp"
#include "nullwave/potential.hpp"

namespace nullwave {

struct DiagnosticsSpec {
  std::vector<double> p_values{0.5, 1.0, 1.5, 2.0, 2.5};
  /// Records (and region-integral rows) every sample_du in u.
  double sample_du = 1.0;
  /// Second radius for the 1/r extrapolation of the radiation field, as a
  /// fraction of the distance from v_R(u) to vmax.
  double extrapolation_fraction = 0.5;
  double hardy_q = 1.5;
  double iled_sigma = 1.5;
  std::vector<double> gammas{0.1, 0.4};
};

/// Diagnostics at one retarded time u. Energies of the V foliation: the
/// outgoing cone from v_R(u) to vmax and the ingoing segment from r = R at
/// v = v_R(u) to the centre (or the end of the grid).
struct EnergyRecord {
  double u = 0.0;
  int row = 0;
  double E = 0.0;
  double E_out = 0.0;
  double E_in = 0.0;
  double E_tail = 0.0;
  std::vector<double> Ep, Ep_tail, Ep_tilde;
  std::vector<double> Ep_Psi1, Ep_Psi1_tail;
  std::vector<double> Ep_Theta0, Ep_Theta0_tail;
  std::vector<double> Ep_T;  // E_p of T psi - (T r) psi / r
  double E_T = 0.0;  // foliation energy of T phi, T = d_u + d_v
  double E_T_tail = 0.0;
  double phi_R = 0.0;       // phi(u, v_R(u))
  double psi_vmax = 0.0;    // psi(u, vmax)
  double psi_extrap = 0.0;  // two-radius extrapolation in 1/r
  /// sup over the outgoing cone of r^(1/2 + gamma) |phi| and E_{2 gamma},
  /// one entry per DiagnosticsSpec::gammas.
  std::vector<double> weighted_phi_sup, E_2gamma;
};

/// Row integrals over the outgoing cone (and, for ILED, the whole row),
/// integrated in u by the region checks.
struct RegionRow {
  double u = 0.0;
  int row = 0;
  // Outgoing Hardy inequality, exponent q.
  double h5_f = 0.0;        // int r^(q-3) psi^2 dv
  double h5_dv = 0.0;       // int r^(q-1) |d_v psi|^2 dv
  double h5_boundary = 0.0; // r_R^(q-2) psi^2 at v_R(u)
  double h5_premise = 0.0;  // r^(q-2) psi^2 at vmax
  // Ingoing Hardy inequality.
  double hin_lhs = 0.0;     // int r^(q-3) |d_u psi|^2 dv
  double hin_dv = 0.0;      // int r^(q-3) |d_v psi|^2 dv
  double hin_ang = 0.0;     // int r^(q-5) l(l+1) psi^2 dv
  double hin_cone = 0.0;    // int r^(q-4) l(l+1) psi^2 dv
  double hin_boundary = 0.0;
  double eps_eff = 0.0;     // sup of |s0|, |s1|, |sq| on the cone
  // Integrated local energy density over the whole row.
  double iled = 0.0;
  /// The same over v >= v_R(u_k), one entry per sample row k up to this one.
  std::vector<double> iled_from;
};

struct EnergySeries {
  int ell = 0;
  std::vector<double> p_values;
  std::vector<double> gammas;
  std::vector<EnergyRecord> records;
  std::vector<RegionRow> rows;
  double hardy_q = 1.5;
  double iled_sigma = 1.5;
  double u0 = 0.0;
};

/// Streaming recorder: consumes rows from the evolver, keeping a three-row
/// window and narrow column strips for the ingoing segments.
class DiagnosticsRecorder final : public RowSink {
 public:
  DiagnosticsRecorder(const GridGeometry& geo, const NullGrid& grid,
                      const PotentialSet& ps, int ell, DiagnosticsSpec spec);
  ~DiagnosticsRecorder() override;

  void row(int i, const double* psi) override;
  void finish() override;

  const EnergySeries& series() const { return series_; }
  EnergySeries take_series() { return std::move(series_); }

 private:
  struct Impl;
  Impl* impl_;
  EnergySeries series_;
};

/// Runs the recorder over a stored field; identical to streaming.
EnergySeries analyze_field(const ModeField& field, const GridGeometry& geo,
                           const PotentialSet& ps, const DiagnosticsSpec& spec);

enum class EnergyTarget { psi, Psi1, Theta0, Tpsi };

/// E(u) on the V foliation. tail (optional) receives the truncation estimate.
double foliation_energy(const ModeField& field, const GridGeometry& geo,
                        double u, double* tail = nullptr);

/// E_p[target](u) = int_{C_u} r^p |d_v target|^2 dv, 0 <= p <= 3.5.
double weighted_energy(const ModeField& field, const GridGeometry& geo,
                       double u, double p, EnergyTarget target,
                       double* tail = nullptr);

struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant_used = 1.0;
  double margin = 0.0;  // rhs * constant - lhs
  double ratio = 0.0;   // lhs / rhs
  bool pass = false;
  bool inconclusive = false;
  std::string note;
  std::map<std::string, double> details;
};

/// Outgoing Hardy inequality on D_R(u1, u2):
///   int r^(q-3) f^2 <= C1 (2-q)^-2 int r^(q-1) |d_v f|^2
///                      + C2 r_R^(q-2) (2-q)^-1 int f^2(u, v_R(u)) du.
/// The report's rhs includes C1 and C2; constant_used is 1.
InequalityReport hardy_check_outgoing(const EnergySeries& series, double u1,
                                      double u2, double C1 = 4.0,
                                      double C2 = 2.0);

/// Same inequality for a function given in closed form on Minkowski.
/// Integrals by composite trapezoid on an n_u x n_v lattice of D_R(u1, u2)
/// truncated at v = vmax.
InequalityReport hardy_check_outgoing(
    const std::function<double(double, double)>& f,
    const std::function<double(double, double)>& df_dv, double q, double R,
    double u1, double u2, double vmax, int n_u = 201, int n_v = 20001,
    double C1 = 4.0, double C2 = 2.0);

/// Ingoing Hardy-type inequality for solutions:
///   int r^(q-3) |d_u psi|^2 <= C [ eps^2 (2-q)^-1 int (r^(q-3) |d_v psi|^2
///        + r^(q-5) l(l+1) psi^2) + (2-q)^-1 ( int_{C_u1} r^(q-4) l(l+1) psi^2
///        + int r_R^(q-4) (r_R^2 |d_u psi|^2 + psi^2 + l(l+1) psi^2) du ) ]
/// with eps the supremum of |s0|, |s1|, |sq| over the region.
InequalityReport hardy_check_ingoing(const EnergySeries& series, double u1,
                                     double u2, double constant = 4.0,
                                     bool is_solution = true);

/// Ratio of the bulk integral over the future of the foliation leaf at u1,
/// {u >= u1, v >= v_R(u1)}, to E(u1) for u1 swept over the first half of the
/// records; pass if the largest ratio is below constant.
InequalityReport iled_check(const EnergySeries& series, double constant = 100.0);

/// sup over u1 < u2 of E(u2) / E(u1).
InequalityReport energy_boundedness_check(const std::vector<double>& u,
                                          const std::vector<double>& E,
                                          double ceiling = 10.0);
InequalityReport energy_boundedness_check(const EnergySeries& series,
                                          double ceiling = 10.0);

/// sup over u1 < u2 (u1 > 0) of E_T(u2) / (E_T(u1) + u1^-2 E(u1)).
InequalityReport boundedness_T_check(const EnergySeries& series,
                                     double ceiling = 10.0);

/// sup over samples of r^(1/2+gamma) |phi| / (E_{2 gamma} + E)^(1/2).
InequalityReport pointwise_from_energy_check(const EnergySeries& series,
                                             double gamma,
                                             double constant = 10.0);

enum class Identity { rp1, rp2 };

struct IdentityResidual {
  std::string which;
  double residual = 0.0;
  double relative = 0.0;
  double largest_term = 0.0;
  std::vector<std::pair<std::string, double>> terms;
};

/// Integrates every term of the r^p multiplier identity for psi (rp1) or for
/// Psi_1 = Omega^-2 r^2 d_v psi (rp2) over the cells of D_R(u1, u2) by the
/// midpoint rule, with cell values from centred node differences.
IdentityResidual multiplier_identity_residual(const ModeField& field,
                                              const GridGeometry& geo,
                                              const PotentialSet& ps,
                                              double u1, double u2, double p,
                                              Identity which);

/// int_{u1}^{u2} du / (a sqrt(u) + b) in closed form.
double gronwall_integral(double a, double b, double u1, double u2);

}  // namespace nullwave
