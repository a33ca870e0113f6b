#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nullwave/background.hpp"
#include "nullwave/potential.hpp"

namespace nullwave {

/// Uniform null grid u_i = u0 + i h (i = 0..nu), v_j = v0 + j h (j = 0..nv),
/// with interface radius R and v_R(u) = u + R.
struct NullGrid {
  double u0 = 1.0;
  double uF = 401.0;
  double v0 = 11.0;
  double vmax = 2001.0;
  double h = 0.05;
  double R = 10.0;

  int nu() const;
  int nv() const;
  double u(int i) const { return u0 + i * h; }
  double v(int j) const { return v0 + j * h; }
  /// Column offset k with v_R(u_i) = v_{i + k}.
  int r_offset() const;
  int jR(int i) const { return i + r_offset(); }
  int row_of(double u) const;  // nearest row; throws if off-lattice
  int column_of(double v) const;

  /// Throws std::invalid_argument unless the bounds are integer multiples of
  /// h, R is on-lattice and at least 4h, and v_R(uF) <= vmax.
  void validate() const;
  NullGrid refined(int factor) const;
};

/// Characteristic data: psi on the outgoing cone u = u0 and on the ingoing
/// cone v = v0.
struct InitialData {
  enum class Family { gaussian, compact, zero };

  Family family = Family::compact;
  double amplitude = 1.0;
  double center = 15.0;
  double width = 2.0;
  /// Overrides for tests; when set they replace the family profile.
  std::function<double(double)> outgoing_override;
  std::function<double(double)> ingoing;  // psi(u, v0); default 0

  double outgoing(double v) const;
  double ingoing_at(double u) const { return ingoing ? ingoing(u) : 0.0; }

  static Family parse_family(const std::string& name);
  static std::string family_name(Family f);
};

/// psi_l = r phi_l for one spherical-harmonic index on a full grid.
/// Nodes with v - u below a regular centre are stored as 0 and reported
/// invalid; nodes on the centre line hold psi = 0.
class ModeField {
 public:
  ModeField() = default;
  ModeField(const NullGrid& grid, int ell, std::optional<int> centre_diag);

  const NullGrid& grid() const { return grid_; }
  int ell() const { return ell_; }
  int nu() const { return nu_; }
  int nv() const { return nv_; }
  std::optional<int> centre_diagonal() const { return centre_diag_; }

  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double& at(int i, int j) { return data_[index(i, j)]; }
  const double* row(int i) const { return data_.data() + index(i, 0); }
  double* row(int i) { return data_.data() + index(i, 0); }

  int jmin(int i) const;
  bool valid(int i, int j) const;
  bool is_centre(int i, int j) const;
  /// Last row at which column j is valid.
  int last_row(int j) const;

  /// Centred differences, second-order one-sided at the grid edges.
  double dpsi_du(int i, int j) const;
  double dpsi_dv(int i, int j) const;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * (nv_ + 1) + j;
  }

  NullGrid grid_;
  int ell_ = 0;
  int nu_ = 0;
  int nv_ = 0;
  std::optional<int> centre_diag_;
  std::vector<double> data_;
};

/// Geometry at grid nodes. The cell with north corner (i, j) has its centre
/// on the same diagonal j - i as that node, so static backgrounds need one
/// sample per diagonal.
class GridGeometry {
 public:
  GridGeometry(BackgroundPtr bg, const NullGrid& grid);

  GeometrySample node(int i, int j) const;
  GeometrySample cell(int i, int j) const;  // centre of cell with north (i, j)
  bool is_static() const { return static_; }
  std::optional<int> centre_diagonal() const { return centre_diag_; }
  const Background& background() const { return *bg_; }

 private:
  BackgroundPtr bg_;
  NullGrid grid_;
  bool static_ = false;
  std::optional<int> centre_diag_;
  int diag_lo_ = 0;
  std::vector<GeometrySample> table_;
};

/// Diagonal index j - i of the regular centre on this grid, if the
/// background has a centre that the grid reaches.
std::optional<int> centre_diagonal(const Background& bg, const NullGrid& grid);

class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, int i, int j)
      : std::runtime_error(what), i_(i), j_(j) {}
  int row() const { return i_; }
  int column() const { return j_; }

 private:
  int i_;
  int j_;
};

/// Receives completed rows in order i = 0..nu. row points at nv + 1 values.
class RowSink {
 public:
  virtual ~RowSink() = default;
  virtual void row(int i, const double* psi) = 0;
  virtual void finish() {}
};

/// Diamond-scheme evolution of
///   d_u d_v psi = -(Omega^2/4) l(l+1) psi / r^2
///                 + r^-2 (s0 psi + s1 d_u psi + sq r d_v psi).
/// Each cell takes a predictor with one-sided derivatives and one corrector
/// with centred values; coefficients are sampled at the cell centre.
class Evolver {
 public:
  Evolver(BackgroundPtr bg, PotentialSet ps, NullGrid grid, InitialData data,
          int ell);

  void run(RowSink& sink);
  ModeField run_full();

  const NullGrid& grid() const { return grid_; }
  const GridGeometry& geometry() const { return geo_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::optional<int> centre_diagonal() const { return centre_diag_; }

 private:
  struct CellCoeffs {
    double a = 0.0;  // psi
    double b = 0.0;  // d_u psi
    double c = 0.0;  // d_v psi
  };
  CellCoeffs coefficients(int i, int j) const;
  void prepare_tables();
  static double diamond(double S, double E, double W, const CellCoeffs& k,
                        double h, double h2);

  BackgroundPtr bg_;
  PotentialSet ps_;
  NullGrid grid_;
  InitialData data_;
  int ell_;
  GridGeometry geo_;
  std::optional<int> centre_diag_;
  bool cached_ = false;     // coefficients depend on j - i only
  bool trivial_ = false;    // all coefficients vanish
  int diag_lo_ = 0;
  std::vector<CellCoeffs> table_;
  std::vector<std::string> warnings_;
};

ModeField evolve_mode(BackgroundPtr bg, const PotentialSet& ps,
                      const NullGrid& grid, const InitialData& data, int ell);

struct ConvergenceProbe {
  double u = 0.0;
  double v = 0.0;
  double values[3] = {0.0, 0.0, 0.0};
  double order = 0.0;
  bool inconclusive = false;
};

struct ConvergenceReport {
  std::vector<double> h;             // h, h/2, h/4
  std::vector<ConvergenceProbe> probes;
  double error_coarse = 0.0;         // max |psi_h - psi_{h/2}| on the coarse lattice
  double error_fine = 0.0;           // max |psi_{h/2} - psi_{h/4}|
  double order = 0.0;                // log2(error_coarse / error_fine)
  bool inconclusive = false;
  std::string note;
};

/// Richardson three-level estimate on the common coarse lattice. Probes
/// default to four interior nodes when none are given.
ConvergenceReport convergence_order(
    BackgroundPtr bg, const PotentialSet& ps, const NullGrid& grid,
    const InitialData& data, int ell,
    std::vector<std::pair<double, double>> probes = {});

/// Raw dump: path holds (nu+1)(nv+1) little-endian doubles, row-major in u;
/// path + ".hdr" is a text header with dimensions, bounds and h.
void write_field_dump(const ModeField& field, const std::string& path);

}  // namespace nullwave
