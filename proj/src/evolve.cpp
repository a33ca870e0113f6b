#include "nullwave/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nullwave {

namespace {

int lattice_steps(double span, double h, const char* what) {
  const double n = span / h;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, std::abs(n))) {
    throw std::invalid_argument(std::string("grid: ") + what +
                                " is not an integer multiple of h");
  }
  return static_cast<int>(rounded);
}

}  // namespace

int NullGrid::nu() const { return lattice_steps(uF - u0, h, "uF - u0"); }
int NullGrid::nv() const { return lattice_steps(vmax - v0, h, "vmax - v0"); }

int NullGrid::r_offset() const {
  return lattice_steps(u0 + R - v0, h, "u0 + R - v0");
}

int NullGrid::row_of(double u) const {
  return lattice_steps(u - u0, h, "requested u");
}

int NullGrid::column_of(double v) const {
  return lattice_steps(v - v0, h, "requested v");
}

void NullGrid::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("grid: h must be positive");
  }
  if (!(uF > u0)) throw std::invalid_argument("grid: need uF > u0");
  if (!(vmax > v0)) throw std::invalid_argument("grid: need vmax > v0");
  const int n_u = nu();
  const int n_v = nv();
  if (n_u < 2 || n_v < 2) {
    throw std::invalid_argument("grid: need at least two cells per direction");
  }
  if (!(R >= 4.0 * h)) {
    throw std::invalid_argument("grid: R must be at least 4 h");
  }
  const int k = r_offset();
  if (k < 0) {
    throw std::invalid_argument(
        "grid: v0 must not exceed u0 + R (v_R(u0) must be on the grid)");
  }
  if (n_u + k > n_v) {
    throw std::invalid_argument("grid: v_R(uF) = uF + R exceeds vmax");
  }
}

NullGrid NullGrid::refined(int factor) const {
  NullGrid g = *this;
  g.h = h / factor;
  return g;
}

double InitialData::outgoing(double v) const {
  if (outgoing_override) return outgoing_override(v);
  switch (family) {
    case Family::zero:
      return 0.0;
    case Family::gaussian: {
      const double x = (v - center) / width;
      return amplitude * std::exp(-x * x);
    }
    case Family::compact: {
      const double x = (v - center) / width;
      if (std::abs(x) >= 1.0) return 0.0;
      const double y = 1.0 - x * x;
      const double y2 = y * y;
      const double y4 = y2 * y2;
      return amplitude * y4 * y4;
    }
  }
  return 0.0;
}

InitialData::Family InitialData::parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "compact" || name == "compact-polynomial") return Family::compact;
  if (name == "zero") return Family::zero;
  throw std::invalid_argument("unknown data family '" + name +
                              "' (expected gaussian, compact or zero)");
}

std::string InitialData::family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::compact: return "compact";
    case Family::zero: return "zero";
  }
  return "zero";
}

std::optional<int> centre_diagonal(const Background& bg,
                                   const NullGrid& grid) {
  const auto c = bg.center_rho();
  if (!c) return std::nullopt;
  const double d = (*c - (grid.v0 - grid.u0)) / grid.h;
  if (d < -grid.nu()) return std::nullopt;  // centre never reached
  const double rounded = std::round(d);
  if (std::abs(d - rounded) > 1e-9 * std::max(1.0, std::abs(d))) {
    throw std::invalid_argument(
        "grid: the regular centre v - u = " + std::to_string(*c) +
        " must fall on grid diagonals (v0 - u0 must be a multiple of h)");
  }
  if (rounded > 0) {
    throw std::invalid_argument(
        "grid: the initial outgoing cone starts inside the centre");
  }
  return static_cast<int>(rounded);
}

ModeField::ModeField(const NullGrid& grid, int ell,
                     std::optional<int> centre_diag)
    : grid_(grid),
      ell_(ell),
      nu_(grid.nu()),
      nv_(grid.nv()),
      centre_diag_(centre_diag),
      data_(static_cast<std::size_t>(nu_ + 1) * (nv_ + 1), 0.0) {}

int ModeField::jmin(int i) const {
  return centre_diag_ ? std::max(0, i + *centre_diag_) : 0;
}

bool ModeField::valid(int i, int j) const {
  return i >= 0 && i <= nu_ && j <= nv_ && j >= jmin(i);
}

bool ModeField::is_centre(int i, int j) const {
  return centre_diag_ && j - i == *centre_diag_;
}

int ModeField::last_row(int j) const {
  return centre_diag_ ? std::min(nu_, j - *centre_diag_) : nu_;
}

double ModeField::dpsi_du(int i, int j) const {
  const double h = grid_.h;
  const auto& f = *this;
  if (valid(i - 1, j) && valid(i + 1, j)) {
    return (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
  }
  if (!valid(i - 1, j)) {
    return (-3.0 * f(i, j) + 4.0 * f(i + 1, j) - f(i + 2, j)) / (2.0 * h);
  }
  return (3.0 * f(i, j) - 4.0 * f(i - 1, j) + f(i - 2, j)) / (2.0 * h);
}

double ModeField::dpsi_dv(int i, int j) const {
  const double h = grid_.h;
  const auto& f = *this;
  if (valid(i, j - 1) && valid(i, j + 1)) {
    return (f(i, j + 1) - f(i, j - 1)) / (2.0 * h);
  }
  if (!valid(i, j - 1)) {
    return (-3.0 * f(i, j) + 4.0 * f(i, j + 1) - f(i, j + 2)) / (2.0 * h);
  }
  return (3.0 * f(i, j) - 4.0 * f(i, j - 1) + f(i, j - 2)) / (2.0 * h);
}

namespace {

GeometrySample centre_sample(const Background& bg, double u, double v) {
  try {
    GeometrySample g = bg.sample(u, v);
    g.r = 0.0;
    return g;
  } catch (const std::exception&) {
    GeometrySample g;
    g.omega2 = 4.0;
    g.dr_dv = 1.0;
    g.dr_du = -1.0;
    return g;
  }
}

}  // namespace

GridGeometry::GridGeometry(BackgroundPtr bg, const NullGrid& grid)
    : bg_(std::move(bg)), grid_(grid), static_(bg_->is_static()) {
  centre_diag_ = nullwave::centre_diagonal(*bg_, grid_);
  if (!static_) return;
  const int nu = grid_.nu();
  const int nv = grid_.nv();
  diag_lo_ = centre_diag_ ? std::max(-nu, *centre_diag_) : -nu;
  table_.resize(static_cast<std::size_t>(nv - diag_lo_ + 1));
  for (int d = diag_lo_; d <= nv; ++d) {
    // Node (0, d) when d >= 0, else (-d, 0); both sit on diagonal d.
    const double u = d >= 0 ? grid_.u(0) : grid_.u(-d);
    const double v = d >= 0 ? grid_.v(d) : grid_.v(0);
    table_[d - diag_lo_] = (centre_diag_ && d == *centre_diag_)
                               ? centre_sample(*bg_, u, v)
                               : bg_->sample(u, v);
  }
}

GeometrySample GridGeometry::node(int i, int j) const {
  if (static_) return table_[j - i - diag_lo_];
  if (centre_diag_ && j - i == *centre_diag_) {
    return centre_sample(*bg_, grid_.u(i), grid_.v(j));
  }
  return bg_->sample(grid_.u(i), grid_.v(j));
}

GeometrySample GridGeometry::cell(int i, int j) const {
  if (static_) return table_[j - i - diag_lo_];
  return bg_->sample(grid_.u(i) - 0.5 * grid_.h, grid_.v(j) - 0.5 * grid_.h);
}

Evolver::Evolver(BackgroundPtr bg, PotentialSet ps, NullGrid grid,
                 InitialData data, int ell)
    : bg_(std::move(bg)),
      ps_(std::move(ps)),
      grid_((grid.validate(), grid)),
      data_(std::move(data)),
      ell_(ell),
      geo_(bg_, grid_) {
  if (ell_ < 0) throw std::invalid_argument("evolve: ell must be >= 0");
  centre_diag_ = geo_.centre_diagonal();
  const double corner_out = data_.outgoing(grid_.v0);
  const double corner_in = data_.ingoing_at(grid_.u0);
  const double scale = std::max({1.0, std::abs(corner_out), std::abs(corner_in)});
  if (std::abs(corner_out - corner_in) > 1e-10 * scale) {
    throw std::invalid_argument(
        "initial data: outgoing and ingoing data disagree at (u0, v0)");
  }
  if (centre_diag_ && *centre_diag_ == 0 && std::abs(corner_out) > 1e-10) {
    throw std::invalid_argument(
        "initial data: psi must vanish at the regular centre");
  }
  prepare_tables();
}

Evolver::CellCoeffs Evolver::coefficients(int i, int j) const {
  const double uc = grid_.u(i) - 0.5 * grid_.h;
  const double vc = grid_.v(j) - 0.5 * grid_.h;
  const GeometrySample g = geo_.cell(i, j);
  const TildeCoefficients t = tilde_transform(ps_, g, uc, vc);
  const double r2 = g.r * g.r;
  const double ang = static_cast<double>(ell_) * (ell_ + 1);
  CellCoeffs k;
  k.a = (-0.25 * g.omega2 * ang + t.s0) / r2;
  k.b = t.s1 / r2;
  k.c = t.sq / g.r;
  return k;
}

void Evolver::prepare_tables() {
  cached_ = geo_.is_static() && ps_.depends_only_on_r();
  if (!cached_) return;
  const int nu = grid_.nu();
  const int nv = grid_.nv();
  // Cells exist on diagonals d = j - i with a valid south-west corner.
  diag_lo_ = centre_diag_ ? std::max(-nu, *centre_diag_ + 1) : -nu;
  table_.resize(static_cast<std::size_t>(nv - diag_lo_ + 1));
  bool all_zero = true;
  double cfl = 0.0;
  for (int d = diag_lo_; d <= nv; ++d) {
    const int i = d >= 0 ? 1 : 1 - d;
    const int j = i + d;
    CellCoeffs k = coefficients(i, j);
    table_[d - diag_lo_] = k;
    if (k.a != 0.0 || k.b != 0.0 || k.c != 0.0) all_zero = false;
    const double r = geo_.cell(i, j).r;
    cfl = std::max(cfl, grid_.h * std::abs(k.b) * r);
  }
  trivial_ = all_zero;
  if (cfl > 0.5) {
    std::ostringstream os;
    os << "h * sup|s1| / r = " << cfl << " exceeds 0.5 near the inner edge";
    warnings_.push_back(os.str());
  }
}

// One diamond cell. With n0 the predictor value, the corrector
//   N = (E - S) + W + h^2 [a psi_c + b d_u psi_c + c d_v psi_c]
// is linear in n0 and W; it is expanded so that only two fused steps
// depend on W, the value produced by the previous cell of the row.
inline double Evolver::diamond(double S, double E, double W,
                               const CellCoeffs& k, double h, double h2) {
  const double es = E - S;
  const double k0 = 0.5 * h2 * k.a;
  const double k1 = h * k.b;
  const double k2 = h * k.c;
  const double ma = 0.25 * h2 * k.a;
  const double mb = 0.5 * h * k.b;
  const double mc = 0.5 * h * k.c;
  const double y = es + k0 * E - k1 * S + k2 * es;
  const double z = es + (ma - mb) * (S + E) + mc * es;
  const double n0 = (1.0 + k0 + k1) * W + y;
  return (ma + mb + mc) * n0 + ((1.0 + ma + mb - mc) * W + z);
}

void Evolver::run(RowSink& sink) {
  const int nu = grid_.nu();
  const int nv = grid_.nv();
  const double h = grid_.h;
  const double h2 = h * h;

  std::vector<double> prev(nv + 1, 0.0), cur(nv + 1, 0.0);
  auto jmin = [&](int i) {
    return centre_diag_ ? std::max(0, i + *centre_diag_) : 0;
  };

  {
    const int j0 = jmin(0);
    for (int j = j0; j <= nv; ++j) prev[j] = data_.outgoing(grid_.v(j));
    if (centre_diag_ && j0 == *centre_diag_) prev[j0] = 0.0;
    sink.row(0, prev.data());
  }

  bool cfl_warned = !warnings_.empty();
  for (int i = 1; i <= nu; ++i) {
    const int j0 = jmin(i);
    std::fill(cur.begin(), cur.begin() + j0, 0.0);
    if (centre_diag_ && i + *centre_diag_ >= 0) {
      cur[j0] = 0.0;
    } else {
      cur[0] = data_.ingoing_at(grid_.u(i));
    }
    const int jstart = j0 + 1;

    if (trivial_) {
      for (int j = jstart; j <= nv; ++j) {
        cur[j] = (prev[j] - prev[j - 1]) + cur[j - 1];
      }
    } else if (cached_) {
      const CellCoeffs* tab = table_.data() - diag_lo_ - i;
      for (int j = jstart; j <= nv; ++j) {
        cur[j] = diamond(prev[j - 1], prev[j], cur[j - 1], tab[j], h, h2);
      }
    } else {
      for (int j = jstart; j <= nv; ++j) {
        const CellCoeffs k = coefficients(i, j);
        if (!cfl_warned && j == jstart) {
          const double r = geo_.cell(i, j).r;
          if (h * std::abs(k.b) * r > 0.5) {
            std::ostringstream os;
            os << "h * sup|s1| / r = " << h * std::abs(k.b) * r
               << " exceeds 0.5 near the inner edge at u = " << grid_.u(i);
            warnings_.push_back(os.str());
            cfl_warned = true;
          }
        }
        cur[j] = diamond(prev[j - 1], prev[j], cur[j - 1], k, h, h2);
      }
    }

    for (int j = jstart; j <= nv; ++j) {
      if (!std::isfinite(cur[j])) {
        const CellCoeffs k = coefficients(i, j);
        std::ostringstream os;
        os.precision(10);
        os << "non-finite psi at cell (i, j) = (" << i << ", " << j
           << "), (u, v) = (" << grid_.u(i) << ", " << grid_.v(j)
           << "); S = " << prev[j - 1] << ", E = " << prev[j]
           << ", W = " << cur[j - 1] << "; coefficients a = " << k.a
           << ", b = " << k.b << ", c = " << k.c;
        throw NumericalAbort(os.str(), i, j);
      }
    }
    sink.row(i, cur.data());
    std::swap(prev, cur);
  }
  sink.finish();
}

namespace {

class FullSink final : public RowSink {
 public:
  explicit FullSink(ModeField& f) : f_(f) {}
  void row(int i, const double* psi) override {
    std::copy(psi, psi + f_.nv() + 1, f_.row(i));
  }

 private:
  ModeField& f_;
};

}  // namespace

ModeField Evolver::run_full() {
  ModeField field(grid_, ell_, centre_diag_);
  FullSink sink(field);
  run(sink);
  return field;
}

ModeField evolve_mode(BackgroundPtr bg, const PotentialSet& ps,
                      const NullGrid& grid, const InitialData& data, int ell) {
  Evolver ev(std::move(bg), ps, grid, data, ell);
  return ev.run_full();
}

ConvergenceReport convergence_order(
    BackgroundPtr bg, const PotentialSet& ps, const NullGrid& grid,
    const InitialData& data, int ell,
    std::vector<std::pair<double, double>> probes) {
  ConvergenceReport rep;
  ModeField f[3];
  for (int level = 0; level < 3; ++level) {
    const NullGrid g = grid.refined(1 << level);
    rep.h.push_back(g.h);
    f[level] = evolve_mode(bg, ps, g, data, ell);
  }
  const int nu = f[0].nu();
  const int nv = f[0].nv();
  if (probes.empty()) {
    for (int a = 1; a <= 2; ++a) {
      const int i = nu * a / 3;
      const int j_in = grid.jR(i);
      for (int b = 0; b <= 1; ++b) {
        const int j = j_in + (nv - j_in) * b / 3;
        probes.emplace_back(grid.u(i), grid.v(j));
      }
    }
  }

  double scale = 0.0;
  for (int i = 0; i <= nu; ++i) {
    for (int j = f[0].jmin(i); j <= nv; ++j) {
      scale = std::max(scale, std::abs(f[0](i, j)));
      rep.error_coarse =
          std::max(rep.error_coarse, std::abs(f[0](i, j) - f[1](2 * i, 2 * j)));
      rep.error_fine = std::max(
          rep.error_fine, std::abs(f[1](2 * i, 2 * j) - f[2](4 * i, 4 * j)));
    }
  }
  const double floor = 1e-13 * std::max(scale, 1e-300);
  if (rep.error_fine <= floor || rep.error_coarse <= floor) {
    rep.inconclusive = true;
    rep.note = "differences at rounding level; the scheme is exact here";
  } else if (!(rep.error_fine < rep.error_coarse)) {
    rep.inconclusive = true;
    rep.note = "errors do not decrease under refinement";
  } else {
    rep.order = std::log2(rep.error_coarse / rep.error_fine);
  }

  for (const auto& [u, v] : probes) {
    ConvergenceProbe p;
    p.u = u;
    p.v = v;
    const int i = grid.row_of(u);
    const int j = grid.column_of(v);
    if (!f[0].valid(i, j)) {
      throw std::invalid_argument("convergence probe outside the domain");
    }
    p.values[0] = f[0](i, j);
    p.values[1] = f[1](2 * i, 2 * j);
    p.values[2] = f[2](4 * i, 4 * j);
    const double e1 = std::abs(p.values[0] - p.values[1]);
    const double e2 = std::abs(p.values[1] - p.values[2]);
    if (e2 <= floor || e1 <= floor || !(e2 < e1)) {
      p.inconclusive = true;
    } else {
      p.order = std::log2(e1 / e2);
    }
    rep.probes.push_back(p);
  }
  return rep;
}

void write_field_dump(const ModeField& field, const std::string& path) {
  namespace fs = std::filesystem;
  const auto& g = field.grid();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    for (int i = 0; i <= field.nu(); ++i) {
      out.write(reinterpret_cast<const char*>(field.row(i)),
                static_cast<std::streamsize>(sizeof(double) * (field.nv() + 1)));
    }
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
  const std::string hdr = path + ".hdr";
  {
    std::ofstream out(hdr + ".tmp");
    char buf[64];
    auto num = [&](double x) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return std::string(buf);
    };
    out << "# nullwave-field v1\n"
        << "layout = row-major float64 little-endian, rows are u\n"
        << "ell = " << field.ell() << "\n"
        << "rows = " << field.nu() + 1 << "\n"
        << "columns = " << field.nv() + 1 << "\n"
        << "u0 = " << num(g.u0) << "\n"
        << "uF = " << num(g.uF) << "\n"
        << "v0 = " << num(g.v0) << "\n"
        << "vmax = " << num(g.vmax) << "\n"
        << "h = " << num(g.h) << "\n"
        << "R = " << num(g.R) << "\n";
    if (field.centre_diagonal()) {
      out << "centre_diagonal = " << *field.centre_diagonal() << "\n";
    }
  }
  fs::rename(hdr + ".tmp", hdr);
}

}  // namespace nullwave
