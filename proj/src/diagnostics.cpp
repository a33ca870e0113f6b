#include "nullwave/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nullwave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Second-order difference of f on the index range [lo, hi]: centred when
/// both neighbours exist, one-sided otherwise.
template <class F>
double diff(F&& f, int k, int lo, int hi, double h) {
  if (k - 1 >= lo && k + 1 <= hi) return (f(k + 1) - f(k - 1)) / (2.0 * h);
  if (k + 2 <= hi) return (-3.0 * f(k) + 4.0 * f(k + 1) - f(k + 2)) / (2.0 * h);
  if (k - 2 >= lo) return (3.0 * f(k) - 4.0 * f(k - 1) + f(k - 2)) / (2.0 * h);
  if (k + 1 <= hi) return (f(k + 1) - f(k)) / h;
  if (k - 1 >= lo) return (f(k) - f(k - 1)) / h;
  return 0.0;
}

// Weight exponents: p values, 2 gamma, then the Hardy and ILED weights.
struct Weights {
  std::vector<double> exps;
  int n_p = 0, n_g = 0;
  int q3 = 0, q1 = 0, q5 = 0, q4 = 0, q2 = 0, sig = 0;
  double sigma = 1.5;

  double eval(int k, double r) const {
    if (r <= 0.0) return 0.0;
    if (k == sig) return std::pow(1.0 + r, -sigma);
    return std::pow(r, exps[k]);
  }
};

/// Shared state of the row and strip kernels.
struct Ctx {
  const GridGeometry* geo = nullptr;
  NullGrid grid;
  PotentialSet ps;
  int ell = 0;
  double L = 0.0;
  DiagnosticsSpec spec;
  int nu = 0, nv = 0, k_off = 0;
  double h = 0.0;
  std::optional<int> cd;
  Weights w;
  bool tabulated = false;
  int diag_lo = 0;
  std::vector<std::vector<double>> table;  // per weight, per diagonal
  std::vector<GeometrySample> geo_row;
  std::vector<double> du, dv, X1, X2, chi, dchi, dens, suffix;
  int stride = 1;  // rows between samples

  Ctx(const GridGeometry& g, const NullGrid& gr, const PotentialSet& p,
      int l, const DiagnosticsSpec& s)
      : geo(&g), grid(gr), ps(p), ell(l), L(l * (l + 1.0)), spec(s) {
    nu = grid.nu();
    nv = grid.nv();
    h = grid.h;
    k_off = grid.r_offset();
    stride = std::max(1, static_cast<int>(std::lround(spec.sample_du / h)));
    cd = g.centre_diagonal();
    for (double pv : spec.p_values) w.exps.push_back(pv);
    for (double gm : spec.gammas) w.exps.push_back(2.0 * gm);
    w.n_p = static_cast<int>(spec.p_values.size());
    w.n_g = static_cast<int>(spec.gammas.size());
    const double q = spec.hardy_q;
    w.q3 = static_cast<int>(w.exps.size()); w.exps.push_back(q - 3.0);
    w.q1 = static_cast<int>(w.exps.size()); w.exps.push_back(q - 1.0);
    w.q5 = static_cast<int>(w.exps.size()); w.exps.push_back(q - 5.0);
    w.q4 = static_cast<int>(w.exps.size()); w.exps.push_back(q - 4.0);
    w.q2 = static_cast<int>(w.exps.size()); w.exps.push_back(q - 2.0);
    w.sig = static_cast<int>(w.exps.size()); w.exps.push_back(0.0);
    w.sigma = spec.iled_sigma;

    const std::size_t n = static_cast<std::size_t>(nv) + 1;
    geo_row.resize(n);
    du.assign(n, 0.0);
    dv.assign(n, 0.0);
    X1.assign(n, 0.0);
    X2.assign(n, 0.0);
    chi.assign(n, 0.0);
    dchi.assign(n, 0.0);
    dens.assign(n, 0.0);
    suffix.assign(n, 0.0);

    tabulated = g.is_static();
    if (tabulated) {
      diag_lo = cd ? std::max(-nu, *cd) : -nu;
      table.assign(w.exps.size(),
                   std::vector<double>(static_cast<std::size_t>(nv - diag_lo + 1)));
      for (int d = diag_lo; d <= nv; ++d) {
        const int i = d >= 0 ? 0 : -d;
        const double r = g.node(i, i + d).r;
        for (std::size_t k = 0; k < w.exps.size(); ++k) {
          table[k][d - diag_lo] = w.eval(static_cast<int>(k), r);
        }
      }
    }
  }

  int jmin(int i) const { return cd ? std::max(0, i + *cd) : 0; }
  int jR(int i) const { return i + k_off; }
  int last_row(int c) const { return cd ? std::min(nu, c - *cd) : nu; }
  bool is_centre(int i, int j) const { return cd && j - i == *cd; }

  double weight(int k, int i, int j, double r) const {
    if (tabulated) return table[k][j - i - diag_lo];
    return w.eval(k, r);
  }
};

/// Column strip c-2..c+2 over rows [k_lo, k_hi] for one ingoing segment.
struct Strip {
  int s = 0;
  int c = 0;
  int k_lo = 0;
  int k_hi = 0;
  std::vector<double> vals;  // NaN where the node is invalid

  double at(int k, int dc) const { return vals[(k - k_lo) * 5 + (dc + 2)]; }
  bool ok(int k, int dc) const { return !std::isnan(at(k, dc)); }
  void put(const Ctx& ctx, int k, const double* row) {
    for (int dc = -2; dc <= 2; ++dc) {
      const int j = c + dc;
      vals[(k - k_lo) * 5 + (dc + 2)] =
          (j >= ctx.jmin(k) && j <= ctx.nv) ? row[j] : kNaN;
    }
  }
};

Strip make_strip(const Ctx& ctx, int s) {
  Strip st;
  st.s = s;
  st.c = ctx.jR(s);
  st.k_lo = std::max(0, s - 2);
  st.k_hi = ctx.last_row(st.c);
  st.vals.assign(static_cast<std::size_t>(st.k_hi - st.k_lo + 1) * 5, kNaN);
  return st;
}

EnergyRecord empty_record(const Ctx& ctx, int s) {
  EnergyRecord rec;
  rec.u = ctx.grid.u(s);
  rec.row = s;
  const std::size_t np = ctx.spec.p_values.size();
  const std::size_t ng = ctx.spec.gammas.size();
  rec.Ep.assign(np, 0.0);
  rec.Ep_tail.assign(np, 0.0);
  rec.Ep_tilde.assign(np, 0.0);
  rec.Ep_Psi1.assign(np, 0.0);
  rec.Ep_Psi1_tail.assign(np, 0.0);
  rec.Ep_Theta0.assign(np, 0.0);
  rec.Ep_Theta0_tail.assign(np, 0.0);
  rec.Ep_T.assign(np, 0.0);
  rec.weighted_phi_sup.assign(ng, 0.0);
  rec.E_2gamma.assign(ng, 0.0);
  return rec;
}

double eps_at(const Ctx& ctx, int i, int j, const GeometrySample& g) {
  const TildeCoefficients t =
      tilde_transform(ctx.ps, g, ctx.grid.u(i), ctx.grid.v(j));
  return std::max({std::abs(t.s0), std::abs(t.s1), std::abs(t.sq)});
}

/// Outgoing-cone quantities of row s. rows[k] holds row first + k.
void outgoing_kernel(Ctx& ctx, int s, const double* const rows[3], int first,
                     EnergyRecord& rec, RegionRow& rr) {
  const double h = ctx.h;
  const int nv = ctx.nv;
  const int jm = ctx.jmin(s);
  const int jR = ctx.jR(s);
  const double* psi = rows[s - first];
  const double L = ctx.L;

  for (int j = jm; j <= nv; ++j) ctx.geo_row[j] = ctx.geo->node(s, j);

  // d_v along the row and d_u across the three rows.
  auto f = [psi](int j) { return psi[j]; };
  for (int j = jm; j <= nv; ++j) ctx.dv[j] = diff(f, j, jm, nv, h);
  const int t = s - first;
  for (int j = jm; j <= nv; ++j) {
    double d = 0.0;
    if (t == 1) {
      if (j >= ctx.jmin(s + 1)) d = (rows[2][j] - rows[0][j]) / (2.0 * h);
    } else if (t == 0) {
      if (j >= ctx.jmin(first + 2)) {
        d = (-3.0 * rows[0][j] + 4.0 * rows[1][j] - rows[2][j]) / (2.0 * h);
      } else if (j >= ctx.jmin(first + 1)) {
        d = (rows[1][j] - rows[0][j]) / h;
      }
    } else {
      d = (3.0 * rows[2][j] - 4.0 * rows[1][j] + rows[0][j]) / (2.0 * h);
    }
    ctx.du[j] = d;
  }

  // Psi_1, Theta_0 and chi = T psi - (T r) psi / r from jR - 3 on.
  const int lo = std::max(jm, jR - 3);
  for (int j = lo; j <= nv; ++j) {
    const GeometrySample& g = ctx.geo_row[j];
    if (g.r <= 0.0) {
      ctx.X1[j] = ctx.X2[j] = ctx.chi[j] = 0.0;
      continue;
    }
    ctx.X1[j] = g.r * g.r * ctx.dv[j] / g.omega2;
    ctx.X2[j] = g.r * ctx.dv[j];
    ctx.chi[j] = ctx.du[j] + ctx.dv[j] - (g.dr_du + g.dr_dv) * psi[j] / g.r;
  }
  auto x1 = [&](int j) { return ctx.X1[j]; };
  auto x2 = [&](int j) { return ctx.X2[j]; };
  auto xc = [&](int j) { return ctx.chi[j]; };

  const int np = ctx.w.n_p;
  const int ng = ctx.w.n_g;
  double E_out = 0.0, E_T_out = 0.0;
  double h5f = 0.0, h5dv = 0.0, hl = 0.0, hdv = 0.0, ha = 0.0, hc = 0.0;
  std::vector<double> Ep(np, 0.0), EP1(np, 0.0), ET0(np, 0.0), EPT(np, 0.0);
  std::vector<double> E2g(ng, 0.0), sup_g(ng, 0.0);
  double last_e = 0.0, last_eT = 0.0;
  std::vector<double> last_p(np), last_p1(np), last_t0(np);

  for (int j = jR; j <= nv; ++j) {
    const GeometrySample& g = ctx.geo_row[j];
    const double r = g.r;
    const double wq = (j == jR || j == nv) ? 0.5 : 1.0;
    const double p = psi[j];
    const double d = ctx.dv[j];
    const double d1 = diff(x1, j, lo, nv, h);
    const double d2 = diff(x2, j, lo, nv, h);
    const double dc = diff(xc, j, lo, nv, h);
    const double a = d - g.dr_dv * p / r;
    const double e = a * a + L * p * p / (r * r);
    const double cphi = ctx.chi[j];
    const double aT = dc - g.dr_dv * cphi / r;
    const double eT = aT * aT + L * cphi * cphi / (r * r);
    E_out += wq * e;
    E_T_out += wq * eT;
    for (int k = 0; k < np; ++k) {
      const double rp = ctx.weight(k, s, j, r);
      Ep[k] += wq * rp * d * d;
      EP1[k] += wq * rp * d1 * d1;
      ET0[k] += wq * rp * d2 * d2;
      EPT[k] += wq * rp * dc * dc;
      if (j == nv) {
        last_p[k] = rp * d * d;
        last_p1[k] = rp * d1 * d1;
        last_t0[k] = rp * d2 * d2;
      }
    }
    for (int k = 0; k < ng; ++k) {
      const double rg = ctx.weight(np + k, s, j, r);
      E2g[k] += wq * rg * d * d;
      // r^(1/2 + gamma) |phi| = sqrt(r^(2 gamma)) r^(-1/2) |psi|
      sup_g[k] = std::max(sup_g[k], std::sqrt(rg / r) * std::abs(p));
    }
    const double w3 = ctx.weight(ctx.w.q3, s, j, r);
    h5f += wq * w3 * p * p;
    h5dv += wq * ctx.weight(ctx.w.q1, s, j, r) * d * d;
    hl += wq * w3 * ctx.du[j] * ctx.du[j];
    hdv += wq * w3 * d * d;
    if (L != 0.0) {
      ha += wq * ctx.weight(ctx.w.q5, s, j, r) * L * p * p;
      hc += wq * ctx.weight(ctx.w.q4, s, j, r) * L * p * p;
    }
    if (j == nv) {
      last_e = e;
      last_eT = eT;
    }
  }

  const double rmax = ctx.geo_row[nv].r;
  rec.E_out = E_out * h;
  rec.E_tail = last_e * rmax;
  rec.E_T = E_T_out * h;
  rec.E_T_tail = last_eT * rmax;
  for (int k = 0; k < np; ++k) {
    const double peff = std::max(3.0 - ctx.spec.p_values[k], 0.5);
    rec.Ep[k] = Ep[k] * h;
    rec.Ep_Psi1[k] = EP1[k] * h;
    rec.Ep_Theta0[k] = ET0[k] * h;
    rec.Ep_T[k] = EPT[k] * h;
    rec.Ep_tail[k] = last_p[k] * rmax / peff;
    rec.Ep_Psi1_tail[k] = last_p1[k] * rmax / peff;
    rec.Ep_Theta0_tail[k] = last_t0[k] * rmax / peff;
  }
  for (int k = 0; k < ng; ++k) {
    rec.E_2gamma[k] = E2g[k] * h;
    rec.weighted_phi_sup[k] = sup_g[k];
  }

  const double rR = ctx.geo_row[jR].r;
  rec.phi_R = psi[jR] / rR;
  rec.psi_vmax = psi[nv];
  {
    int j2 = jR + static_cast<int>(std::lround(ctx.spec.extrapolation_fraction *
                                               (nv - jR)));
    j2 = std::clamp(j2, jR, nv - 1);
    const double r1 = ctx.geo_row[j2].r;
    rec.psi_extrap = (rmax * psi[nv] - r1 * psi[j2]) / (rmax - r1);
  }

  // Region integrands.
  const double q = ctx.spec.hardy_q;
  rr.u = rec.u;
  rr.row = s;
  rr.h5_f = h5f * h;
  rr.h5_dv = h5dv * h;
  rr.h5_boundary = std::pow(rR, q - 2.0) * psi[jR] * psi[jR];
  rr.h5_premise = std::pow(rmax, q - 2.0) * psi[nv] * psi[nv];
  rr.hin_lhs = hl * h;
  rr.hin_dv = hdv * h;
  rr.hin_ang = ha * h;
  rr.hin_cone = hc * h;
  rr.hin_boundary = std::pow(rR, q - 4.0) *
                    (rR * rR * ctx.du[jR] * ctx.du[jR] +
                     (1.0 + L) * psi[jR] * psi[jR]);
  // Dense near r = R, geometrically sparser outwards.
  double eps = 0.0;
  int step = 1;
  for (int j = jR, n = 0; j <= nv; j += step, ++n) {
    eps = std::max(eps, eps_at(ctx, s, j, ctx.geo_row[j]));
    if (n >= 64) step = std::max(step + 1, static_cast<int>(step * 1.1));
  }
  eps = std::max(eps, eps_at(ctx, s, nv, ctx.geo_row[nv]));
  rr.eps_eff = eps;

  // ILED density over the whole row in the measure (Omega^2 / 4) du dv; the
  // centre node takes its neighbour's.
  double iled = 0.0;
  auto dens = [&](int j) {
    const GeometrySample& g = ctx.geo_row[j];
    const double r = g.r;
    const double ph = psi[j] / r;
    const double a = ctx.du[j] - g.dr_du * ph;
    const double b = ctx.dv[j] - g.dr_dv * ph;
    return 0.25 * g.omega2 * (ph * ph + a * a + b * b) * ctx.weight(ctx.w.sig, s, j, r);
  };
  for (int j = jm; j <= nv; ++j) {
    const double wq = (j == jm || j == nv) ? 0.5 : 1.0;
    const double dj = (ctx.geo_row[j].r <= 0.0) ? dens(j + 1) : dens(j);
    ctx.dens[j] = dj;
    iled += wq * dj;
  }
  rr.iled = iled * h;

  // The same integral cut at v_R(u_k) of every sample row k up to s.
  ctx.suffix[nv] = 0.5 * ctx.dens[nv];
  for (int j = nv - 1; j >= jm; --j) ctx.suffix[j] = ctx.suffix[j + 1] + ctx.dens[j];
  rr.iled_from.clear();
  for (int sk = 0; sk <= s; sk += ctx.stride) {
    const int c = std::max(jm, ctx.jR(sk));
    rr.iled_from.push_back(c >= nv ? 0.0 : (ctx.suffix[c] - 0.5 * ctx.dens[c]) * h);
  }
}

/// Ingoing-segment energies for the sample of strip st.
void inner_kernel(const Ctx& ctx, const Strip& st, EnergyRecord& rec) {
  const double h = ctx.h;
  const int s = st.s;
  const int c = st.c;
  const int lo = st.k_lo;
  const int hi = st.k_hi;
  const double L = ctx.L;
  auto col = [&](int k) { return st.at(k, 0); };

  const int n = hi - lo + 1;
  std::vector<double> Du(n), chi(n);
  std::vector<GeometrySample> g(n);
  for (int k = lo; k <= hi; ++k) {
    g[k - lo] = ctx.geo->node(k, c);
    Du[k - lo] = diff(col, k, lo, hi, h);
  }
  for (int k = lo; k <= hi; ++k) {
    const GeometrySample& gk = g[k - lo];
    if (ctx.is_centre(k, c) || gk.r <= 0.0) {
      chi[k - lo] = 0.0;
      continue;
    }
    // d_v at (k, c) from the strip columns.
    double dvk;
    if (st.ok(k, -1) && st.ok(k, 1)) {
      dvk = (st.at(k, 1) - st.at(k, -1)) / (2.0 * h);
    } else if (st.ok(k, 2)) {
      dvk = (-3.0 * st.at(k, 0) + 4.0 * st.at(k, 1) - st.at(k, 2)) / (2.0 * h);
    } else {
      dvk = (3.0 * st.at(k, 0) - 4.0 * st.at(k, -1) + st.at(k, -2)) / (2.0 * h);
    }
    chi[k - lo] = Du[k - lo] + dvk - (gk.dr_du + gk.dr_dv) * st.at(k, 0) / gk.r;
  }
  auto xc = [&](int k) { return chi[k - lo]; };

  double E_in = 0.0, E_T_in = 0.0;
  double prev_e = 0.0, prev_eT = 0.0;
  for (int k = s; k <= hi; ++k) {
    const GeometrySample& gk = g[k - lo];
    double e, eT;
    if (gk.r <= 0.0) {
      e = prev_e;
      eT = prev_eT;
    } else {
      const double p = st.at(k, 0);
      const double a = Du[k - lo] - gk.dr_du * p / gk.r;
      e = a * a + L * p * p / (gk.r * gk.r);
      const double cx = chi[k - lo];
      const double b = diff(xc, k, lo, hi, h) - gk.dr_du * cx / gk.r;
      eT = b * b + L * cx * cx / (gk.r * gk.r);
    }
    const double wq = (k == s || k == hi) ? 0.5 : 1.0;
    E_in += wq * e;
    E_T_in += wq * eT;
    prev_e = e;
    prev_eT = eT;
  }
  rec.E_in = E_in * h;
  rec.E = rec.E_out + rec.E_in;
  rec.E_T += E_T_in * h;
  for (std::size_t k = 0; k < rec.Ep.size(); ++k) {
    rec.Ep_tilde[k] = rec.Ep[k] + rec.E;
  }
}

int needed_last(int s, int nu) {
  if (s == 0) return std::min(2, nu);
  if (s == nu) return nu;
  return s + 1;
}

int triple_first(int s, int nu) {
  if (s == 0) return 0;
  if (s == nu) return nu - 2;
  return s - 1;
}

}  // namespace

struct DiagnosticsRecorder::Impl {
  Ctx ctx;
  int stride = 1;
  std::vector<std::vector<double>> ring;
  struct Pending {
    Strip strip;
    EnergyRecord rec;
    RegionRow rr;
    bool out_done = false;
  };
  std::vector<Pending> pending;
  std::vector<std::pair<EnergyRecord, RegionRow>> done;

  Impl(const GridGeometry& g, const NullGrid& gr, const PotentialSet& p, int l,
       const DiagnosticsSpec& s)
      : ctx(g, gr, p, l, s) {
    if (ctx.nu < 2) throw std::invalid_argument("diagnostics: need at least 3 rows");
    stride = ctx.stride;
    ring.assign(3, std::vector<double>(static_cast<std::size_t>(ctx.nv) + 1));
  }

  const double* row_ptr(int i) const { return ring[i % 3].data(); }

  void row(int i, const double* psi) {
    std::copy(psi, psi + ctx.nv + 1, ring[i % 3].begin());
    for (auto& pd : pending) {
      if (i > pd.strip.s && i <= pd.strip.k_hi) pd.strip.put(ctx, i, psi);
    }
    if (i % stride == 0) {
      Pending pd;
      pd.strip = make_strip(ctx, i);
      for (int k = pd.strip.k_lo; k <= i && k <= pd.strip.k_hi; ++k) {
        pd.strip.put(ctx, k, row_ptr(k));
      }
      pd.rec = empty_record(ctx, i);
      pending.push_back(std::move(pd));
    }
    for (auto& pd : pending) {
      const int s = pd.strip.s;
      if (!pd.out_done && needed_last(s, ctx.nu) == i) {
        const int first = triple_first(s, ctx.nu);
        const double* rows[3] = {row_ptr(first), row_ptr(first + 1),
                                 row_ptr(first + 2)};
        outgoing_kernel(ctx, s, rows, first, pd.rec, pd.rr);
        pd.out_done = true;
      }
    }
    for (auto it = pending.begin(); it != pending.end();) {
      if (it->out_done && i >= it->strip.k_hi) {
        inner_kernel(ctx, it->strip, it->rec);
        done.emplace_back(std::move(it->rec), it->rr);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
  }
};

DiagnosticsRecorder::DiagnosticsRecorder(const GridGeometry& geo,
                                         const NullGrid& grid,
                                         const PotentialSet& ps, int ell,
                                         DiagnosticsSpec spec)
    : impl_(new Impl(geo, grid, ps, ell, spec)) {
  series_.ell = ell;
  series_.p_values = spec.p_values;
  series_.gammas = spec.gammas;
  series_.hardy_q = spec.hardy_q;
  series_.iled_sigma = spec.iled_sigma;
  series_.u0 = grid.u0;
}

DiagnosticsRecorder::~DiagnosticsRecorder() { delete impl_; }

void DiagnosticsRecorder::row(int i, const double* psi) { impl_->row(i, psi); }

void DiagnosticsRecorder::finish() {
  auto& done = impl_->done;
  std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) {
    return a.first.row < b.first.row;
  });
  series_.records.clear();
  series_.rows.clear();
  for (auto& [rec, rr] : done) {
    series_.records.push_back(std::move(rec));
    series_.rows.push_back(rr);
  }
  done.clear();
}

EnergySeries analyze_field(const ModeField& field, const GridGeometry& geo,
                           const PotentialSet& ps,
                           const DiagnosticsSpec& spec) {
  DiagnosticsRecorder rec(geo, field.grid(), ps, field.ell(), spec);
  for (int i = 0; i <= field.nu(); ++i) rec.row(i, field.row(i));
  rec.finish();
  return rec.take_series();
}

namespace {

EnergyRecord single_record(const ModeField& field, const GridGeometry& geo,
                           double u, const DiagnosticsSpec& spec,
                           RegionRow* rr_out = nullptr) {
  const NullGrid& grid = field.grid();
  int s;
  try {
    s = grid.row_of(u);
  } catch (const std::exception&) {
    throw std::invalid_argument("energy: u = " + std::to_string(u) +
                                " is not a grid row");
  }
  if (grid.jR(s) > grid.nv()) {
    throw std::invalid_argument("energy: v_R(u) lies beyond vmax");
  }
  Ctx ctx(geo, grid, PotentialSet::zero(), field.ell(), spec);
  EnergyRecord rec = empty_record(ctx, s);
  RegionRow rr;
  const int first = triple_first(s, ctx.nu);
  const double* rows[3] = {field.row(first), field.row(first + 1),
                           field.row(first + 2)};
  outgoing_kernel(ctx, s, rows, first, rec, rr);
  Strip st = make_strip(ctx, s);
  for (int k = st.k_lo; k <= st.k_hi; ++k) st.put(ctx, k, field.row(k));
  inner_kernel(ctx, st, rec);
  if (rr_out) *rr_out = rr;
  return rec;
}

}  // namespace

double foliation_energy(const ModeField& field, const GridGeometry& geo,
                        double u, double* tail) {
  DiagnosticsSpec spec;
  spec.p_values.clear();
  spec.gammas.clear();
  const EnergyRecord rec = single_record(field, geo, u, spec);
  if (tail) *tail = rec.E_tail;
  return rec.E;
}

double weighted_energy(const ModeField& field, const GridGeometry& geo,
                       double u, double p, EnergyTarget target, double* tail) {
  if (!(p >= 0.0 && p <= 3.5)) {
    throw std::invalid_argument("weighted_energy: p must lie in [0, 3.5]");
  }
  DiagnosticsSpec spec;
  spec.p_values = {p};
  spec.gammas.clear();
  const EnergyRecord rec = single_record(field, geo, u, spec);
  switch (target) {
    case EnergyTarget::psi:
      if (tail) *tail = rec.Ep_tail[0];
      return rec.Ep[0];
    case EnergyTarget::Psi1:
      if (tail) *tail = rec.Ep_Psi1_tail[0];
      return rec.Ep_Psi1[0];
    case EnergyTarget::Theta0:
      if (tail) *tail = rec.Ep_Theta0_tail[0];
      return rec.Ep_Theta0[0];
    case EnergyTarget::Tpsi:
      if (tail) *tail = 0.0;
      return rec.Ep_T[0];
  }
  return 0.0;
}

namespace {

void finish_report(InequalityReport& rep) {
  rep.margin = rep.rhs * rep.constant_used - rep.lhs;
  if (rep.rhs > 0.0) {
    rep.ratio = rep.lhs / rep.rhs;
  } else {
    rep.ratio = rep.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  const bool finite = std::isfinite(rep.lhs) && std::isfinite(rep.rhs);
  rep.pass = finite && !rep.inconclusive && rep.margin >= 0.0;
}

/// Trapezoid in u of a per-row quantity over rows with u1 <= u <= u2.
template <class F>
double integrate_rows(const std::vector<RegionRow>& rows, double u1, double u2,
                      F&& f) {
  double acc = 0.0;
  const RegionRow* prev = nullptr;
  const double tol = 1e-9 * std::max(1.0, std::abs(u2));
  for (const RegionRow& r : rows) {
    if (r.u < u1 - tol || r.u > u2 + tol) continue;
    if (prev) acc += 0.5 * (r.u - prev->u) * (f(*prev) + f(r));
    prev = &r;
  }
  return acc;
}

}  // namespace

InequalityReport hardy_check_outgoing(const EnergySeries& series, double u1,
                                      double u2, double C1, double C2) {
  const double q = series.hardy_q;
  InequalityReport rep;
  rep.name = "hardy.outgoing";
  if (!(q < 2.0)) throw std::invalid_argument("hardy: q must be below 2");
  const auto& rows = series.rows;
  const double lhs = integrate_rows(rows, u1, u2, [](const RegionRow& r) { return r.h5_f; });
  const double A = integrate_rows(rows, u1, u2, [](const RegionRow& r) { return r.h5_dv; });
  const double B = integrate_rows(rows, u1, u2, [](const RegionRow& r) { return r.h5_boundary; });
  const double P = integrate_rows(rows, u1, u2, [](const RegionRow& r) { return r.h5_premise; });
  const double k = 2.0 - q;
  rep.lhs = lhs;
  rep.rhs = C1 * A / (k * k) + C2 * B / k;
  rep.details["q"] = q;
  rep.details["C1"] = C1;
  rep.details["C2"] = C2;
  rep.details["bulk_dv"] = A;
  rep.details["boundary"] = B;
  rep.details["premise_flux"] = P / k;
  if (P / k > 0.25 * lhs && lhs > 0.0) {
    rep.inconclusive = true;
    rep.note = "boundary term at vmax is not small; increase vmax";
  }
  finish_report(rep);
  return rep;
}

InequalityReport hardy_check_outgoing(
    const std::function<double(double, double)>& f,
    const std::function<double(double, double)>& df_dv, double q, double R,
    double u1, double u2, double vmax, int n_u, int n_v, double C1,
    double C2) {
  if (!(q < 2.0)) throw std::invalid_argument("hardy: q must be below 2");
  if (n_u < 2 || n_v < 2 || !(u2 > u1) || !(vmax > u2 + R)) {
    throw std::invalid_argument("hardy: bad region");
  }
  InequalityReport rep;
  rep.name = "hardy.outgoing";
  const double k = 2.0 - q;
  double lhs = 0.0, A = 0.0, B = 0.0, P = 0.0;
  const double du = (u2 - u1) / (n_u - 1);
  for (int a = 0; a < n_u; ++a) {
    const double u = u1 + a * du;
    const double wu = (a == 0 || a == n_u - 1) ? 0.5 * du : du;
    const double rmax = vmax - u;
    const double lg = std::log(rmax / R);
    const double dt = 1.0 / (n_v - 1);
    double l = 0.0, d = 0.0;
    // v = u + r with r = R (rmax / R)^t, dv = r log(rmax / R) dt.
    for (int b = 0; b < n_v; ++b) {
      const double r = R * std::exp(lg * b * dt);
      const double v = u + r;
      const double wt = ((b == 0 || b == n_v - 1) ? 0.5 : 1.0) * dt * r * lg;
      const double fv = f(u, v);
      const double dfv = df_dv(u, v);
      l += wt * std::pow(r, q - 3.0) * fv * fv;
      d += wt * std::pow(r, q - 1.0) * dfv * dfv;
    }
    const double fb = f(u, u + R);
    const double fm = f(u, vmax);
    lhs += wu * l;
    A += wu * d;
    B += wu * std::pow(R, q - 2.0) * fb * fb;
    P += wu * std::pow(rmax, q - 2.0) * fm * fm;
  }
  rep.lhs = lhs;
  rep.rhs = C1 * A / (k * k) + C2 * B / k;
  rep.details["q"] = q;
  rep.details["bulk_dv"] = A;
  rep.details["boundary"] = B;
  rep.details["premise_flux"] = P / k;
  if (P / k > 0.25 * lhs && lhs > 0.0) {
    rep.inconclusive = true;
    rep.note = "boundary term at vmax is not small; increase vmax";
  }
  finish_report(rep);
  return rep;
}

InequalityReport hardy_check_ingoing(const EnergySeries& series, double u1,
                                     double u2, double constant,
                                     bool is_solution) {
  if (!is_solution) {
    throw std::invalid_argument(
        "hardy.ingoing: the inequality holds for solutions only");
  }
  const double q = series.hardy_q;
  if (!(q < 2.0)) throw std::invalid_argument("hardy: q must be below 2");
  const auto& rows = series.rows;
  InequalityReport rep;
  rep.name = "hardy.ingoing";
  rep.constant_used = constant;
  const double tol = 1e-9 * std::max(1.0, std::abs(u2));
  double eps = 0.0, cone = 0.0;
  bool first = true;
  for (const RegionRow& r : rows) {
    if (r.u < u1 - tol || r.u > u2 + tol) continue;
    eps = std::max(eps, r.eps_eff);
    if (first) cone = r.hin_cone;
    first = false;
  }
  const double k = 2.0 - q;
  const double lhs = integrate_rows(rows, u1, u2, [](const RegionRow& r) { return r.hin_lhs; });
  const double bulk = integrate_rows(rows, u1, u2, [](const RegionRow& r) {
    return r.hin_dv + r.hin_ang;
  });
  const double bdry = integrate_rows(rows, u1, u2, [](const RegionRow& r) { return r.hin_boundary; });
  rep.lhs = lhs;
  rep.rhs = eps * eps * bulk / k + (cone + bdry) / k;
  rep.details["q"] = q;
  rep.details["eps_eff"] = eps;
  rep.details["bulk"] = bulk;
  rep.details["initial_cone"] = cone;
  rep.details["boundary"] = bdry;
  finish_report(rep);
  return rep;
}

InequalityReport iled_check(const EnergySeries& series, double constant) {
  InequalityReport rep;
  rep.name = "iled";
  rep.constant_used = constant;
  const auto& rows = series.rows;
  const auto& recs = series.records;
  const std::size_t n = std::min(rows.size(), recs.size());
  if (n < 2) throw std::invalid_argument("iled: need at least 2 records");
  // tail[k]: integral over rows m >= k of the row integral cut at v_R(u_k).
  std::vector<double> tail(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t m = k; m + 1 < n; ++m) {
      if (rows[m].iled_from.size() <= k) {
        throw std::invalid_argument("iled: rows do not cover the samples");
      }
      tail[k] += 0.5 * (rows[m + 1].u - rows[m].u) *
                 (rows[m].iled_from[k] + rows[m + 1].iled_from[k]);
    }
  }
  const double u_mid = 0.5 * (rows.front().u + rows.back().u);
  double E_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) E_max = std::max(E_max, recs[k].E);
  double best = -1.0, lo = std::numeric_limits<double>::infinity();
  double bl = 0.0, br = 0.0, at = 0.0;
  for (std::size_t k = 0; k < n && rows[k].u <= u_mid; ++k) {
    const double E = recs[k].E;
    if (!(E > 1e-12 * E_max)) continue;  // round-off level energies
    const double ratio = tail[k] / E;
    lo = std::min(lo, ratio);
    if (ratio > best) {
      best = ratio;
      bl = tail[k];
      br = E;
      at = rows[k].u;
    }
  }
  rep.details["sigma"] = series.iled_sigma;
  if (best < 0.0) {
    rep.note = "0/0: no record with positive energy";
    rep.pass = true;
    return rep;
  }
  rep.lhs = bl;
  rep.rhs = br;
  rep.details["C_sigma"] = best;
  rep.details["min_ratio"] = lo;
  rep.details["spread"] = lo > 0.0 ? best / lo : std::numeric_limits<double>::infinity();
  rep.details["at_u1"] = at;
  finish_report(rep);
  return rep;
}

InequalityReport energy_boundedness_check(const std::vector<double>& u,
                                          const std::vector<double>& E,
                                          double ceiling) {
  if (u.size() != E.size() || u.size() < 2) {
    throw std::invalid_argument("boundedness: need at least 2 records");
  }
  InequalityReport rep;
  rep.name = "boundedness";
  rep.constant_used = ceiling;
  double min_before = std::numeric_limits<double>::infinity();
  double best = 0.0, num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < E.size(); ++k) {
    if (!(E[k] > 0.0)) continue;
    if (std::isfinite(min_before) && E[k] / min_before > best) {
      best = E[k] / min_before;
      num = E[k];
      den = min_before;
    }
    min_before = std::min(min_before, E[k]);
  }
  rep.lhs = num;
  rep.rhs = den;
  rep.details["D_emp"] = best;
  finish_report(rep);
  return rep;
}

InequalityReport energy_boundedness_check(const EnergySeries& series,
                                          double ceiling) {
  std::vector<double> u, E;
  for (const auto& r : series.records) {
    u.push_back(r.u);
    E.push_back(r.E);
  }
  return energy_boundedness_check(u, E, ceiling);
}

InequalityReport boundedness_T_check(const EnergySeries& series,
                                     double ceiling) {
  InequalityReport rep;
  rep.name = "boundedness.T";
  rep.constant_used = ceiling;
  const auto& recs = series.records;
  if (recs.size() < 2) throw std::invalid_argument("boundedness.T: need 2 records");
  double best = 0.0, num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < recs.size(); ++a) {
    const double u1 = recs[a].u;
    if (!(u1 > 0.0)) continue;
    const double d = recs[a].E_T + recs[a].E / (u1 * u1);
    if (!(d > 0.0)) continue;
    for (std::size_t b = a + 1; b < recs.size(); ++b) {
      const double ratio = recs[b].E_T / d;
      if (ratio > best) {
        best = ratio;
        num = recs[b].E_T;
        den = d;
      }
    }
  }
  rep.lhs = num;
  rep.rhs = den;
  rep.details["D_prime_emp"] = best;
  rep.details["eta_prime"] = 0.0;
  finish_report(rep);
  return rep;
}

InequalityReport pointwise_from_energy_check(const EnergySeries& series,
                                             double gamma, double constant) {
  if (!(gamma > 0.0 && gamma < 0.5)) {
    throw std::invalid_argument("pointwise: gamma must lie in (0, 1/2)");
  }
  int g = -1;
  for (std::size_t k = 0; k < series.gammas.size(); ++k) {
    if (std::abs(series.gammas[k] - gamma) < 1e-12) g = static_cast<int>(k);
  }
  if (g < 0) throw std::invalid_argument("pointwise: gamma was not recorded");
  InequalityReport rep;
  rep.name = "pointwise.energy";
  rep.constant_used = constant;
  std::vector<double> ratios;
  double best = 0.0, num = 0.0, den = 0.0;
  for (const auto& r : series.records) {
    const double e = r.E_2gamma[g] + r.E;
    if (!(e > 0.0)) continue;
    const double ratio = r.weighted_phi_sup[g] / std::sqrt(e);
    ratios.push_back(ratio);
    if (ratio > best) {
      best = ratio;
      num = r.weighted_phi_sup[g];
      den = std::sqrt(e);
    }
  }
  rep.lhs = num;
  rep.rhs = den;
  rep.details["gamma"] = gamma;
  rep.details["sup_ratio"] = best;
  if (!ratios.empty()) {
    std::vector<double> late(ratios.end() - (ratios.size() + 3) / 4, ratios.end());
    std::nth_element(late.begin(), late.begin() + late.size() / 2, late.end());
    rep.details["plateau"] = late[late.size() / 2];
  }
  finish_report(rep);
  return rep;
}

IdentityResidual multiplier_identity_residual(const ModeField& field,
                                              const GridGeometry& geo,
                                              const PotentialSet& ps,
                                              double u1, double u2, double p,
                                              Identity which) {
  const NullGrid& grid = field.grid();
  const int nu = grid.nu();
  const int nv = grid.nv();
  const double h = grid.h;
  const int i1 = std::max(grid.row_of(u1), 1);
  const int i2 = std::min(grid.row_of(u2), nu - 1);
  if (i2 <= i1) throw std::invalid_argument("identity: empty region");
  const double L = field.ell() * (field.ell() + 1.0);
  const int jlo = grid.jR(i1 - 1) - 1;
  if (jlo + 4 > nv) {
    throw std::invalid_argument("identity: region does not fit in the grid");
  }
  const int width = nv - jlo + 1;

  // Node quantities on rows i1-1..i2, columns jlo..nv.
  struct Node {
    double psi, du, dv, X, Xv, G, Gv, H, Hv;
    GeometrySample g;
  };
  const int nrows = i2 - i1 + 2;
  std::vector<Node> nodes(static_cast<std::size_t>(nrows) * width);
  std::vector<double> X(width), G(width), H(width);
  for (int i = i1 - 1; i <= i2; ++i) {
    const double u = grid.u(i);
    Node* row = &nodes[static_cast<std::size_t>(i - i1 + 1) * width];
    for (int j = jlo; j <= nv; ++j) {
      Node& n = row[j - jlo];
      if (!field.valid(i, j) || field.is_centre(i, j)) {
        n = Node{};
        X[j - jlo] = G[j - jlo] = H[j - jlo] = 0.0;
        continue;
      }
      n.g = geo.node(i, j);
      n.psi = field(i, j);
      n.du = field.dpsi_du(i, j);
      n.dv = field.dpsi_dv(i, j);
      const double r = n.g.r;
      const TildeCoefficients t = tilde_transform(ps, n.g, u, grid.v(j));
      const double F = (t.s0 * n.psi + t.s1 * n.du + t.sq * r * n.dv) / (r * r);
      X[j - jlo] = r * r * n.dv / n.g.omega2;
      G[j - jlo] = r * r * F / n.g.omega2;
      H[j - jlo] = n.g.domega2_du / n.g.omega2 * X[j - jlo];
      n.X = X[j - jlo];
      n.G = G[j - jlo];
      n.H = H[j - jlo];
    }
    auto fx = [&](int k) { return X[k]; };
    auto fg = [&](int k) { return G[k]; };
    auto fh = [&](int k) { return H[k]; };
    for (int k = 0; k < width; ++k) {
      row[k].Xv = diff(fx, k, 0, width - 1, h);
      row[k].Gv = diff(fg, k, 0, width - 1, h);
      row[k].Hv = diff(fh, k, 0, width - 1, h);
    }
  }
  auto node = [&](int i, int j) -> const Node& {
    return nodes[static_cast<std::size_t>(i - i1 + 1) * width + (j - jlo)];
  };

  // Per-node values: flux_u, flux_v (differentiated), bulk terms (averaged).
  const bool rp1 = which == Identity::rp1;
  std::vector<std::string> names;
  if (rp1) {
    names = {"du_flux", "du_r_bulk", "dv_flux_angular", "angular_bulk",
             "source"};
  } else {
    names = {"du_flux", "du_r_bulk", "angular_bulk", "curvature_bulk",
             "dlog_omega_term", "source", "dv_flux_K", "dv_flux_angular"};
  }
  const int nt = static_cast<int>(names.size());
  auto terms = [&](const Node& n, double* out) {
    const GeometrySample& g = n.g;
    const double r = g.r;
    const double rp = std::pow(r, p);
    const double dlv = g.domega2_dv / g.omega2;
    const double ang = (g.omega2 / 8.0) * ((2.0 - p) * g.dr_dv - r * dlv) *
                       std::pow(r, p - 3.0) * L;
    if (rp1) {
      const double F = n.G * g.omega2 / (r * r);
      out[0] = rp * n.dv * n.dv / 2.0;
      out[1] = -g.dr_du * (p / 2.0) * std::pow(r, p - 1.0) * n.dv * n.dv;
      out[2] = g.omega2 * std::pow(r, p - 2.0) * L * n.psi * n.psi / 8.0;
      out[3] = ang * n.psi * n.psi;
      out[4] = rp * n.dv * F;
    } else {
      const double K = r * g.d2r_dudv - g.dr_du * g.dr_dv;
      out[0] = rp * n.Xv * n.Xv / 2.0;
      out[1] = -g.dr_du * (2.0 + p / 2.0) * std::pow(r, p - 1.0) * n.Xv * n.Xv;
      out[2] = ang * n.X * n.X;
      out[3] = std::pow(r, p - 3.0) * n.X * n.X *
               ((p - 2.0) * g.dr_dv * K +
                r * (r * g.d3r_dudvdv - g.d2r_dvdv * g.dr_du));
      out[4] = rp * n.Xv * n.Hv;
      out[5] = rp * n.Xv * n.Gv;
      out[6] = std::pow(r, p - 2.0) * K * n.X * n.X;
      out[7] = -g.omega2 * std::pow(r, p - 2.0) * L * n.X * n.X / 8.0;
    }
  };
  // Which terms are u-fluxes, v-fluxes, and on the right-hand side.
  std::vector<int> kind(nt, 0);  // 0 bulk, 1 d_u flux, 2 d_v flux
  std::vector<double> sign(nt, 1.0);
  if (rp1) {
    kind[0] = 1;
    kind[2] = 2;
    sign[4] = -1.0;
  } else {
    kind[0] = 1;
    kind[6] = 2;
    kind[7] = 2;
    sign[5] = sign[6] = sign[7] = -1.0;
  }

  std::vector<double> total(nt, 0.0);
  std::vector<double> S(nt), E(nt), W(nt), N(nt);
  for (int i = i1 + 1; i <= i2; ++i) {
    const int j0 = std::max(grid.jR(i) + 1, jlo + 1);
    for (int j = j0; j <= nv - 2; ++j) {
      terms(node(i - 1, j - 1), S.data());
      terms(node(i - 1, j), E.data());
      terms(node(i, j - 1), W.data());
      terms(node(i, j), N.data());
      for (int k = 0; k < nt; ++k) {
        double cell;
        if (kind[k] == 1) {
          cell = (W[k] + N[k] - S[k] - E[k]) / (2.0 * h);
        } else if (kind[k] == 2) {
          cell = (E[k] + N[k] - S[k] - W[k]) / (2.0 * h);
        } else {
          cell = 0.25 * (S[k] + E[k] + W[k] + N[k]);
        }
        total[k] += cell * h * h;
      }
    }
  }
  IdentityResidual res;
  res.which = rp1 ? "rp1" : "rp2";
  double sum = 0.0, big = 0.0;
  for (int k = 0; k < nt; ++k) {
    sum += sign[k] * total[k];
    big = std::max(big, std::abs(total[k]));
    res.terms.emplace_back(names[k], total[k]);
  }
  res.residual = std::abs(sum);
  res.largest_term = big;
  res.relative = big > 0.0 ? res.residual / big : 0.0;
  return res;
}

double gronwall_integral(double a, double b, double u1, double u2) {
  if (!(a > 0.0)) throw std::invalid_argument("gronwall: a must be positive");
  if (!(b >= 0.0)) throw std::invalid_argument("gronwall: b must be non-negative");
  if (!(u1 > 0.0 && u2 > u1)) {
    throw std::invalid_argument("gronwall: need 0 < u1 < u2");
  }
  // (2/a) [sqrt(u) - (b/a) log(sqrt(u) + b/a)] between u1 and u2
  const double c = b / a;
  const double s1 = std::sqrt(u1), s2 = std::sqrt(u2);
  return (2.0 / a) * ((s2 - s1) - c * std::log1p((s2 - s1) / (s1 + c)));
}

}  // namespace nullwave
