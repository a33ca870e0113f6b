#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "nullwave/diagnostics.hpp"

using namespace nullwave;

namespace {

NullGrid grid(double h, double uF = 41.0, double vmax = 201.0) {
  NullGrid g;
  g.u0 = 1.0;
  g.uF = uF;
  g.v0 = 11.0;
  g.vmax = vmax;
  g.h = h;
  g.R = 10.0;
  return g;
}

InitialData bump(double center = 15.0, double width = 2.0) {
  InitialData d;
  d.family = InitialData::Family::compact;
  d.center = center;
  d.width = width;
  return d;
}

EnergySeries record(BackgroundPtr bg, const PotentialSet& ps, const NullGrid& g,
                    const InitialData& d, int ell, DiagnosticsSpec spec = {}) {
  Evolver e(bg, ps, g, d, ell);
  DiagnosticsRecorder rec(e.geometry(), g, ps, ell, spec);
  e.run(rec);
  return rec.take_series();
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-13) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol,
                          50);
}

}  // namespace

TEST_CASE("huygens: the energy vanishes once the pulse has passed") {
  const NullGrid g = grid(0.05);
  const EnergySeries s = record(make_minkowski(), PotentialSet::zero(), g, bump(), 0);
  REQUIRE(s.records.size() == 41);
  for (const auto& r : s.records) {
    CAPTURE(r.u);
    if (r.u >= 18.0) {
      CHECK(r.E == 0.0);
      CHECK(r.E_T == 0.0);
    }
  }
  // Conserved while the pulse is on the foliation.
  CHECK(s.records[0].E > 0.0);
  CHECK(s.records[6].E == doctest::Approx(s.records[0].E).epsilon(1e-3));
}

TEST_CASE("initial energy against direct quadrature") {
  const InitialData d = bump(30.0, 8.0);
  auto G = [&](double v) { return d.outgoing(v); };
  auto exact_integrand = [&](double v) {
    const double r = v - 1.0;
    const double x = (v - 30.0) / 8.0;
    if (std::abs(x) >= 1.0) return 0.0;
    const double y = 1.0 - x * x;
    const double dG = 8.0 * std::pow(y, 7) * (-2.0 * x / 8.0);
    const double a = dG - G(v) / r;
    return a * a + 2.0 * G(v) * G(v) / (r * r);
  };
  const double exact = integrate(exact_integrand, 22.0, 38.0);
  double err[2];
  int k = 0;
  for (double h : {0.05, 0.025}) {
    const NullGrid g = grid(h, 3.0, 101.0);
    const EnergySeries s = record(make_minkowski(), PotentialSet::zero(), g, d, 1);
    err[k++] = std::abs(s.records[0].E - exact) / exact;
    CHECK(s.records[0].E_in == 0.0);
  }
  CHECK(err[0] < 1e-3);
  CHECK(err[0] / err[1] > 3.5);
  CHECK(err[0] / err[1] < 4.5);
}

TEST_CASE("weighted energy of 1/r") {
  const NullGrid g = grid(0.05, 11.0, 401.0);
  const GridGeometry geo(make_minkowski(), g);
  ModeField f(g, 0, geo.centre_diagonal());
  for (int i = 0; i <= f.nu(); ++i) {
    for (int j = f.jmin(i); j <= f.nv(); ++j) {
      const double r = g.v(j) - g.u(i);
      f.at(i, j) = r > 0.0 ? 1.0 / r : 0.0;
    }
  }
  const double u = 5.0;
  const double rmax = g.vmax - u;
  const double exact = 1.0 / 10.0 - 1.0 / rmax;
  CHECK(weighted_energy(f, geo, u, 2.0, EnergyTarget::psi) ==
        doctest::Approx(exact).epsilon(1e-4));
  // E_p grows with p where r >= 1.
  double prev = 0.0;
  for (double p : {0.0, 0.5, 1.0, 2.0, 3.0, 3.5}) {
    const double e = weighted_energy(f, geo, u, p, EnergyTarget::psi);
    CHECK(e >= prev);
    prev = e;
  }
  CHECK_THROWS_AS(weighted_energy(f, geo, u, 3.6, EnergyTarget::psi), std::invalid_argument);
}

TEST_CASE("outgoing hardy inequality in closed form") {
  // f = 1/r, q = 1 on u in [1, 5], R = 10: both bulk integrals equal
  // (u2 - u1) (R^-3 - rmax^-3) / 3 and the boundary term is (u2 - u1) R^-3.
  const double R = 10.0, u1 = 1.0, u2 = 5.0, vmax = 4000.0;
  auto f = [](double u, double v) { return 1.0 / (v - u); };
  auto df = [](double u, double v) { return -1.0 / ((v - u) * (v - u)); };
  const InequalityReport rep = hardy_check_outgoing(f, df, 1.0, R, u1, u2, vmax);
  const double bulk = integrate([&](double u) {
    const double rmax = vmax - u;
    return (std::pow(R, -3) - std::pow(rmax, -3)) / 3.0;
  }, u1, u2);
  const double boundary = (u2 - u1) * std::pow(R, -3);
  CHECK(rep.lhs == doctest::Approx(bulk).epsilon(1e-6));
  CHECK(rep.rhs == doctest::Approx(4.0 * bulk + 2.0 * boundary).epsilon(1e-6));
  CHECK(rep.pass);
  CHECK(rep.lhs / bulk <= 4.0);
  CHECK(rep.ratio <= 0.25);

  auto zero = [](double, double) { return 0.0; };
  const InequalityReport z = hardy_check_outgoing(zero, zero, 1.0, R, u1, u2, vmax);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.pass);
}

TEST_CASE("inequality checks on an evolved solution") {
  const NullGrid g = grid(0.1, 61.0, 1001.0);
  const EnergySeries s = record(make_minkowski(), PotentialSet::inverse_square(0.05), g,
                                bump(), 1);
  const auto& recs = s.records;
  const InequalityReport h5 = hardy_check_outgoing(s, recs.front().u, recs.back().u);
  CHECK(h5.pass);
  CHECK_FALSE(h5.inconclusive);
  const InequalityReport hin = hardy_check_ingoing(s, recs.front().u, recs.back().u);
  CHECK(hin.pass);
  CHECK(hin.margin > 0.0);
  CHECK(iled_check(s).pass);
  CHECK(energy_boundedness_check(s).pass);
  CHECK(boundedness_T_check(s).pass);
  for (double gamma : s.gammas) CHECK(pointwise_from_energy_check(s, gamma).pass);
  CHECK_THROWS_AS(hardy_check_ingoing(s, recs.front().u, recs.back().u, 4.0, false),
                  std::invalid_argument);
}

TEST_CASE("huygens ingoing hardy and zero fields") {
  const NullGrid g = grid(0.1);
  const EnergySeries s = record(make_minkowski(), PotentialSet::zero(), g, bump(), 0);
  const InequalityReport late = hardy_check_ingoing(s, 20.0, 40.0);
  CHECK(late.lhs == 0.0);
  CHECK(late.pass);

  InitialData zero;
  zero.family = InitialData::Family::zero;
  const EnergySeries z = record(make_minkowski(), PotentialSet::inverse_square(0.05), g,
                                zero, 1);
  for (const auto& r : z.records) CHECK(r.E == 0.0);
  const InequalityReport iled = iled_check(z);
  CHECK(iled.pass);
  CHECK(iled.note.rfind("0/0", 0) == 0);
  CHECK(hardy_check_outgoing(z, 1.0, 41.0).pass);
  CHECK(hardy_check_ingoing(z, 1.0, 41.0).pass);
  CHECK(pointwise_from_energy_check(z, 0.4).ratio == 0.0);
}

TEST_CASE("iled constant is stable on reissner-nordstrom") {
  const NullGrid g = grid(0.1, 81.0, 1001.0);
  DiagnosticsSpec spec;
  const EnergySeries s = record(make_reissner_nordstrom(1.0, 0.5), PotentialSet::zero(), g,
                                bump(), 0, spec);
  const InequalityReport rep = iled_check(s);
  CHECK(rep.pass);
  CHECK(rep.details.at("spread") <= 3.0);
}

TEST_CASE("boundedness on synthetic series") {
  std::vector<double> u, decay, grow;
  for (int k = 1; k <= 50; ++k) {
    u.push_back(k);
    decay.push_back(std::pow(k, -3.0));
    grow.push_back(std::pow(k, 2.0));
  }
  const InequalityReport d = energy_boundedness_check(u, decay);
  CHECK(d.pass);
  CHECK(d.ratio <= 1.0);
  CHECK_FALSE(energy_boundedness_check(u, grow).pass);
}

TEST_CASE("gronwall integral") {
  CHECK(gronwall_integral(1.0, 0.0, 1.0, 4.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(gronwall_integral(1.0, 1.0, 1.0, 4.0) ==
        doctest::Approx(2.0 * ((2.0 - std::log(3.0)) - (1.0 - std::log(2.0)))).epsilon(1e-14));
  CHECK(gronwall_integral(1.0, 1.0, 1.0, 4.0) == doctest::Approx(1.18907).epsilon(1e-5));
  CHECK(gronwall_integral(2.0, 0.0, 1.0, 9.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(gronwall_integral(0.0, 1.0, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(gronwall_integral(1.0, 1.0, 2.0, 1.0), std::invalid_argument);

  std::mt19937_64 rng(20261017);
  std::uniform_real_distribution<double> ua(0.05, 5.0), ub(0.0, 10.0), uu(0.01, 50.0);
  for (int k = 0; k < 20; ++k) {
    const double a = ua(rng), b = ub(rng);
    double u1 = uu(rng), u2 = uu(rng);
    if (u1 > u2) std::swap(u1, u2);
    CAPTURE(k);
    const double q = integrate([&](double u) { return 1.0 / (a * std::sqrt(u) + b); }, u1, u2,
                               1e-14);
    CHECK(std::abs(gronwall_integral(a, b, u1, u2) - q) <= 1e-10 * std::max(1.0, q));
  }
}

TEST_CASE("multiplier identities converge at second order") {
  struct Case {
    Identity which;
    int ell;
    double eps;
    double p;
  };
  for (const Case& c : {Case{Identity::rp1, 0, 0.05, 1.0}, Case{Identity::rp2, 0, 0.05, 1.0},
                        Case{Identity::rp2, 2, 0.0, 1.5}}) {
    CAPTURE(c.ell);
    CAPTURE(c.p);
    double rel[2];
    int k = 0;
    for (double h : {0.1, 0.05}) {
      const NullGrid g = grid(h, 21.0, 121.0);
      const PotentialSet ps = PotentialSet::inverse_square(c.eps);
      const ModeField f = evolve_mode(make_minkowski(), ps, g, bump(), c.ell);
      const GridGeometry geo(make_minkowski(), g);
      rel[k++] = multiplier_identity_residual(f, geo, ps, 3.0, 15.0, c.p, c.which).relative;
    }
    CHECK(rel[0] < 1e-3);
    CHECK(rel[0] / rel[1] > 3.2);
    CHECK(rel[0] / rel[1] < 4.8);
  }
  InitialData zero;
  zero.family = InitialData::Family::zero;
  const NullGrid g = grid(0.1, 21.0, 121.0);
  const ModeField f = evolve_mode(make_minkowski(), PotentialSet::zero(), g, zero, 0);
  const GridGeometry geo(make_minkowski(), g);
  CHECK(multiplier_identity_residual(f, geo, PotentialSet::zero(), 3.0, 15.0, 1.0,
                                     Identity::rp1).residual == 0.0);
}

TEST_CASE("stored and streamed diagnostics agree") {
  const NullGrid g = grid(0.1, 21.0, 121.0);
  const PotentialSet ps = PotentialSet::inverse_square(0.05);
  const EnergySeries a = record(make_minkowski(), ps, g, bump(), 1);
  const ModeField f = evolve_mode(make_minkowski(), ps, g, bump(), 1);
  const GridGeometry geo(make_minkowski(), g);
  const EnergySeries b = analyze_field(f, geo, ps, DiagnosticsSpec{});
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].E == b.records[k].E);
    CHECK(a.records[k].Ep == b.records[k].Ep);
    CHECK(a.records[k].phi_R == b.records[k].phi_R);
  }
  CHECK(foliation_energy(f, geo, 5.0) == a.records[4].E);
}
