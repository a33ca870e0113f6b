#include <cmath>

#include "doctest.h"
#include "nullwave/background.hpp"
#include "nullwave/potential.hpp"

using namespace nullwave;

namespace {

PotentialSet with_w0(double eps, CoefficientPtr w0) {
  PotentialSet ps = PotentialSet::inverse_square(eps);
  ps.w0 = std::move(w0);
  return ps;
}

}  // namespace

TEST_CASE("constant expressions fold") {
  CoefficientPtr c = expression_coefficient("2 * 3");
  Vars x;
  x.r = 5.0;
  CHECK(c->value(x) == 6.0);
  CHECK_FALSE(c->depends_on(Var::r));
  CHECK(expression_coefficient("0")->is_zero());
  CHECK(PotentialSet::zero().all_zero());
  CHECK(PotentialSet::inverse_square(0.1).depends_only_on_r());
  CHECK_FALSE(with_w0(0.1, builtin::oscillating()).depends_only_on_r());
}

TEST_CASE("expression partials") {
  CoefficientPtr c = expression_coefficient("sin(u + log(r))");
  Vars x;
  x.u = 1.3;
  x.r = 7.0;
  CHECK(c->partial(Var::u, x) == doctest::Approx(std::cos(1.3 + std::log(7.0))).epsilon(1e-7));
  CHECK(c->partial(Var::r, x) ==
        doctest::Approx(std::cos(1.3 + std::log(7.0)) / 7.0).epsilon(1e-7));
  CHECK(c->partial(Var::v, x) == 0.0);
}

// For any psi, the residual of the radiation-field equation equals
// -(Omega^2 r / 4) times the residual of the original equation for phi = psi / r.
TEST_CASE("tilde transform against a manufactured field") {
  ReissnerNordstrom rn(1.0, 0.5);
  PotentialSet ps;
  ps.epsilon = 0.3;
  ps.w0 = expression_coefficient("sin(u + log(r))");
  ps.w1 = expression_coefficient("0.5 * cos(v)");
  ps.q = expression_coefficient("1 / (1 + r)");
  ps.W0 = expression_coefficient("0.2 / r");
  ps.W1 = expression_coefficient("0.1 * sin(t)");
  ps.Q = expression_coefficient("0.3 / r^2");
  const int ell = 2;
  const double L = ell * (ell + 1.0);

  auto psi = [](double u, double v) { return std::sin(0.3 * u) * std::exp(-0.01 * v * v) + 0.1 * u * v; };
  auto psi_u = [](double u, double v) { return 0.3 * std::cos(0.3 * u) * std::exp(-0.01 * v * v) + 0.1 * v; };
  auto psi_v = [](double u, double v) { return -0.02 * v * std::sin(0.3 * u) * std::exp(-0.01 * v * v) + 0.1 * u; };
  auto psi_uv = [](double u, double v) { return -0.006 * v * std::cos(0.3 * u) * std::exp(-0.01 * v * v) + 0.1; };

  for (double u : {-3.0, 0.5, 4.0}) {
    for (double v : {8.0, 12.5, 30.0}) {
      CAPTURE(u);
      CAPTURE(v);
      const GeometrySample g = rn.sample(u, v);
      const double r = g.r;
      const double p = psi(u, v), pu = psi_u(u, v), pv = psi_v(u, v);
      const double phi = p / r;
      const double phi_u = (pu - g.dr_du * phi) / r;
      const double phi_v = (pv - g.dr_dv * phi) / r;
      const CoefficientValues c = ps.values(u, v, r);
      const double box = -4.0 / (g.omega2 * r) * (psi_uv(u, v) - p * g.d2r_dudv / r) -
                         L * p / (r * r * r);
      const double rhs = ((ps.epsilon * c.w0 + c.W0) * phi + (ps.epsilon * c.w1 + c.W1) * phi_u +
                          (ps.epsilon * c.q + c.Q) * r * phi_v) / (r * r);
      const double orig = box - rhs;

      const TildeCoefficients t = tilde_transform(ps, rn, u, v);
      const double tilde_rhs = -(g.omega2 / 4.0) * L * p / (r * r) +
                               (t.s0 * p + t.s1 * pu + t.sq * r * pv) / (r * r);
      const double tilde = psi_uv(u, v) - tilde_rhs;
      CHECK(tilde == doctest::Approx(-(g.omega2 * r / 4.0) * orig).epsilon(1e-10));
      REQUIRE(t.wtilde0.has_value());
      CHECK(*t.wtilde0 * ps.epsilon == doctest::Approx(t.s0).epsilon(1e-12));
    }
  }
}

TEST_CASE("null derivatives of coefficients") {
  ReissnerNordstrom rn(1.0, 0.5);
  PotentialSet ps = with_w0(0.1, expression_coefficient("sin(u + log(r)) * exp(-t / 50)"));
  const double u = 2.0, v = 20.0, h = 1e-4;
  const GeometrySample g = rn.sample(u, v);
  const double dv = (ps.values(u, v + h, rn.r(u, v + h)).w0 -
                     ps.values(u, v - h, rn.r(u, v - h)).w0) / (2 * h);
  const double du = (ps.values(u + h, v, rn.r(u + h, v)).w0 -
                     ps.values(u - h, v, rn.r(u - h, v)).w0) / (2 * h);
  CHECK(ps.d_dv(u, v, g).w0 == doctest::Approx(dv).epsilon(1e-6));
  CHECK(ps.d_du(u, v, g).w0 == doctest::Approx(du).epsilon(1e-6));
}

TEST_CASE("assumption pattern") {
  const SampleRegion region;
  Minkowski flat;
  ReissnerNordstrom rn(1.0, 0.5);

  CHECK(verify_h0(rn, region).pass);

  const PotentialSet osc = with_w0(0.05, expression_coefficient("sin(u + log(r))"));
  CHECK(verify_h1(osc, flat, region).pass);
  const AssumptionReport h3 = verify_h3(osc, flat, region);
  CHECK_FALSE(h3.pass);
  CHECK_FALSE(h3.clause("r|du_w0|").pass);

  const PotentialSet root = with_w0(0.05, expression_coefficient("r^(1/2)"));
  const AssumptionReport h1 = verify_h1(root, flat, region);
  CHECK_FALSE(h1.pass);
  CHECK_FALSE(h1.clause("|w0|").pass);

  const PotentialSet flat_sq = PotentialSet::inverse_square(0.05);
  CHECK(verify_h1(flat_sq, flat, region).pass);
  CHECK(verify_h3(flat_sq, flat, region).pass);
  CHECK(verify_h1(flat_sq, rn, region).pass);
  CHECK(verify_h1(with_w0(0.05, builtin::decaying(1.0)), flat, region).pass);
  CHECK(verify_h3(with_w0(0.05, builtin::decaying(1.0)), flat, region).pass);
}

TEST_CASE("non-finite coefficients fail with the offending point") {
  const PotentialSet bad = with_w0(0.05, expression_coefficient("log(u - 5)"));
  const AssumptionReport rep = verify_h1(bad, Minkowski(), SampleRegion{});
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.failure.empty());
}
