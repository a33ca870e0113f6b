#include <cmath>

#include "doctest.h"
#include "nullwave/background.hpp"

using namespace nullwave;

TEST_CASE("minkowski geometry") {
  Minkowski m;
  const GeometrySample g = m.sample(3.0, 10.0);
  CHECK(g.r == 7.0);
  CHECK(g.omega2 == 4.0);
  CHECK(g.dr_du == -1.0);
  CHECK(g.dr_dv == 1.0);
  CHECK(g.d2r_dudv == 0.0);
  CHECK(m.center_rho().value() == 0.0);
}

TEST_CASE("tortoise round trip") {
  for (double e : {0.0, 0.5, 0.9, 1.0}) {
    CAPTURE(e);
    ReissnerNordstrom rn(1.0, e);
    CHECK(rn.tortoise(3.0) == doctest::Approx(3.0).epsilon(1e-14));
    for (double x : {1e-6, 1e-3, 0.1, 1.0, 5.0, 100.0, 1e4}) {
      const double r = rn.r_plus() + x;
      const double back = rn.radius(rn.tortoise(r));
      CHECK(std::abs(back - r) <= 1e-10 * r);
    }
    for (double rs : {-20.0, -5.0, 0.0, 3.0, 50.0, 1e5}) {
      CHECK(std::abs(rn.tortoise(rn.radius(rs)) - rs) <= 1e-9 * (1.0 + std::abs(rs)));
    }
  }
}

TEST_CASE("tortoise derivative is the inverse lapse") {
  ReissnerNordstrom rn(1.0, 0.5);
  for (double r : {2.0, 3.0, 10.0, 80.0}) {
    const double h = 1e-5 * r;
    const double d = (rn.tortoise(r + h) - rn.tortoise(r - h)) / (2 * h);
    CHECK(d == doctest::Approx(1.0 / rn.lapse(r)).epsilon(1e-8));
  }
}

TEST_CASE("reissner-nordstrom null derivatives") {
  ReissnerNordstrom rn(1.0, 0.5);
  const double u = 2.0, v = 14.0, h = 1e-4;
  const GeometrySample g = rn.sample(u, v);
  CHECK(g.omega2 == doctest::Approx(4.0 * rn.lapse(g.r)).epsilon(1e-12));
  CHECK(g.dr_dv == doctest::Approx(rn.lapse(g.r)).epsilon(1e-12));
  CHECK(g.dr_du == doctest::Approx(-rn.lapse(g.r)).epsilon(1e-12));
  const double drv = (rn.r(u, v + h) - rn.r(u, v - h)) / (2 * h);
  CHECK(g.dr_dv == doctest::Approx(drv).epsilon(1e-7));
  const double duv = (rn.dr_dv(u + h, v) - rn.dr_dv(u - h, v)) / (2 * h);
  CHECK(g.d2r_dudv == doctest::Approx(duv).epsilon(1e-6));
  const double dvv = (rn.dr_dv(u, v + h) - rn.dr_dv(u, v - h)) / (2 * h);
  CHECK(g.d2r_dvdv == doctest::Approx(dvv).epsilon(1e-6));
  const double duvv = (rn.d2r_dvdv(u + h, v) - rn.d2r_dvdv(u - h, v)) / (2 * h);
  CHECK(g.d3r_dudvdv == doctest::Approx(duvv).epsilon(1e-5));
  const double dov = (rn.omega2(u, v + h) - rn.omega2(u, v - h)) / (2 * h);
  CHECK(g.domega2_dv == doctest::Approx(dov).epsilon(1e-7));
}

TEST_CASE("reissner-nordstrom rejects bad parameters") {
  CHECK_THROWS_AS(ReissnerNordstrom(1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(ReissnerNordstrom(-1.0, 0.0), std::invalid_argument);
  ReissnerNordstrom rn(1.0, 0.0);
  CHECK_THROWS_AS(rn.tortoise(1.5), std::domain_error);
}

TEST_CASE("H0 holds on minkowski and reissner-nordstrom") {
  SampleRegion region;
  CHECK(verify_h0(Minkowski(), region).pass);
  const AssumptionReport rn = verify_h0(ReissnerNordstrom(1.0, 0.5), region);
  CHECK(rn.pass);
  for (const auto& c : rn.clauses) {
    CAPTURE(c.name);
    CHECK(c.finite);
    CHECK(c.sup < 100.0);
  }
}

TEST_CASE("H0 flags a lapse that does not approach flat space") {
  auto sampler = [](double u, double v) {
    GeometrySample g;
    g.r = v - u;
    g.dr_dv = 1.0;
    g.dr_du = -1.0;
    g.omega2 = 4.0 + 0.5 * std::sin(g.r);
    g.domega2_dv = 0.5 * std::cos(g.r);
    g.domega2_du = -g.domega2_dv;
    return g;
  };
  SampledBackground bad("wavy", sampler);
  const AssumptionReport rep = verify_h0(bad, SampleRegion{});
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.clause("r|omega2-4|").pass);
}
