#include <cmath>
#include <vector>

#include "doctest.h"
#include "nullwave/background.hpp"
#include "nullwave/evolve.hpp"
#include "nullwave/potential.hpp"

using namespace nullwave;

namespace {

NullGrid small_grid(double h = 0.1) {
  NullGrid g;
  g.u0 = 1.0;
  g.uF = 31.0;
  g.v0 = 11.0;
  g.vmax = 101.0;
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

class Capture : public RowSink {
 public:
  explicit Capture(int nv) : nv_(nv) {}
  void row(int, const double* psi) override { rows.emplace_back(psi, psi + nv_ + 1); }
  std::vector<std::vector<double>> rows;

 private:
  int nv_;
};

}  // namespace

TEST_CASE("grid invariants") {
  NullGrid g = small_grid();
  CHECK_NOTHROW(g.validate());
  CHECK(g.nu() == 300);
  CHECK(g.nv() == 900);
  CHECK(g.jR(0) == 0);
  CHECK(g.row_of(2.0) == 10);
  NullGrid bad = g;
  bad.R = 0.3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.v0 = 12.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.vmax = 35.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(g.refined(2).nu() == 600);
}

TEST_CASE("flat l = 0 transport is exact") {
  const NullGrid g = small_grid(0.05);
  const InitialData d = bump();
  const ModeField f = evolve_mode(make_minkowski(), PotentialSet::zero(), g, d, 0);
  double err = 0.0;
  for (int i = 0; i <= f.nu(); ++i) {
    for (int j = f.jmin(i); j <= f.nv(); ++j) {
      const double exact = d.outgoing(g.v(j)) - d.outgoing(g.u(i));
      err = std::max(err, std::abs(f(i, j) - exact));
    }
  }
  CHECK(err <= 1e-12);
}

TEST_CASE("streaming and stored evolution agree") {
  const NullGrid g = small_grid();
  Evolver e(make_reissner_nordstrom(1.0, 0.5), PotentialSet::inverse_square(0.05), g,
            bump(), 1);
  const ModeField f = e.run_full();
  Evolver e2(make_reissner_nordstrom(1.0, 0.5), PotentialSet::inverse_square(0.05), g,
             bump(), 1);
  Capture cap(g.nv());
  e2.run(cap);
  REQUIRE(cap.rows.size() == static_cast<std::size_t>(g.nu() + 1));
  bool same = true;
  for (int i = 0; i <= g.nu(); ++i) {
    for (int j = f.jmin(i); j <= g.nv(); ++j) same = same && cap.rows[i][j] == f(i, j);
  }
  CHECK(same);
}

TEST_CASE("evolution is linear") {
  const NullGrid g = small_grid();
  const PotentialSet ps = PotentialSet::inverse_square(0.05);
  const InitialData a = bump(15.0, 2.0);
  const InitialData b = bump(30.0, 5.0);
  InitialData c;
  c.outgoing_override = [&](double v) { return 2.0 * a.outgoing(v) - 0.5 * b.outgoing(v); };
  const ModeField fa = evolve_mode(make_minkowski(), ps, g, a, 1);
  const ModeField fb = evolve_mode(make_minkowski(), ps, g, b, 1);
  const ModeField fc = evolve_mode(make_minkowski(), ps, g, c, 1);
  double err = 0.0, scale = 0.0;
  for (int i = 0; i <= g.nu(); ++i) {
    for (int j = fa.jmin(i); j <= g.nv(); ++j) {
      err = std::max(err, std::abs(fc(i, j) - (2.0 * fa(i, j) - 0.5 * fb(i, j))));
      scale = std::max(scale, std::abs(fc(i, j)));
    }
  }
  CHECK(err <= 1e-12 * scale);
}

TEST_CASE("domain of dependence") {
  const NullGrid g = small_grid();
  const PotentialSet ps = PotentialSet::inverse_square(0.2);
  const InitialData a = bump(15.0, 2.0);
  InitialData b = a;
  const double vcut = 60.0;
  b.outgoing_override = [&](double v) {
    return a.outgoing(v) + (v > vcut ? std::sin(v) : 0.0);
  };
  const ModeField fa = evolve_mode(make_minkowski(), ps, g, a, 2);
  const ModeField fb = evolve_mode(make_minkowski(), ps, g, b, 2);
  const int jcut = g.column_of(vcut);
  bool inside = true, changed = false;
  for (int i = 0; i <= g.nu(); ++i) {
    for (int j = fa.jmin(i); j <= g.nv(); ++j) {
      if (j <= jcut) inside = inside && fa(i, j) == fb(i, j);
      else changed = changed || fa(i, j) != fb(i, j);
    }
  }
  CHECK(inside);
  CHECK(changed);
}

TEST_CASE("evolution is deterministic") {
  const NullGrid g = small_grid();
  PotentialSet ps = PotentialSet::inverse_square(0.05);
  ps.w0 = builtin::oscillating();
  const ModeField f1 = evolve_mode(make_minkowski(), ps, g, bump(), 0);
  const ModeField f2 = evolve_mode(make_minkowski(), ps, g, bump(), 0);
  bool same = true;
  for (int i = 0; i <= g.nu(); ++i) {
    for (int j = 0; j <= g.nv(); ++j) same = same && f1(i, j) == f2(i, j);
  }
  CHECK(same);
}

TEST_CASE("second-order convergence") {
  NullGrid g = small_grid(0.1);
  g.uF = 21.0;
  g.vmax = 61.0;
  SUBCASE("flat l = 1") {
    const ConvergenceReport r =
        convergence_order(make_minkowski(), PotentialSet::zero(), g, bump(), 1);
    CHECK_FALSE(r.inconclusive);
    CHECK(r.order >= 1.8);
    CHECK(r.order <= 2.2);
  }
  SUBCASE("reissner-nordstrom inverse square") {
    const ConvergenceReport r = convergence_order(
        make_reissner_nordstrom(1.0, 0.5), PotentialSet::inverse_square(0.05), g, bump(), 0);
    CHECK_FALSE(r.inconclusive);
    CHECK(r.order >= 1.8);
    CHECK(r.order <= 2.2);
  }
  SUBCASE("exact scheme is inconclusive") {
    const ConvergenceReport r =
        convergence_order(make_minkowski(), PotentialSet::zero(), g, bump(), 0);
    CHECK(r.inconclusive);
  }
}

TEST_CASE("non-finite values abort with the cell") {
  PotentialSet ps = PotentialSet::zero();
  ps.W0 = expression_coefficient("1e300 * r^10");
  try {
    evolve_mode(make_minkowski(), ps, small_grid(), bump(), 0);
    FAIL("no abort");
  } catch (const NumericalAbort& e) {
    CHECK(e.row() >= 0);
    CHECK(e.column() >= 0);
  }
}
