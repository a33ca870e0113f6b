#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nullwave/ratefit.hpp"

using namespace nullwave;

namespace {

struct Series {
  std::vector<double> u, y;
};

Series make(double (*f)(double), double lo = 1.0, double hi = 1000.0, int n = 400) {
  Series s;
  for (int k = 0; k < n; ++k) {
    const double u = lo * std::pow(hi / lo, k / (n - 1.0));
    s.u.push_back(u);
    s.y.push_back(f(u));
  }
  return s;
}

}  // namespace

TEST_CASE("exact power law") {
  const Series s = make([](double u) { return 7.0 * std::pow(u, -3.0); });
  const FitResult f = fit_exponent(s.u, s.y);
  CHECK(std::abs(f.exponent + 3.0) <= 1e-12);
  CHECK(f.stderr_ <= 1e-12);
  CHECK_FALSE(f.inconclusive);
  CHECK(f.u_lo == doctest::Approx(100.0).epsilon(0.02));
  CHECK(f.u_hi == doctest::Approx(1000.0));
  const FitResult w = fit_exponent(s.u, s.y, std::make_pair(2.0, 50.0));
  CHECK(std::abs(w.exponent + 3.0) <= 1e-12);
  CHECK(w.u_lo >= 2.0);
  CHECK(w.u_hi <= 50.0);
}

TEST_CASE("log-periodic modulation") {
  const Series s =
      make([](double u) { return std::pow(u, -3.0) * (1.0 + 0.1 * std::sin(std::log(u))); });
  const FitResult f = fit_exponent(s.u, s.y, std::make_pair(1.0, 1000.0));
  CHECK(std::abs(f.exponent + 3.0) <= 0.1);
  CHECK(f.plateau_quality > 0.01);
  CHECK(f.plateau_quality < kPlateauLimit);
  CHECK_FALSE(f.inconclusive);
}

TEST_CASE("exponential decay is not a power law") {
  const Series s = make([](double u) { return std::exp(-u); }, 1.0, 100.0, 200);
  const FitResult f = fit_exponent(s.u, s.y, std::make_pair(1.0, 100.0));
  CHECK(f.inconclusive);
  CHECK(f.local_min < f.local_max);
}

TEST_CASE("scaling invariance") {
  const Series s =
      make([](double u) { return std::pow(u, -2.2) * (1.0 + 0.3 / u); });
  Series t = s;
  for (double& y : t.y) y *= 1234.5;
  const FitResult a = fit_exponent(s.u, s.y);
  const FitResult b = fit_exponent(t.u, t.y);
  CHECK(std::abs(a.exponent - b.exponent) <= 1e-12);
}

TEST_CASE("fit errors") {
  std::vector<double> u{1, 2, 3, 4, 5}, y{1, 1, 1, 1, 1};
  CHECK_THROWS_AS(fit_exponent(u, y), std::invalid_argument);
  const Series s = make([](double u) { return std::pow(u, -1.0); });
  Series z = s;
  z.y.back() = 0.0;
  CHECK_THROWS_AS(fit_exponent(z.u, z.y), std::invalid_argument);
  CHECK_THROWS_AS(fit_exponent(s.u, s.y, std::make_pair(5.0, 2.0)), std::invalid_argument);
  CHECK_THROWS_AS(parse_claim("decay"), std::invalid_argument);
}

TEST_CASE("claims") {
  CHECK(parse_claim("T-energy") == Claim::T_energy);
  CHECK(parse_claim("higher_modes") == Claim::higher_modes);
  CHECK(parse_claim("sharp") == Claim::sharp_pointwise);
  CHECK(parse_claim("Sharp-Radiation") == Claim::sharp_radiation);
  for (Claim c : {Claim::energy, Claim::radiation, Claim::pointwise_r, Claim::pointwise_bulk,
                  Claim::T_energy, Claim::higher_modes, Claim::sharp_pointwise,
                  Claim::sharp_radiation}) {
    CHECK(parse_claim(claim_name(c)) == c);
  }
  CHECK(theorem_target(Claim::energy, 0.05) == -3.0);
  CHECK(theorem_target(Claim::radiation, 0.05) == -1.0);
  CHECK(theorem_target(Claim::pointwise_r, 0.05) == -2.0);
  CHECK(theorem_target(Claim::T_energy, 0.05) == -5.0);
  CHECK(theorem_target(Claim::higher_modes, 0.05) == -4.0);
  CHECK(theorem_target(Claim::sharp_pointwise, 0.05) == doctest::Approx(-2.0954).epsilon(1e-4));
  CHECK(theorem_target(Claim::sharp_radiation, 0.05) == doctest::Approx(-1.0477).epsilon(1e-4));
  CHECK(theorem_target(Claim::sharp_pointwise, 0.2) == doctest::Approx(-2.3416).epsilon(1e-4));
  CHECK(theorem_target(Claim::sharp_radiation, 0.2) == doctest::Approx(-1.1708).epsilon(1e-4));
}

TEST_CASE("theorem comparison examples") {
  FitResult f;
  f.exponent = -3.05;
  CHECK(compare_to_theorem(f, Claim::energy, 0.05).verdict == Verdict::meets_bound);
  f.exponent = -2.34;
  CHECK(compare_to_theorem(f, Claim::sharp_pointwise, 0.2).verdict ==
        Verdict::saturates_sharp);
  f.exponent = -2.0;
  CHECK(compare_to_theorem(f, Claim::energy, 0.01).verdict == Verdict::fails);
  f.exponent = -2.0;
  CHECK(compare_to_theorem(f, Claim::sharp_pointwise, 0.2).verdict == Verdict::fails);
  const FitResult g = compare_to_theorem(f, Claim::energy, 0.04, 2.0);
  CHECK(g.tolerance == doctest::Approx(0.4));
  CHECK(g.target == -3.0);
  CHECK(verdict_name(Verdict::meets_bound) == "meets-bound");
  CHECK(verdict_name(Verdict::saturates_sharp) == "saturates-sharp");
}

TEST_CASE("verdicts are monotone in the exponent") {
  for (Claim c : {Claim::energy, Claim::radiation, Claim::T_energy, Claim::higher_modes}) {
    bool seen_fail = false;
    for (double e = -8.0; e <= 1.0; e += 0.01) {
      FitResult f;
      f.exponent = e;
      f.stderr_ = 0.01;
      const Verdict v = compare_to_theorem(f, c, 0.05).verdict;
      if (v == Verdict::fails) seen_fail = true;
      CHECK_FALSE((seen_fail && v == Verdict::meets_bound));
    }
    CHECK(seen_fail);
  }
}

TEST_CASE("fits without a plateau") {
  FitResult f;
  f.exponent = -3.5;
  f.inconclusive = true;
  f.local_min = -4.5;
  f.local_max = -3.1;
  CHECK(compare_to_theorem(f, Claim::energy, 0.05).verdict == Verdict::meets_bound);
  f.local_max = -2.0;
  CHECK(compare_to_theorem(f, Claim::energy, 0.05).verdict == Verdict::inconclusive);
  f.local_min = -2.5;
  f.local_max = -1.0;
  f.exponent = -2.0;
  CHECK(compare_to_theorem(f, Claim::energy, 0.05).verdict == Verdict::fails);
  f.local_min = -2.40;
  f.local_max = -2.30;
  f.exponent = -2.34;
  CHECK(compare_to_theorem(f, Claim::sharp_pointwise, 0.2).verdict == Verdict::inconclusive);
}
