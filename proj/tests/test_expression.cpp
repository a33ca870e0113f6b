#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "nullwave/expression.hpp"

using namespace nullwave;

namespace {

Vars at(double u, double v) {
  Vars x;
  x.u = u;
  x.v = v;
  x.r = v - u;
  x.t = u + v;
  return x;
}

double eval(const std::string& s, double u = 1.5, double v = 7.25) {
  return Expression::parse(s).evaluate(at(u, v));
}

const std::vector<std::string> kCorpus = {
    "0", "1", "-1", "2.5", "1e-3", "3.25E+2", ".5", "u", "v", "r", "t",
    "-u", "--u", "u + v", "u - v", "u * v", "u / v", "u ^ 2", "r^-2",
    "r^-0.5", "2^3^2", "-r^2", "(-r)^2", "1 + 2 * 3", "(1 + 2) * 3",
    "1 - 2 - 3", "1 - (2 - 3)", "8 / 4 / 2", "8 / (4 / 2)", "sin(u)",
    "cos(v)", "exp(-r)", "log(r)", "sqrt(r)", "tanh(t)", "sin(u + log(r))",
    "sin(log(u) + log(r))", "cos(log(r)) / (1 + r)^2", "r^(1/2)",
    "exp(-(r - 10)^2 / 4)", "1 / r", "1 / r^2", "u * sin(v) - v * cos(u)",
    "sqrt(u*u + v*v)", "tanh(r - 5) * 0.5 + 0.5", "(u)", "((r))",
    "2 * -u", "u * -2", "r ^ -1 * 3", "-(u + v) * (u - v)",
    "log(exp(2))", "sin(u)^2 + cos(u)^2", "1e10 * r^-10", "t - u - v",
    "exp(log(r) * 1.5)", "   r  +  1  ", "0.1 * sin(u + log(r)) / r",
};

}  // namespace

TEST_CASE("expression round trip over the corpus") {
  CHECK(kCorpus.size() >= 50);
  for (const auto& s : kCorpus) {
    CAPTURE(s);
    const Expression e = Expression::parse(s);
    const Expression back = Expression::parse(e.to_string());
    CHECK(back.same_tree(e));
    CHECK(back.to_string() == e.to_string());
    for (double u : {0.5, 2.0}) {
      for (double v : {3.0, 40.0}) {
        const double a = e.evaluate(at(u, v));
        const double b = back.evaluate(at(u, v));
        CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
      }
    }
  }
}

TEST_CASE("expression values") {
  CHECK(eval("1 + 2 * 3") == 7.0);
  CHECK(eval("1 - 2 - 3") == -4.0);
  CHECK(eval("8 / 4 / 2") == 1.0);
  CHECK(eval("2^3^2") == 64.0);  // left-associative
  CHECK(eval("-r^2") == -(5.75 * 5.75));
  CHECK(eval("r^-2") == doctest::Approx(1.0 / (5.75 * 5.75)));
  CHECK(eval("t") == 8.75);
  CHECK(eval("sin(u)^2 + cos(u)^2") == doctest::Approx(1.0));
  CHECK(eval("sin(u + log(r))") == doctest::Approx(std::sin(1.5 + std::log(5.75))));
  CHECK(eval("sqrt(u*u + v*v)") == doctest::Approx(std::hypot(1.5, 7.25)));
}

TEST_CASE("expression variable use") {
  const Expression e = Expression::parse("sin(u + log(r))");
  CHECK(e.uses(Var::u));
  CHECK(e.uses(Var::r));
  CHECK_FALSE(e.uses(Var::v));
  CHECK_FALSE(e.uses(Var::t));
  CHECK(Expression::parse("2 * 3 + 1").is_constant());
  CHECK(Expression().evaluate(at(1, 2)) == 0.0);
  CHECK(Expression::constant(4.5).evaluate(at(1, 2)) == 4.5);
}

TEST_CASE("expression errors carry the position") {
  struct Bad {
    std::string text;
    std::size_t position;
  };
  const std::vector<Bad> bad = {
      {"", 0}, {"1 +", 3}, {"(u", 2}, {"u)", 1}, {"foo(u)", 0},
      {"sin u", 4}, {"2 ** 3", 3}, {"x + 1", 0}, {"1 2", 2},
  };
  for (const auto& b : bad) {
    CAPTURE(b.text);
    try {
      Expression::parse(b.text);
      FAIL("no error");
    } catch (const ParseError& e) {
      CHECK(e.position() == b.position);
    }
  }
}
