#include <string>

#include "doctest.h"
#include "nullwave/config.hpp"

using namespace nullwave;

namespace {

const char* kBase = R"toml(
name = "t"
modes = [0, 1]
c_tol = 1.5

[background]
kind = "rn"
mass = 1.0
charge = 0.5

[potential]
epsilon = 0.05
w0 = "sin(u + log(r))"
Q = "0.1 / r"

[grid]
u0 = 1.0
uF = 21.0
v0 = 11.0
vmax = 201.0
h = 0.1
R = 10.0

[data]
family = "gaussian"
center = 20.0
width = 3.0

[diagnostics]
p = [1.0, 2.0]
gammas = [0.2]
sample_du = 0.5

[checks]
h3 = true
region_n_u = 4
hardy_u1 = 2.0

[output]
prefix = "unit"

[[fit]]
quantity = "Ep:2"
claim = "energy"
ell = 1
window = [5.0, 20.0]

[[identity]]
which = "rp2"
ell = 1
p = 1.5
u1 = 3.0
u2 = 9.0
)toml";

void expect_error(const std::string& text, const std::string& fragment) {
  CAPTURE(fragment);
  try {
    RunConfig c = RunConfig::parse(text, "test.toml");
    c.validate();
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("parse reads every table") {
  const RunConfig c = RunConfig::parse(kBase);
  CHECK_NOTHROW(c.validate());
  CHECK(c.name == "t");
  CHECK(c.modes == std::vector<int>{0, 1});
  CHECK(c.c_tol == 1.5);
  CHECK(c.background.kind == "rn");
  CHECK(c.background.charge == 0.5);
  CHECK(c.potential.w0 == "sin(u + log(r))");
  CHECK(c.potential.Q == "0.1 / r");
  CHECK(c.grid.vmax == 201.0);
  CHECK(c.data.family == InitialData::Family::gaussian);
  CHECK(c.diagnostics.p_values == std::vector<double>{1.0, 2.0});
  CHECK(c.diagnostics.sample_du == 0.5);
  CHECK(c.checks.h3);
  CHECK(c.checks.region.n_u == 4);
  CHECK(c.checks.hardy_u1.value() == 2.0);
  CHECK_FALSE(c.checks.hardy_u2.has_value());
  REQUIRE(c.fits.size() == 1);
  CHECK(c.fits[0].quantity == "Ep:2");
  CHECK(c.fits[0].window->second == 20.0);
  REQUIRE(c.identities.size() == 1);
  CHECK(c.identities[0].which == "rp2");
  CHECK(c.output.prefix == "unit");
}

TEST_CASE("round trip is lossless") {
  const RunConfig c = RunConfig::parse(kBase);
  const std::string once = c.serialize();
  const RunConfig d = RunConfig::parse(once);
  CHECK(d.serialize() == once);
  CHECK(d.grid.h == c.grid.h);
  CHECK(d.potential.epsilon == c.potential.epsilon);
  const RunConfig defaults;
  CHECK(RunConfig::parse(defaults.serialize()).serialize() == defaults.serialize());
}

TEST_CASE("validation rejects out-of-range settings") {
  expect_error(replace(kBase, "p = [1.0, 2.0]", "p = [1.0, 3.6]"), "3.5");
  expect_error(replace(kBase, "epsilon = 0.05", "epsilon = 0.6"), "epsilon");
  expect_error(replace(kBase, "epsilon = 0.05", "epsilon = -0.51"), "epsilon");
  expect_error(replace(kBase, "vmax = 201.0", "vmax = 25.0"), "vmax");
  expect_error(replace(kBase, "R = 10.0", "R = 0.2"), "4 h");
  expect_error(replace(kBase, "sin(u + log(r))", "sin(u +"), "w0");
  expect_error(replace(kBase, "modes = [0, 1]", "modes = [1, 1]"), "mode");
  expect_error(replace(kBase, "modes = [0, 1]", "modes = []"), "mode");
  expect_error(replace(kBase, "gammas = [0.2]", "gammas = [0.5]"), "gamma");
  expect_error(replace(kBase, "claim = \"energy\"", "claim = \"decay\""), "claim");
  expect_error(replace(kBase, "quantity = \"Ep:2\"", "quantity = \"Ep:9\""), "quantity");
  expect_error(replace(kBase, "ell = 1\nwindow", "ell = 3\nwindow"), "ell");
  expect_error(replace(kBase, "u2 = 9.0", "u2 = 30.0"), "u2");
  expect_error(replace(kBase, "kind = \"rn\"", "kind = \"kerr\""), "kind");
  expect_error(replace(kBase, "charge = 0.5", "charge = 1.5"), "charge");
  expect_error(replace(kBase, "prefix = \"unit\"", "prefix = \"../x\""), "prefix");
}

TEST_CASE("unknown keys and syntax errors report their position") {
  try {
    RunConfig::parse(replace(kBase, "h = 0.1", "h = 0.1\nstep = 2"), "test.toml");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
    CHECK(e.line() == 22);
  }
  try {
    RunConfig::parse("name = \"x\"\n[grid\nh = 1\n", "bad.toml");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
    CHECK(std::string(e.what()).rfind("bad.toml:2:", 0) == 0);
  }
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/file.toml"), ConfigError);
}
