#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "nullwave/runner.hpp"

using namespace nullwave;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"toml(
name = "small"
modes = [0, 1]

[background]
kind = "minkowski"

[potential]
epsilon = 0.05
w0 = "1"

[grid]
u0 = -9.0
uF = 21.0
v0 = 1.0
vmax = 401.0
h = 0.1
R = 10.0

[data]
family = "compact"
center = 3.0
width = 2.0

[diagnostics]
sample_du = 0.25

[output]
prefix = "small"

[[fit]]
quantity = "E"
claim = "energy"
ell = 0
)toml";

RunConfig small() {
  RunConfig c = RunConfig::parse(kSmall, "small.toml");
  c.validate();
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("nullwave_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("series CSV parses back to the recorded values") {
  const RunResult r = execute_run(small());
  const ModeResult& m = r.mode(0);
  const CsvSeries cs = parse_series_csv(series_csv(m.series, r.config));
  CHECK(cs.names == series_columns(m.series));
  const auto& u = cs.column("u");
  const auto& e = cs.column("E");
  REQUIRE(u.size() == m.series.records.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    CHECK(u[k] == m.series.records[k].u);
    CHECK(e[k] == m.series.records[k].E);
  }
  CHECK_FALSE(cs.has("nonexistent"));
  CHECK_THROWS(cs.column("nonexistent"));
}

TEST_CASE("malformed CSV is rejected") {
  CHECK_THROWS(parse_series_csv(""));
  CHECK_THROWS(parse_series_csv("# nullwave-series v1\nu,E\n1,2\n3\n"));
  CHECK_THROWS(parse_series_csv("# nullwave-series v1\nu,E\n1,abc\n"));
}

TEST_CASE("outputs are byte identical across runs") {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  RunConfig c = small();
  c.output.dir = a.string();
  const auto pa = write_run_outputs(execute_run(c));
  c.output.dir = b.string();
  const auto pb = write_run_outputs(execute_run(c));
  REQUIRE(pa.size() == pb.size());
  REQUIRE(pa.size() == 3);
  for (std::size_t k = 0; k < pa.size(); ++k) {
    CHECK(fs::path(pa[k]).filename() == fs::path(pb[k]).filename());
    CHECK(slurp(pa[k]) == slurp(pb[k]));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("environment variable overrides the output directory") {
  const fs::path d = fresh_dir("env");
  RunConfig c = small();
  c.output.dir = "ignored";
  ::setenv("NULLWAVE_OUTPUT_DIR", d.string().c_str(), 1);
  CHECK(resolve_output_dir(c) == d.string());
  const auto paths = write_run_outputs(execute_run(c));
  ::unsetenv("NULLWAVE_OUTPUT_DIR");
  for (const auto& p : paths) {
    CHECK(fs::path(p).parent_path() == d);
    CHECK(fs::exists(p));
  }
  CHECK(resolve_output_dir(c) == "ignored");
  fs::remove_all(d);
}

TEST_CASE("sweep deduplicates and needs two values") {
  RunConfig c = small();
  c.modes = {0};
  const SweepResult s = run_sweep(c, {0.05, 0.1, 0.05});
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("duplicate") != std::string::npos);
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].epsilon == 0.05);
  CHECK(s.points[1].epsilon == 0.1);
  for (const auto& p : s.points) CHECK(p.ok);
  CHECK(s.points[0].result.config.output.prefix != s.points[1].result.config.output.prefix);
  CHECK_FALSE(sweep_table_csv(s).empty());
  CHECK_THROWS_AS(run_sweep(c, {0.05, 0.05}), ConfigError);
  CHECK_THROWS_AS(run_sweep(c, {0.05}), ConfigError);
}

TEST_CASE("tail gate drops records whose truncation estimate is too large") {
  std::vector<double> u, y, tail;
  for (int k = 0; k < 60; ++k) {
    const double x = 10.0 * std::pow(10.0, k / 59.0);
    u.push_back(x);
    y.push_back(std::pow(x, -3.0));
    tail.push_back(0.0);
  }
  FitSpec spec;
  spec.quantity = "E";
  spec.claim = "energy";
  spec.tail_gate = 0.01;
  const FitOutcome clean = fit_series(u, y, tail, spec, 0.05, 1.0);
  REQUIRE(clean.error.empty());
  CHECK(clean.fit.exponent == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(clean.fit.points == 60);

  // Corrupt the last third, but flag it with a large tail.
  for (int k = 40; k < 60; ++k) {
    y[k] = 1.0;
    tail[k] = 0.5;
  }
  const FitOutcome gated = fit_series(u, y, tail, spec, 0.05, 1.0);
  REQUIRE(gated.error.empty());
  CHECK(gated.fit.points == 40);
  CHECK(gated.fit.exponent == doctest::Approx(-3.0).epsilon(1e-9));

  for (auto& t : tail) t = 1.0;
  const FitOutcome none = fit_series(u, y, tail, spec, 0.05, 1.0);
  CHECK_FALSE(none.error.empty());
  CHECK_FALSE(none.pass());
}

TEST_CASE("report JSON carries the fits and checks") {
  const RunResult r = execute_run(small());
  const auto j = to_json(r);
  CHECK(j.contains("fits"));
  CHECK(j["fits"].size() == 1);
  INFO(j["fits"][0].dump());
  CHECK(j["fits"][0].contains("local_slope_min"));
  CHECK(j.contains("modes"));
}
