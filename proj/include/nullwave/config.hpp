#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nullwave/background.hpp"
#include "nullwave/diagnostics.hpp"
#include "nullwave/evolve.hpp"
#include "nullwave/potential.hpp"

namespace nullwave {

/// Invalid or unreadable configuration. line/column are 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct BackgroundSpec {
  std::string kind = "minkowski";  // minkowski | rn
  double mass = 1.0;
  double charge = 0.0;

  BackgroundPtr make() const;
};

/// epsilon and the six coefficient expressions in u, v, r, t.
struct PotentialSpec {
  double epsilon = 0.0;
  std::string w0 = "0", w1 = "0", q = "0";
  std::string W0 = "0", W1 = "0", Q = "0";

  PotentialSet make() const;
};

struct FitSpec {
  /// E, E_T, Ep:<p>, Ep_Psi1:<p>, Ep_Theta0:<p>, phi_R, psi_I, psi_I_extrap.
  std::string quantity = "E";
  std::string claim = "energy";
  int ell = 0;
  std::optional<std::pair<double, double>> window;
  /// Records whose tail estimate exceeds this fraction are dropped.
  double tail_gate = 0.01;
  std::optional<double> sharp_tol;
};

struct IdentitySpec {
  std::string which = "rp1";
  int ell = 0;
  double p = 1.0;
  double u1 = 0.0;
  double u2 = 0.0;
};

struct ChecksSpec {
  bool h0 = true;
  bool h1 = true;
  bool h3 = false;
  SampleRegion region;
  double assumption_ceiling = 100.0;
  double growth_limit = 1.25;

  bool hardy = true;
  bool hardy_ingoing = true;
  bool iled = true;
  bool boundedness = true;
  bool boundedness_T = true;
  bool pointwise = true;
  double hardy_C1 = 4.0;
  double hardy_C2 = 2.0;
  double hardy_ingoing_constant = 4.0;
  double iled_constant = 100.0;
  double boundedness_ceiling = 10.0;
  double boundedness_T_ceiling = 10.0;
  double pointwise_constant = 10.0;
  /// Region D_R(u1, u2) of the Hardy checks; defaults to the recorded range.
  std::optional<double> hardy_u1, hardy_u2;
};

struct OutputSpec {
  std::string dir = "out";
  std::string prefix = "run";
  bool field_dump = false;
};

struct RunConfig {
  std::string name = "run";
  BackgroundSpec background;
  PotentialSpec potential;
  NullGrid grid;
  InitialData data;
  std::vector<int> modes{0};
  DiagnosticsSpec diagnostics;
  ChecksSpec checks;
  std::vector<FitSpec> fits;
  std::vector<IdentitySpec> identities;
  OutputSpec output;
  double c_tol = 1.0;

  /// Throws ConfigError with the position of TOML syntax errors.
  static RunConfig parse(const std::string& text,
                         const std::string& source = "<config>");
  static RunConfig load(const std::string& path);
  std::string serialize() const;
  /// Throws ConfigError unless 0 <= p <= 3.5, |epsilon| <= 0.5, the grid
  /// satisfies the NullGrid invariants and every expression parses.
  void validate() const;
};

}  // namespace nullwave
