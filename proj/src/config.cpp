#include "nullwave/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nullwave/expression.hpp"
#include "nullwave/ratefit.hpp"
#include "toml.hpp"

namespace nullwave {

BackgroundPtr BackgroundSpec::make() const {
  if (kind == "minkowski") return make_minkowski();
  if (kind == "rn") return make_reissner_nordstrom(mass, charge);
  throw ConfigError("background.kind must be 'minkowski' or 'rn', got '" +
                    kind + "'");
}

PotentialSet PotentialSpec::make() const {
  PotentialSet ps;
  ps.epsilon = epsilon;
  ps.w0 = expression_coefficient(w0);
  ps.w1 = expression_coefficient(w1);
  ps.q = expression_coefficient(q);
  ps.W0 = expression_coefficient(W0);
  ps.W1 = expression_coefficient(W1);
  ps.Q = expression_coefficient(Q);
  return ps;
}

namespace {

/// Reads one table, rejecting keys that nobody asked for.
class Reader {
 public:
  Reader(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

  bool present() const { return t_ != nullptr; }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n->value_exact<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, int>) {
      if (auto v = n->value_exact<int64_t>()) {
        out = static_cast<int>(*v);
        return;
      }
    } else if constexpr (std::is_same_v<T, double>) {
      if (auto v = n->value<double>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = n->value_exact<std::string>()) {
        out = *v;
        return;
      }
    }
    fail(key, "has the wrong type", n);
  }

  template <class T>
  void get_opt(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!t_ || !t_->get(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  template <class T>
  void get_list(const char* key, std::vector<T>& out) {
    seen_.insert(key);
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    const toml::array* a = n->as_array();
    if (!a) fail(key, "must be an array", n);
    std::vector<T> vals;
    for (const toml::node& e : *a) {
      if constexpr (std::is_same_v<T, int>) {
        auto v = e.value_exact<int64_t>();
        if (!v) fail(key, "must hold integers", &e);
        vals.push_back(static_cast<int>(*v));
      } else {
        auto v = e.value<double>();
        if (!v) fail(key, "must hold numbers", &e);
        vals.push_back(*v);
      }
    }
    out = std::move(vals);
  }

  void get_window(const char* key, std::optional<std::pair<double, double>>& out) {
    std::vector<double> w;
    get_list(key, w);
    if (t_ && t_->get(key)) {
      if (w.size() != 2) fail(key, "must be [lo, hi]", t_->get(key));
      out = std::make_pair(w[0], w[1]);
    }
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      if (!seen_.count(std::string(k.str()))) {
        const auto& s = v.source();
        throw ConfigError("unknown key '" + path_ + "." + std::string(k.str()) +
                              "'",
                          static_cast<int>(s.begin.line),
                          static_cast<int>(s.begin.column));
      }
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const std::string& what,
                         const toml::node* n) const {
    const auto& s = n->source();
    throw ConfigError(path_ + "." + key + " " + what,
                      static_cast<int>(s.begin.line),
                      static_cast<int>(s.begin.column));
  }

  const toml::table* t_;
  std::string path_;
  std::set<std::string> seen_;
};

const toml::table* subtable(const toml::table& root, const char* key) {
  const toml::node* n = root.get(key);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) {
    const auto& s = n->source();
    throw ConfigError(std::string(key) + " must be a table",
                      static_cast<int>(s.begin.line),
                      static_cast<int>(s.begin.column));
  }
  return t;
}

std::vector<const toml::table*> table_array(const toml::table& root,
                                            const char* key) {
  std::vector<const toml::table*> out;
  const toml::node* n = root.get(key);
  if (!n) return out;
  const toml::array* a = n->as_array();
  if (!a) throw ConfigError(std::string(key) + " must be an array of tables");
  for (const toml::node& e : *a) {
    const toml::table* t = e.as_table();
    if (!t) throw ConfigError(std::string(key) + " must be an array of tables");
    out.push_back(t);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& s = e.source();
    std::ostringstream os;
    os << source << ":" << s.begin.line << ":" << s.begin.column << ": "
       << e.description();
    throw ConfigError(os.str(), static_cast<int>(s.begin.line),
                      static_cast<int>(s.begin.column));
  }

  RunConfig c;
  {
    Reader top(&root, "");
    top.get("name", c.name);
    top.get("c_tol", c.c_tol);
    top.get_list("modes", c.modes);
    static const std::set<std::string> known{
        "name", "c_tol", "modes", "background", "potential", "grid", "data",
        "diagnostics", "checks", "output", "fit", "identity"};
    for (const auto& [k, v] : root) {
      const std::string key(k.str());
      if (!known.count(key)) {
        const auto& s = v.source();
        throw ConfigError("unknown key '" + key + "'",
                          static_cast<int>(s.begin.line),
                          static_cast<int>(s.begin.column));
      }
    }
  }
  {
    Reader r(subtable(root, "background"), "background");
    r.get("kind", c.background.kind);
    r.get("mass", c.background.mass);
    r.get("charge", c.background.charge);
    r.finish();
  }
  {
    Reader r(subtable(root, "potential"), "potential");
    r.get("epsilon", c.potential.epsilon);
    r.get("w0", c.potential.w0);
    r.get("w1", c.potential.w1);
    r.get("q", c.potential.q);
    r.get("W0", c.potential.W0);
    r.get("W1", c.potential.W1);
    r.get("Q", c.potential.Q);
    r.finish();
  }
  {
    Reader r(subtable(root, "grid"), "grid");
    r.get("u0", c.grid.u0);
    r.get("uF", c.grid.uF);
    r.get("v0", c.grid.v0);
    r.get("vmax", c.grid.vmax);
    r.get("h", c.grid.h);
    r.get("R", c.grid.R);
    r.finish();
  }
  {
    Reader r(subtable(root, "data"), "data");
    std::string family = InitialData::family_name(c.data.family);
    r.get("family", family);
    try {
      c.data.family = InitialData::parse_family(family);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("data.family: ") + e.what());
    }
    r.get("amplitude", c.data.amplitude);
    r.get("center", c.data.center);
    r.get("width", c.data.width);
    r.finish();
  }
  {
    Reader r(subtable(root, "diagnostics"), "diagnostics");
    r.get_list("p", c.diagnostics.p_values);
    r.get_list("gammas", c.diagnostics.gammas);
    r.get("sample_du", c.diagnostics.sample_du);
    r.get("extrapolation_fraction", c.diagnostics.extrapolation_fraction);
    r.get("hardy_q", c.diagnostics.hardy_q);
    r.get("iled_sigma", c.diagnostics.iled_sigma);
    r.finish();
  }
  {
    auto& k = c.checks;
    Reader r(subtable(root, "checks"), "checks");
    r.get("h0", k.h0);
    r.get("h1", k.h1);
    r.get("h3", k.h3);
    r.get("assumption_ceiling", k.assumption_ceiling);
    r.get("growth_limit", k.growth_limit);
    r.get("region_u_lo", k.region.u_lo);
    r.get("region_u_hi", k.region.u_hi);
    r.get("region_n_u", k.region.n_u);
    r.get("region_rho_lo", k.region.rho_lo);
    r.get("region_rho_hi", k.region.rho_hi);
    r.get("region_n_rho", k.region.n_rho);
    r.get("hardy", k.hardy);
    r.get("hardy_ingoing", k.hardy_ingoing);
    r.get("iled", k.iled);
    r.get("boundedness", k.boundedness);
    r.get("boundedness_T", k.boundedness_T);
    r.get("pointwise", k.pointwise);
    r.get("hardy_C1", k.hardy_C1);
    r.get("hardy_C2", k.hardy_C2);
    r.get("hardy_ingoing_constant", k.hardy_ingoing_constant);
    r.get("iled_constant", k.iled_constant);
    r.get("boundedness_ceiling", k.boundedness_ceiling);
    r.get("boundedness_T_ceiling", k.boundedness_T_ceiling);
    r.get("pointwise_constant", k.pointwise_constant);
    r.get_opt("hardy_u1", k.hardy_u1);
    r.get_opt("hardy_u2", k.hardy_u2);
    r.finish();
  }
  {
    Reader r(subtable(root, "output"), "output");
    r.get("dir", c.output.dir);
    r.get("prefix", c.output.prefix);
    r.get("field_dump", c.output.field_dump);
    r.finish();
  }
  for (const toml::table* t : table_array(root, "fit")) {
    FitSpec f;
    Reader r(t, "fit");
    r.get("quantity", f.quantity);
    r.get("claim", f.claim);
    r.get("ell", f.ell);
    r.get_window("window", f.window);
    r.get("tail_gate", f.tail_gate);
    r.get_opt("sharp_tol", f.sharp_tol);
    r.finish();
    c.fits.push_back(f);
  }
  for (const toml::table* t : table_array(root, "identity")) {
    IdentitySpec s;
    Reader r(t, "identity");
    r.get("which", s.which);
    r.get("ell", s.ell);
    r.get("p", s.p);
    r.get("u1", s.u1);
    r.get("u2", s.u2);
    r.finish();
    c.identities.push_back(s);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

namespace {

toml::array to_array(const std::vector<double>& v) {
  toml::array a;
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

std::string RunConfig::serialize() const {
  toml::table root;
  root.insert("name", name);
  root.insert("c_tol", c_tol);
  {
    toml::array m;
    for (int l : modes) m.push_back(l);
    root.insert("modes", m);
  }
  root.insert("background", toml::table{{"kind", background.kind},
                                        {"mass", background.mass},
                                        {"charge", background.charge}});
  root.insert("potential",
              toml::table{{"epsilon", potential.epsilon}, {"w0", potential.w0},
                          {"w1", potential.w1}, {"q", potential.q},
                          {"W0", potential.W0}, {"W1", potential.W1},
                          {"Q", potential.Q}});
  root.insert("grid", toml::table{{"u0", grid.u0}, {"uF", grid.uF},
                                  {"v0", grid.v0}, {"vmax", grid.vmax},
                                  {"h", grid.h}, {"R", grid.R}});
  root.insert("data",
              toml::table{{"family", InitialData::family_name(data.family)},
                          {"amplitude", data.amplitude},
                          {"center", data.center},
                          {"width", data.width}});
  root.insert("diagnostics",
              toml::table{{"p", to_array(diagnostics.p_values)},
                          {"gammas", to_array(diagnostics.gammas)},
                          {"sample_du", diagnostics.sample_du},
                          {"extrapolation_fraction",
                           diagnostics.extrapolation_fraction},
                          {"hardy_q", diagnostics.hardy_q},
                          {"iled_sigma", diagnostics.iled_sigma}});
  {
    const auto& k = checks;
    toml::table t{{"h0", k.h0},
                  {"h1", k.h1},
                  {"h3", k.h3},
                  {"assumption_ceiling", k.assumption_ceiling},
                  {"growth_limit", k.growth_limit},
                  {"region_u_lo", k.region.u_lo},
                  {"region_u_hi", k.region.u_hi},
                  {"region_n_u", k.region.n_u},
                  {"region_rho_lo", k.region.rho_lo},
                  {"region_rho_hi", k.region.rho_hi},
                  {"region_n_rho", k.region.n_rho},
                  {"hardy", k.hardy},
                  {"hardy_ingoing", k.hardy_ingoing},
                  {"iled", k.iled},
                  {"boundedness", k.boundedness},
                  {"boundedness_T", k.boundedness_T},
                  {"pointwise", k.pointwise},
                  {"hardy_C1", k.hardy_C1},
                  {"hardy_C2", k.hardy_C2},
                  {"hardy_ingoing_constant", k.hardy_ingoing_constant},
                  {"iled_constant", k.iled_constant},
                  {"boundedness_ceiling", k.boundedness_ceiling},
                  {"boundedness_T_ceiling", k.boundedness_T_ceiling},
                  {"pointwise_constant", k.pointwise_constant}};
    if (k.hardy_u1) t.insert("hardy_u1", *k.hardy_u1);
    if (k.hardy_u2) t.insert("hardy_u2", *k.hardy_u2);
    root.insert("checks", t);
  }
  root.insert("output", toml::table{{"dir", output.dir},
                                    {"prefix", output.prefix},
                                    {"field_dump", output.field_dump}});
  if (!fits.empty()) {
    toml::array a;
    for (const FitSpec& f : fits) {
      toml::table t{{"quantity", f.quantity},
                    {"claim", f.claim},
                    {"ell", f.ell},
                    {"tail_gate", f.tail_gate}};
      if (f.window) t.insert("window", toml::array{f.window->first, f.window->second});
      if (f.sharp_tol) t.insert("sharp_tol", *f.sharp_tol);
      a.push_back(t);
    }
    root.insert("fit", a);
  }
  if (!identities.empty()) {
    toml::array a;
    for (const IdentitySpec& s : identities) {
      a.push_back(toml::table{{"which", s.which},
                              {"ell", s.ell},
                              {"p", s.p},
                              {"u1", s.u1},
                              {"u2", s.u2}});
    }
    root.insert("identity", a);
  }
  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

namespace {

void check_expression(const char* name, const std::string& text) {
  try {
    (void)Expression::parse(text);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("potential.") + name + ": " + e.what() +
                      " (position " + std::to_string(e.position()) + ")");
  }
}

/// Plain quantities, or a prefix with one of the recorded p values.
bool known_quantity(const std::string& q, const std::vector<double>& p_values) {
  static const std::set<std::string> plain{"E", "E_T", "phi_R", "psi_I",
                                           "psi_I_extrap"};
  if (plain.count(q)) return true;
  for (const char* pre : {"Ep:", "Ep_Psi1:", "Ep_Theta0:"}) {
    const std::string p(pre);
    if (q.rfind(p, 0) == 0) {
      try {
        std::size_t used = 0;
        const double pv = std::stod(q.substr(p.size()), &used);
        if (used != q.size() - p.size()) return false;
        for (double x : p_values) {
          if (std::abs(x - pv) < 1e-12) return true;
        }
        return false;
      } catch (const std::exception&) {
        return false;
      }
    }
  }
  return false;
}

}  // namespace

void RunConfig::validate() const {
  if (!std::isfinite(potential.epsilon) || std::abs(potential.epsilon) > 0.5) {
    throw ConfigError("potential.epsilon must satisfy |epsilon| <= 0.5");
  }
  for (double p : diagnostics.p_values) {
    if (!(p >= 0.0 && p <= 3.5)) {
      throw ConfigError("diagnostics.p values must lie in [0, 3.5]");
    }
  }
  for (double g : diagnostics.gammas) {
    if (!(g > 0.0 && g < 0.5)) {
      throw ConfigError("diagnostics.gammas must lie in (0, 1/2)");
    }
  }
  if (!(diagnostics.sample_du > 0.0)) {
    throw ConfigError("diagnostics.sample_du must be positive");
  }
  if (!(diagnostics.hardy_q < 2.0)) throw ConfigError("diagnostics.hardy_q must be below 2");
  if (!(diagnostics.iled_sigma > 1.0)) throw ConfigError("diagnostics.iled_sigma must exceed 1");
  if (!(diagnostics.extrapolation_fraction > 0.0 &&
        diagnostics.extrapolation_fraction < 1.0)) {
    throw ConfigError("diagnostics.extrapolation_fraction must lie in (0, 1)");
  }
  try {
    grid.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  BackgroundPtr bg;
  try {
    bg = background.make();
    (void)centre_diagonal(*bg, grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("background: ") + e.what());
  }
  check_expression("w0", potential.w0);
  check_expression("w1", potential.w1);
  check_expression("q", potential.q);
  check_expression("W0", potential.W0);
  check_expression("W1", potential.W1);
  check_expression("Q", potential.Q);
  if (modes.empty()) throw ConfigError("modes must not be empty");
  std::set<int> seen;
  for (int l : modes) {
    if (l < 0) throw ConfigError("modes must be non-negative");
    if (!seen.insert(l).second) throw ConfigError("modes contains duplicates");
  }
  if (!(data.width > 0.0)) throw ConfigError("data.width must be positive");
  for (const FitSpec& f : fits) {
    if (!known_quantity(f.quantity, diagnostics.p_values)) {
      throw ConfigError("fit.quantity '" + f.quantity +
                        "' is not recognised (E_p fits need p among diagnostics.p)");
    }
    try {
      (void)parse_claim(f.claim);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("fit.claim: ") + e.what());
    }
    if (!seen.count(f.ell)) throw ConfigError("fit.ell is not among the modes");
    if (f.window && !(f.window->first > 0.0 && f.window->second > f.window->first)) {
      throw ConfigError("fit.window must satisfy 0 < lo < hi");
    }
    if (!(f.tail_gate > 0.0)) throw ConfigError("fit.tail_gate must be positive");
  }
  for (const IdentitySpec& s : identities) {
    if (s.which != "rp1" && s.which != "rp2") {
      throw ConfigError("identity.which must be 'rp1' or 'rp2'");
    }
    if (!seen.count(s.ell)) throw ConfigError("identity.ell is not among the modes");
    if (!(s.p >= 0.0 && s.p <= 3.5)) throw ConfigError("identity.p must lie in [0, 3.5]");
    if (!(s.u2 > s.u1 && s.u1 >= grid.u0 && s.u2 <= grid.uF)) {
      throw ConfigError("identity: need u0 <= u1 < u2 <= uF");
    }
  }
  if (output.prefix.empty() || output.prefix.find('/') != std::string::npos) {
    throw ConfigError("output.prefix must be a plain file name");
  }
}

}  // namespace nullwave
