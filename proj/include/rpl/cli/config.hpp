#pragma once

// Flat key = value run configuration for the rpl command-line tool.

#include "rpl/errors.hpp"
#include "rpl/geometry.hpp"
#include "rpl/validation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rpl::cli {

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"solve", "radial", "derivative", "sweep-beta", "zeta", "ball-check", "beta-star"};
  return c;
}

/// Documented keys, in the order they are echoed.
inline const std::vector<std::pair<std::string, std::string>>& known_keys() {
  static const std::vector<std::pair<std::string, std::string>> k{
      {"domain", "disk | curve"},
      {"R", "disk or ball radius"},
      {"n", "space dimension (radial and ball-check only)"},
      {"rho_cos", "cosine coefficients a0,a1,... of the boundary radius"},
      {"rho_sin", "sine coefficients b0,b1,... of the boundary radius"},
      {"center", "star centre x,y"},
      {"p", "exponent, p > 1"},
      {"beta", "Robin parameter >= 0, or inf for Dirichlet"},
      {"betas", "comma separated increasing beta list"},
      {"field", "normal | translation | rotation"},
      {"field_cos", "cosine coefficients of the normal speed g in v = g eta"},
      {"field_sin", "sine coefficients of the normal speed"},
      {"field_vector", "translation vector x,y"},
      {"field_pivot", "rotation centre x,y"},
      {"field_rate", "rotation rate"},
      {"field_scale", "overall factor applied to the field"},
      {"h", "mesh size"},
      {"quadrature", "boundary quadrature nodes (multiple of 4)"},
      {"mesh_seed", "mesh layout seed"},
      {"refinements", "uniform refinements for the zeta study"},
      {"method", "radial | fem (sweep-beta on the disk)"},
      {"fd_t0", "largest finite-difference step"},
      {"fd_halvings", "number of step halvings (>= 2)"},
      {"fd_richardson", "Richardson extrapolation true | false"},
      {"fd_mesh_noise", "extra solve at h / sqrt(2) true | false"},
      {"tol_fd_rel", "relative tolerance formula vs finite difference"},
      {"tol_fd_sigma", "uncertainty multiple formula vs finite difference"},
      {"tol_formula_rel", "relative tolerance between the two formulas"},
      {"tol_residual", "eigensolver dual-norm residual tolerance"},
      {"tol_lambda", "eigenvalue relative change tolerance"},
      {"max_iterations", "Newton iterations per continuation stage"},
      {"output", "output directory"},
  };
  return k;
}

struct RunConfig {
  std::string command;
  std::string domain = "disk";
  double R = 1.0;
  int n = 2;
  std::vector<double> rho_cos{1.0};
  std::vector<double> rho_sin{0.0};
  Vec2 center = Vec2::Zero();
  double p = 2.0;
  double beta = 1.0;
  std::vector<double> betas;
  std::string field = "normal";
  std::vector<double> field_cos{1.0};
  std::vector<double> field_sin{0.0};
  Vec2 field_vector{1.0, 0.0};
  Vec2 field_pivot = Vec2::Zero();
  double field_rate = 1.0;
  double field_scale = 1.0;
  double h = 0.02;
  int quadrature = kDefaultBoundaryNodes;
  int mesh_seed = 0;
  int refinements = 1;
  std::string method;
  FdSchedule fd;
  bool fd_mesh_noise = true;
  double tol_fd_rel = 0.05;
  double tol_fd_sigma = 3.0;
  double tol_formula_rel = 0.02;
  double tol_residual = 1e-8;
  double tol_lambda = 1e-10;
  int max_iterations = 100;
  std::string output = "out";

  BoundaryCurve curve() const {
    if (domain == "disk") return BoundaryCurve::circle(R, center);
    return BoundaryCurve(TrigPolynomial(rho_cos, rho_sin), center);
  }

  VectorFieldSpec vector_field() const {
    VectorFieldSpec v = field == "translation" ? VectorFieldSpec::constant(field_vector)
                        : field == "rotation"  ? VectorFieldSpec::rotation(field_pivot, field_rate)
                                               : VectorFieldSpec::normal(TrigPolynomial(field_cos, field_sin));
    return v * field_scale;
  }

  SolverOptions solver() const {
    SolverOptions o;
    o.residual_tol = tol_residual;
    o.lambda_rel_tol = tol_lambda;
    o.max_iterations = max_iterations;
    return o;
  }

  CompareOptions compare() const {
    CompareOptions o;
    o.fd.schedule = fd;
    o.fd.h = h;
    o.fd.solver = solver();
    o.fd.mesh_noise = fd_mesh_noise;
    o.seed = mesh_seed;
    o.fd_rel_tol = tol_fd_rel;
    o.fd_sigma = tol_fd_sigma;
    o.formula_rel_tol = tol_formula_rel;
    return o;
  }

  /// Every key with its resolved value, defaults included.
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

// Formatting ------------------------------------------------------------------

inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

inline std::string format_vec(const Vec2& v) { return format_double(v.x()) + "," + format_double(v.y()); }

inline std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {
      {"command", command},
      {"domain", domain},
      {"R", format_double(R)},
      {"n", std::to_string(n)},
      {"rho_cos", format_list(rho_cos)},
      {"rho_sin", format_list(rho_sin)},
      {"center", format_vec(center)},
      {"p", format_double(p)},
      {"beta", format_double(beta)},
      {"betas", format_list(betas)},
      {"field", field},
      {"field_cos", format_list(field_cos)},
      {"field_sin", format_list(field_sin)},
      {"field_vector", format_vec(field_vector)},
      {"field_pivot", format_vec(field_pivot)},
      {"field_rate", format_double(field_rate)},
      {"field_scale", format_double(field_scale)},
      {"h", format_double(h)},
      {"quadrature", std::to_string(quadrature)},
      {"mesh_seed", std::to_string(mesh_seed)},
      {"refinements", std::to_string(refinements)},
      {"method", method},
      {"fd_t0", format_double(fd.t0)},
      {"fd_halvings", std::to_string(fd.halvings)},
      {"fd_richardson", b(fd.richardson)},
      {"fd_mesh_noise", b(fd_mesh_noise)},
      {"tol_fd_rel", format_double(tol_fd_rel)},
      {"tol_fd_sigma", format_double(tol_fd_sigma)},
      {"tol_formula_rel", format_double(tol_formula_rel)},
      {"tol_residual", format_double(tol_residual)},
      {"tol_lambda", format_double(tol_lambda)},
      {"max_iterations", std::to_string(max_iterations)},
      {"output", output},
  };
}

// Parsing ---------------------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Reads `key = value` lines; '#' starts a comment.
inline KeyValues read_key_values(std::istream& in, const std::string& source = "config") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": missing key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return read_key_values(in, path);
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "inf" || t == "Inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(t, &used);
    if (used == t.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
}

inline double parse_finite(const std::string& key, const std::string& s) {
  const double x = parse_double(key, s);
  if (!std::isfinite(x)) throw ConfigError("key '" + key + "': value must be finite");
  return x;
}

inline int parse_int(const std::string& key, const std::string& s) {
  const double x = parse_finite(key, s);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
  return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s, bool allow_inf = false) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(allow_inf ? parse_double(key, item) : parse_finite(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

inline Vec2 parse_vec(const std::string& key, const std::string& s) {
  const auto v = parse_list(key, s);
  if (v.size() != 2) throw ConfigError("key '" + key + "': expected two comma separated numbers");
  return {v[0], v[1]};
}

inline std::string parse_choice(const std::string& key, const std::string& s, std::initializer_list<const char*> allowed) {
  const std::string t = trim(s);
  std::string all;
  for (const char* a : allowed) {
    if (t == a) return t;
    all += std::string(all.empty() ? "" : ", ") + a;
  }
  throw ConfigError("key '" + key + "': '" + s + "' is not one of " + all);
}

}  // namespace detail

/// Builds and validates a configuration for `command` from key/value pairs.
inline RunConfig parse_config(const std::string& command, const KeyValues& kv) {
  using namespace detail;
  RunConfig c;
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw ConfigError("unknown command '" + command + "'");
  c.command = command;

  for (const auto& [key, value] : kv) {
    const auto& keys = known_keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == key; }))
      throw ConfigError("unknown key '" + key + "'");
  }
  auto get = [&](const char* key, auto&& apply) {
    if (const auto it = kv.find(key); it != kv.end()) apply(key, it->second);
  };
  get("domain", [&](auto k, auto& v) { c.domain = parse_choice(k, v, {"disk", "curve"}); });
  get("R", [&](auto k, auto& v) { c.R = parse_finite(k, v); });
  get("n", [&](auto k, auto& v) { c.n = parse_int(k, v); });
  get("rho_cos", [&](auto k, auto& v) { c.rho_cos = parse_list(k, v); });
  get("rho_sin", [&](auto k, auto& v) { c.rho_sin = parse_list(k, v); });
  get("center", [&](auto k, auto& v) { c.center = parse_vec(k, v); });
  get("p", [&](auto k, auto& v) { c.p = parse_double(k, v); });
  get("beta", [&](auto k, auto& v) { c.beta = parse_double(k, v); });
  get("betas", [&](auto k, auto& v) { c.betas = parse_list(k, v); });
  get("field", [&](auto k, auto& v) { c.field = parse_choice(k, v, {"normal", "translation", "rotation"}); });
  get("field_cos", [&](auto k, auto& v) { c.field_cos = parse_list(k, v); });
  get("field_sin", [&](auto k, auto& v) { c.field_sin = parse_list(k, v); });
  get("field_vector", [&](auto k, auto& v) { c.field_vector = parse_vec(k, v); });
  get("field_pivot", [&](auto k, auto& v) { c.field_pivot = parse_vec(k, v); });
  get("field_rate", [&](auto k, auto& v) { c.field_rate = parse_finite(k, v); });
  get("field_scale", [&](auto k, auto& v) { c.field_scale = parse_finite(k, v); });
  get("h", [&](auto k, auto& v) { c.h = parse_finite(k, v); });
  get("quadrature", [&](auto k, auto& v) { c.quadrature = parse_int(k, v); });
  get("mesh_seed", [&](auto k, auto& v) { c.mesh_seed = parse_int(k, v); });
  get("refinements", [&](auto k, auto& v) { c.refinements = parse_int(k, v); });
  get("method", [&](auto k, auto& v) { c.method = parse_choice(k, v, {"radial", "fem"}); });
  get("fd_t0", [&](auto k, auto& v) { c.fd.t0 = parse_finite(k, v); });
  get("fd_halvings", [&](auto k, auto& v) { c.fd.halvings = parse_int(k, v); });
  get("fd_richardson", [&](auto k, auto& v) { c.fd.richardson = parse_bool(k, v); });
  get("fd_mesh_noise", [&](auto k, auto& v) { c.fd_mesh_noise = parse_bool(k, v); });
  get("tol_fd_rel", [&](auto k, auto& v) { c.tol_fd_rel = parse_finite(k, v); });
  get("tol_fd_sigma", [&](auto k, auto& v) { c.tol_fd_sigma = parse_finite(k, v); });
  get("tol_formula_rel", [&](auto k, auto& v) { c.tol_formula_rel = parse_finite(k, v); });
  get("tol_residual", [&](auto k, auto& v) { c.tol_residual = parse_finite(k, v); });
  get("tol_lambda", [&](auto k, auto& v) { c.tol_lambda = parse_finite(k, v); });
  get("max_iterations", [&](auto k, auto& v) { c.max_iterations = parse_int(k, v); });
  get("output", [&](auto, auto& v) { c.output = trim(v); });

  // validation
  if (!(c.p > 1.0) || std::isinf(c.p)) throw ConfigError("key 'p': p must exceed 1 (and be finite)");
  if (!(c.beta >= 0.0)) throw ConfigError("key 'beta': beta must be non-negative (use inf for Dirichlet)");
  if (!(c.R > 0.0)) throw ConfigError("key 'R': radius must be positive");
  if (c.n < 2) throw ConfigError("key 'n': dimension must be at least 2");
  if (c.n != 2 && command != "radial" && command != "ball-check")
    throw ConfigError("key 'n': only the radial and ball-check commands accept n != 2");
  if (!(c.h > 0.0)) throw ConfigError("key 'h': mesh size must be positive");
  if (c.quadrature < 16 || c.quadrature % 4 != 0)
    throw ConfigError("key 'quadrature': need a multiple of 4 and at least 16 nodes");
  if (c.mesh_seed < 0) throw ConfigError("key 'mesh_seed': must be non-negative");
  if (c.refinements < 0 || c.refinements > 3) throw ConfigError("key 'refinements': must lie in 0..3");
  if (c.max_iterations < 1) throw ConfigError("key 'max_iterations': must be positive");
  for (const auto& [name, x] : {std::pair{"tol_fd_rel", c.tol_fd_rel}, {"tol_fd_sigma", c.tol_fd_sigma},
                                {"tol_formula_rel", c.tol_formula_rel}, {"tol_residual", c.tol_residual},
                                {"tol_lambda", c.tol_lambda}})
    if (!(x > 0.0)) throw ConfigError(std::string("key '") + name + "': tolerance must be positive");
  if (!(c.fd.t0 > 0.0)) throw ConfigError("key 'fd_t0': step must be positive");
  if (c.fd.halvings < 2) throw ConfigError("key 'fd_halvings': at least two halvings are required");
  if (c.domain == "disk" && (kv.count("rho_cos") || kv.count("rho_sin")))
    throw ConfigError("keys 'rho_cos'/'rho_sin' need domain = curve");
  if (c.domain == "curve" && kv.count("R")) throw ConfigError("key 'R' applies to domain = disk");
  if (c.domain == "curve" && (command == "radial" || command == "ball-check"))
    throw ConfigError("command '" + command + "' needs domain = disk");
  if (c.method.empty()) c.method = c.domain == "disk" ? "radial" : "fem";
  if (c.method == "radial" && c.domain != "disk") throw ConfigError("key 'method': radial needs domain = disk");

  if (c.betas.empty()) {
    if (command == "beta-star") c.betas = geometric_beta_grid();
    else c.betas = {0.1, 1.0, 10.0, 100.0, 1e4};
  }
  for (std::size_t i = 0; i < c.betas.size(); ++i) {
    if (!(c.betas[i] >= 0.0)) throw ConfigError("key 'betas': values must be non-negative");
    if (i && !(c.betas[i] > c.betas[i - 1])) throw ConfigError("key 'betas': list must be strictly increasing");
  }
  try {
    (void)c.curve();
    (void)c.vector_field();
  } catch (const InvalidCurveError& e) {
    throw ConfigError(std::string("key 'rho_cos': ") + e.what());
  }
  return c;
}

}  // namespace rpl::cli
