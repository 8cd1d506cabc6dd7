#pragma once

// Command dispatch for the rpl tool: each command writes a JSON report and a
// CSV table into the output directory and returns a one-line summary.

#include "rpl/cli/config.hpp"
#include "rpl/eigensolver.hpp"
#include "rpl/mesh.hpp"
#include "rpl/radial.hpp"
#include "rpl/shape_derivative.hpp"
#include "rpl/validation.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace rpl::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kConfig = 2, kConvergence = 3, kFdInstability = 4, kInternal = 5 };

/// Finite numbers stay numbers; infinities become the string "inf".
inline Json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? Json("nan") : Json(x > 0 ? "inf" : "-inf");
}

inline Json config_json(const RunConfig& c) {
  Json j = Json::object();
  for (const auto& [k, v] : c.resolved()) j[k] = v;
  return j;
}

class Csv {
 public:
  Csv(const RunConfig& c, std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (const auto& [k, v] : c.resolved()) text_ += "# " + k + " = " + v + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) text_ += (i ? "," : "") + columns_[i];
    text_ += "\n";
  }
  template <class... T>
  void row(const T&... cells) {
    std::size_t i = 0;
    ((text_ += (i++ ? "," : "") + cell(cells)), ...);
    text_ += "\n";
  }
  const std::string& text() const { return text_; }

 private:
  static std::string cell(double x) { return format_double(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  std::vector<std::string> columns_;
  std::string text_;
};

class Writer {
 public:
  explicit Writer(const RunConfig& c) : dir_(c.output) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + c.output + "': " + ec.message());
  }
  void write(const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << text;
    if (!out) throw Error("failed writing " + (dir_ / name).string());
  }
  void json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

 private:
  std::filesystem::path dir_;
};

inline std::shared_ptr<const Mesh> make_mesh(const RunConfig& c) {
  return std::make_shared<const Mesh>(triangulate(c.curve(), c.h, {.seed = c.mesh_seed}));
}

inline Json mesh_json(const Mesh& m) {
  return {{"h", m.h()},
          {"vertices", m.num_vertices()},
          {"triangles", m.num_triangles()},
          {"boundary_nodes", static_cast<int>(m.boundary().size())},
          {"min_angle_deg", m.min_angle_deg()}};
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// Commands ----------------------------------------------------------------------

inline std::string run_solve(const RunConfig& c, Writer& w) {
  const auto mesh = make_mesh(c);
  const auto sol = solve({c.p, c.beta, mesh}, c.solver());
  Json j = {{"config", config_json(c)},
            {"lambda", sol.lambda},
            {"p", sol.p},
            {"beta", num(sol.beta)},
            {"normalization", sol.normalization},
            {"iterations", sol.diagnostics.iterations},
            {"continuation_steps", sol.diagnostics.continuation_steps},
            {"residual", sol.diagnostics.residual},
            {"mesh", mesh_json(*mesh)}};
  w.json("solution.json", j);
  Csv nodes(c, {"x", "y", "u"});
  for (int v = 0; v < mesh->num_vertices(); ++v) nodes.row(mesh->vertices()[v].x(), mesh->vertices()[v].y(), sol.u[v]);
  w.write("solution.csv", nodes.text());
  Csv bnd(c, {"theta", "x", "y", "u", "dudn", "grad_norm", "flagged"});
  for (const auto& s : sol.boundary)
    bnd.row(s.theta, s.frame.point.x(), s.frame.point.y(), s.u, s.dudn, s.grad_norm, s.flagged ? 1 : 0);
  w.write("boundary.csv", bnd.text());
  return "solve: lambda1 = " + fmt(sol.lambda) + " (p = " + fmt(c.p) + ", beta = " + format_double(c.beta) + ", " +
         std::to_string(mesh->num_vertices()) + " vertices)";
}

inline std::string run_radial(const RunConfig& c, Writer& w) {
  const auto rs = solve_ball(c.n, c.R, c.p, c.beta);
  Json j = {{"config", config_json(c)},
            {"lambda", rs.lambda},
            {"n", rs.n},
            {"R", rs.R},
            {"p", rs.p},
            {"beta", num(rs.beta)},
            {"u_R", rs.boundary_u()},
            {"du_R", rs.boundary_du()},
            {"scale", rs.scale},
            {"bisection_steps", rs.diagnostics.bisection_steps},
            {"ode_steps", rs.diagnostics.ode_steps}};
  w.json("radial.json", j);
  Csv prof(c, {"r", "u", "du"});
  constexpr int samples = 400;
  for (int i = 0; i <= samples; ++i) {
    const double r = c.R * i / samples;
    const auto v = evaluate(rs, r);
    prof.row(r, v.u, v.du);
  }
  w.write("radial_profile.csv", prof.text());
  return "radial: lambda1 = " + fmt(rs.lambda) + " (n = " + std::to_string(c.n) + ", R = " + fmt(c.R) +
         ", p = " + fmt(c.p) + ", beta = " + format_double(c.beta) + ")";
}

inline Json derivative_json(const DerivativeValue& d) {
  return {{"value", d.value}, {"formula", d.formula}, {"guard_count", d.guard_count}, {"magnitude", d.magnitude}};
}

inline std::string run_derivative(const RunConfig& c, Writer& w) {
  const auto curve = c.curve();
  const auto v = c.vector_field();
  const auto opts = c.compare();
  const auto rep = compare_report(curve, c.p, c.beta, v, opts);
  const auto& fd = rep.fd;
  Json j = {{"config", config_json(c)},
            {"lambda", rep.lambda},
            {"formula1", derivative_json(rep.formula1)},
            {"formula2", rep.formula2 ? derivative_json(*rep.formula2) : Json(nullptr)},
            {"fd",
             {{"estimate", fd.estimate},
              {"uncertainty", fd.uncertainty},
              {"spread", fd.spread},
              {"mesh_term", fd.mesh_term},
              {"seed_term", fd.seed_term},
              {"lambda_seed0", fd.lambda_seed0},
              {"lambda_seed1", fd.lambda_seed1}}},
            {"gaps", {{"formula1_vs_fd", rep.gap_fd}, {"tolerance_fd", rep.tol_fd}, {"formula1_vs_formula2", rep.gap_formulas}}},
            {"verdicts", {{"formula1_vs_fd", rep.fd_agrees}, {"formula1_vs_formula2", rep.formulas_agree}}},
            {"sign_violations", rep.sign_violations},
            {"provenance",
             {{"h", rep.h},
              {"boundary_nodes", rep.boundary_nodes},
              {"mesh_vertices", rep.mesh_vertices},
              {"residual_tol", rep.residual_tol},
              {"lambda_rel_tol", rep.lambda_rel_tol},
              {"fd_steps", fd.steps}}}};
  w.json("derivative.json", j);
  Csv tab(c, {"t", "lambda_plus", "lambda_minus", "difference", "extrapolated"});
  for (std::size_t k = 0; k < fd.steps.size(); ++k)
    tab.row(fd.steps[k], fd.lambda_plus[k], fd.lambda_minus[k], fd.differences[k],
            k ? format_double(fd.extrapolated[k - 1]) : std::string());
  w.write("derivative_fd.csv", tab.text());
  std::string s = "derivative: formula1 = " + fmt(rep.formula1.value);
  if (rep.formula2) s += ", formula2 = " + fmt(rep.formula2->value);
  s += ", fd = " + fmt(fd.estimate) + " +- " + fmt(fd.uncertainty) + " [fd " + (rep.fd_agrees ? "agrees" : "DISAGREES");
  if (rep.formula2) s += std::string(", formulas ") + (rep.formulas_agree ? "agree" : "DISAGREE");
  return s + "]";
}

inline std::string run_sweep(const RunConfig& c, Writer& w) {
  const auto sweep = c.method == "radial" ? beta_sweep_ball(2, c.R, c.p, c.betas)
                                          : beta_sweep_fem(c.curve(), c.p, c.betas, c.h, c.solver());
  Json rows = Json::array();
  Csv tab(c, {"beta", "lambda", "profile_gap", "note"});
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    const bool last = i + 1 == sweep.rows.size();
    const std::string note = last && sweep.near_dirichlet() ? "≈ Dirichlet" : "";
    rows.push_back({{"beta", r.beta}, {"lambda", r.lambda}, {"profile_gap", r.profile_gap}, {"note", note}});
    tab.row(r.beta, r.lambda, r.profile_gap, note);
  }
  Json j = {{"config", config_json(c)},
            {"method", c.method},
            {"lambda_dirichlet", sweep.lambda_dirichlet},
            {"rows", rows},
            {"checks",
             {{"strictly_increasing", sweep.increasing},
              {"bounded_by_dirichlet", sweep.bounded},
              {"profile_gap_decreasing", sweep.gap_decreasing},
              {"final_relative_gap", sweep.final_relative_gap}}}};
  w.json("sweep.json", j);
  w.write("sweep.csv", tab.text());
  return "sweep-beta: " + std::to_string(sweep.rows.size()) + " values, lambda_D = " + fmt(sweep.lambda_dirichlet) +
         (sweep.increasing ? ", increasing" : ", NOT increasing") + (sweep.bounded ? ", bounded" : ", NOT bounded") +
         (sweep.gap_decreasing ? ", gap decreasing" : ", gap NOT decreasing") +
         (sweep.near_dirichlet() ? ", final row ≈ Dirichlet" : "");
}

inline std::string run_zeta(const RunConfig& c, Writer& w) {
  std::vector<ZetaConstancy> levels;
  if (c.domain == "disk") {
    levels = zeta_constancy(2, c.R, c.p, c.beta, c.h, c.refinements, c.solver());
  } else {
    auto mesh = make_mesh(c);
    levels.push_back(zeta_on_mesh(mesh, c.p, c.beta, c.solver()));
    for (int k = 0; k < c.refinements; ++k) {
      mesh = std::make_shared<const Mesh>(refine(*mesh));
      levels.push_back(zeta_on_mesh(mesh, c.p, c.beta, c.solver()));
    }
  }
  Json lv = Json::array();
  Csv tab(c, {"level", "theta", "zeta"});
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& z = levels[l].profile;
    lv.push_back({{"level", static_cast<int>(l)},
                  {"vertices", levels[l].mesh_vertices},
                  {"lambda", levels[l].lambda},
                  {"mean", z.mean},
                  {"relative_deviation", z.rel_deviation},
                  {"guard_count", z.guard_count}});
    for (std::size_t i = 0; i < z.theta.size(); ++i) tab.row(static_cast<int>(l), z.theta[i], z.zeta[i]);
  }
  w.json("zeta.json", {{"config", config_json(c)}, {"levels", lv}});
  w.write("zeta.csv", tab.text());
  std::string s = "zeta: relative deviation";
  for (const auto& l : levels) s += " " + fmt(l.profile.rel_deviation);
  return s;
}

inline std::string run_ball_check(const RunConfig& c, Writer& w) {
  RadialOptions ro;
  const auto bc = ball_monotonicity_check(c.n, c.R, c.p, c.beta, c.vector_field(), ro);
  Json j = {{"config", config_json(c)},
            {"lambda", bc.lambda},
            {"threshold", bc.threshold},
            {"hypothesis_i", bc.hypothesis_i},
            {"hypothesis_ii", bc.hypothesis_ii},
            {"strict_ii", bc.strict_ii},
            {"remark_radius", bc.remark_radius},
            {"flux", bc.flux},
            {"bracket", bc.bracket},
            {"derivative", bc.derivative},
            {"predicted_sign", bc.predicted_sign ? Json(*bc.predicted_sign) : Json(nullptr)},
            {"non_strict", bc.non_strict},
            {"consistent", bc.consistent},
            {"summary", bc.summary()}};
  w.json("ball_check.json", j);
  Csv tab(c, {"threshold", "hypothesis_i", "hypothesis_ii", "flux", "derivative", "predicted_sign", "consistent"});
  tab.row(bc.threshold, bc.hypothesis_i ? 1 : 0, bc.hypothesis_ii ? 1 : 0, bc.flux, bc.derivative,
          bc.predicted_sign ? std::to_string(*bc.predicted_sign) : std::string("none"), bc.consistent ? 1 : 0);
  w.write("ball_check.csv", tab.text());
  return "ball-check: derivative = " + fmt(bc.derivative) + ", " + bc.summary();
}

inline std::string run_beta_star(const RunConfig& c, Writer& w) {
  const auto rep = beta_star_search(c.curve(), c.p, c.vector_field(), c.betas, c.h, c.solver());
  Json rows = Json::array();
  Csv tab(c, {"beta", "derivative", "sign"});
  for (const auto& r : rep.rows) {
    const int sign = (r.derivative > 0) - (r.derivative < 0);
    rows.push_back({{"beta", r.beta}, {"derivative", r.derivative}, {"sign", sign}});
    tab.row(r.beta, r.derivative, sign);
  }
  w.json("beta_star.json", {{"config", config_json(c)},
                            {"rows", rows},
                            {"beta_star", rep.beta_star ? Json(*rep.beta_star) : Json(nullptr)},
                            {"conclusive", rep.beta_star.has_value()}});
  w.write("beta_star.csv", tab.text());
  return rep.beta_star ? "beta-star: derivative negative for all grid beta >= " + fmt(*rep.beta_star)
                       : std::string("beta-star: inconclusive, derivative not negative at the end of the grid");
}

/// Runs the configured command; returns the summary line.
inline std::string run(const RunConfig& c) {
  Writer w(c);
  if (c.command == "solve") return run_solve(c, w);
  if (c.command == "radial") return run_radial(c, w);
  if (c.command == "derivative") return run_derivative(c, w);
  if (c.command == "sweep-beta") return run_sweep(c, w);
  if (c.command == "zeta") return run_zeta(c, w);
  if (c.command == "ball-check") return run_ball_check(c, w);
  if (c.command == "beta-star") return run_beta_star(c, w);
  throw ConfigError("unknown command '" + c.command + "'");
}

/// Exit status for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidCurveError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ResolutionError*>(&e))
    return kConfig;
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const BracketError*>(&e)) return kConvergence;
  if (dynamic_cast<const FdInstabilityError*>(&e) || dynamic_cast<const PerturbationTooLargeError*>(&e) ||
      dynamic_cast<const DegreeTooLowError*>(&e))
    return kFdInstability;
  return kInternal;
}

inline const char* exit_category(int code) {
  switch (code) {
    case kOk: return "ok";
    case kConfig: return "config error";
    case kConvergence: return "solver did not converge";
    case kFdInstability: return "finite-difference instability";
    default: return "internal error";
  }
}

/// Parses, runs and maps failures to exit codes; messages go to `err`.
inline int run_command(const std::string& command, const KeyValues& kv, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = parse_config(command, kv);
    out << run(cfg) << std::endl;
    return kOk;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "rpl " << command << ": " << exit_category(code) << ": " << e.what() << std::endl;
    return code;
  }
}

}  // namespace rpl::cli
