#pragma once

// Independent checks of the shape-derivative formulas: finite differences on
// re-meshed perturbed domains, beta asymptotics, the ball sign predicates,
// an empirical large-beta search and the stationarity profile.

#include "rpl/eigensolver.hpp"
#include "rpl/errors.hpp"
#include "rpl/geometry.hpp"
#include "rpl/mesh.hpp"
#include "rpl/radial.hpp"
#include "rpl/shape_derivative.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace rpl {

/// Evaluates fn(0..n-1) into a vector, spreading the calls over worker
/// threads when more than one core is available. Results are stored by
/// index, so the output never depends on scheduling.
template <class T>
std::vector<T> parallel_map(int n, const std::function<T(int)>& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const int workers = std::min<int>(n, std::max(1u, std::thread::hardware_concurrency()));
  auto work = [&](int w) {
    for (int i = w; i < n; i += workers) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// First eigenvalue on a fresh mesh of `curve`.
inline double mesh_lambda(const BoundaryCurve& curve, double p, double beta, double h, int seed = 0,
                          const SolverOptions& opts = {}) {
  auto mesh = std::make_shared<const Mesh>(triangulate(curve, h, {.seed = seed}));
  return solve({p, beta, mesh}, opts).lambda;
}

// Finite differences ----------------------------------------------------------

struct FdSchedule {
  double t0 = 0.02;
  int halvings = 2;
  bool richardson = true;

  void validate() const {
    if (!(t0 > 0.0)) throw ConfigError("fd step t0 must be positive");
    if (halvings < 2) throw ConfigError("fd schedule needs at least two halvings");
  }
  std::vector<double> steps() const {
    std::vector<double> t{t0};
    for (int k = 0; k < halvings; ++k) t.push_back(t.back() / 2.0);
    return t;
  }
};

struct FdOptions {
  FdSchedule schedule;
  double h = 0.02;
  SolverOptions solver;
  PerturbOptions perturb;
  bool mesh_noise = true;  ///< solve the finest stencil again at h / sqrt(2)
};

struct FdEstimate {
  double estimate = 0.0;
  double uncertainty = 0.0;
  std::vector<double> steps;
  std::vector<double> lambda_plus, lambda_minus;
  std::vector<double> differences;  ///< central differences per step
  std::vector<double> extrapolated;  ///< Richardson values from consecutive steps
  double spread = 0.0;
  double refined_difference = 0.0;
  double mesh_term = 0.0;
  double seed_term = 0.0;
  double lambda_seed0 = 0.0, lambda_seed1 = 0.0;
};

/// Central-difference estimate of the shape derivative with an uncertainty
/// made of the spread of the two finest levels, the discretization bias of
/// the finest difference extrapolated from a mesh of size h / sqrt(2), and
/// the seed-to-seed variation of the base eigenvalue propagated through the
/// finest step.
inline FdEstimate fd_derivative(const BoundaryCurve& curve, double p, double beta, const VectorFieldSpec& v,
                                const FdOptions& opts = {}) {
  opts.schedule.validate();
  FdEstimate fd;
  fd.steps = opts.schedule.steps();
  const int levels = static_cast<int>(fd.steps.size());

  std::vector<BoundaryCurve> domains;
  for (double t : fd.steps) {
    domains.push_back(perturb_curve(curve, v, t, opts.perturb).curve);
    domains.push_back(perturb_curve(curve, v, -t, opts.perturb).curve);
  }
  const double fine_h = opts.h / std::sqrt(2.0);
  struct Task { const BoundaryCurve* c; double h; int seed; };
  std::vector<Task> tasks;
  for (const auto& d : domains) tasks.push_back({&d, opts.h, 0});
  tasks.push_back({&curve, opts.h, 0});
  tasks.push_back({&curve, opts.h, 1});
  if (opts.mesh_noise) {
    tasks.push_back({&domains[2 * levels - 2], fine_h, 0});
    tasks.push_back({&domains[2 * levels - 1], fine_h, 0});
  }
  const auto lam = parallel_map<double>(static_cast<int>(tasks.size()), [&](int i) {
    return mesh_lambda(*tasks[i].c, p, beta, tasks[i].h, tasks[i].seed, opts.solver);
  });

  for (int k = 0; k < levels; ++k) {
    fd.lambda_plus.push_back(lam[2 * k]);
    fd.lambda_minus.push_back(lam[2 * k + 1]);
    fd.differences.push_back((lam[2 * k] - lam[2 * k + 1]) / (2.0 * fd.steps[k]));
  }
  fd.lambda_seed0 = lam[2 * levels];
  fd.lambda_seed1 = lam[2 * levels + 1];
  const double t_min = fd.steps.back();
  const double lambda_noise = std::max(std::abs(fd.lambda_seed0 - fd.lambda_seed1), 1e-12 * std::abs(fd.lambda_seed0));
  fd.seed_term = std::abs(fd.lambda_seed0 - fd.lambda_seed1) / (std::sqrt(2.0) * t_min);

  // successive differences should contract; growth beyond the noise level
  // means the step is below what the mesh resolves
  for (int k = 0; k + 2 < levels; ++k) {
    const double d0 = std::abs(fd.differences[k + 1] - fd.differences[k]);
    const double d1 = std::abs(fd.differences[k + 2] - fd.differences[k + 1]);
    const double noise = 2.0 * lambda_noise / fd.steps[k + 2];
    if (d1 > d0 + noise)
      throw FdInstabilityError("finite-difference sequence is not converging at t = " +
                               std::to_string(fd.steps[k + 2]) + "; step too small for the mesh");
  }

  for (int k = 0; k + 1 < levels; ++k)
    fd.extrapolated.push_back((4.0 * fd.differences[k + 1] - fd.differences[k]) / 3.0);
  if (opts.schedule.richardson) {
    fd.estimate = fd.extrapolated.back();
    fd.spread = std::abs(fd.extrapolated[levels - 2] - fd.extrapolated[levels - 3]);
  } else {
    fd.estimate = fd.differences.back();
    fd.spread = std::abs(fd.differences[levels - 1] - fd.differences[levels - 2]);
  }
  if (opts.mesh_noise) {
    fd.refined_difference = (lam[2 * levels + 2] - lam[2 * levels + 3]) / (2.0 * t_min);
    // second order in h: the bias at h is twice the change from h to h / sqrt(2)
    fd.mesh_term = 2.0 * std::abs(fd.refined_difference - fd.differences.back());
  }
  fd.uncertainty = fd.spread + fd.mesh_term + fd.seed_term;
  return fd;
}

// Formula / FD comparison -----------------------------------------------------

struct CompareOptions {
  FdOptions fd;
  int seed = 0;
  double fd_rel_tol = 0.05;
  double fd_sigma = 3.0;
  double formula_rel_tol = 0.02;
};

struct DerivativeReport {
  double p = 2.0, beta = 1.0;
  double lambda = 0.0;
  DerivativeValue formula1;
  std::optional<DerivativeValue> formula2;  ///< absent for Dirichlet
  FdEstimate fd;
  double gap_fd = 0.0;            ///< |formula1 - fd|
  double tol_fd = 0.0;            ///< max(rel * max(|fd|, |formula1|), sigma * uncertainty)
  double gap_formulas = 0.0;      ///< |f1 - f2| / max(|f1|, |f2|, int |integrand (v . eta)|)
  bool fd_agrees = false;
  bool formulas_agree = false;
  int sign_violations = 0;
  // provenance
  double h = 0.0;
  int boundary_nodes = 0;
  int mesh_vertices = 0;
  double residual_tol = 0.0;
  double lambda_rel_tol = 0.0;
};

inline DerivativeReport compare_report(const BoundaryCurve& curve, double p, double beta, const VectorFieldSpec& v,
                                       const CompareOptions& opts = {}) {
  DerivativeReport rep;
  rep.p = p;
  rep.beta = beta;
  auto mesh = std::make_shared<const Mesh>(triangulate(curve, opts.fd.h, {.seed = opts.seed}));
  const auto sol = solve({p, beta, mesh}, opts.fd.solver);
  const auto trace = make_trace(*mesh, sol);
  rep.lambda = sol.lambda;
  rep.sign_violations = trace.sign_violations;
  if (is_dirichlet(beta)) {
    rep.formula1 = dirichlet_hadamard(trace, v);
  } else {
    rep.formula1 = hadamard_formula1(trace, v);
    rep.formula2 = hadamard_formula2(trace, v);
  }
  rep.fd = fd_derivative(curve, p, beta, v, opts.fd);

  const double f1 = rep.formula1.value;
  rep.gap_fd = std::abs(f1 - rep.fd.estimate);
  rep.tol_fd = std::max(opts.fd_rel_tol * std::max(std::abs(rep.fd.estimate), std::abs(f1)),
                        opts.fd_sigma * rep.fd.uncertainty);
  rep.fd_agrees = rep.gap_fd <= rep.tol_fd;
  if (rep.formula2) {
    const double f2 = rep.formula2->value;
    const double scale = std::max({std::abs(f1), std::abs(f2), rep.formula1.magnitude});
    rep.gap_formulas = scale > 0.0 ? std::abs(f1 - f2) / scale : 0.0;
  }
  rep.formulas_agree = rep.gap_formulas <= opts.formula_rel_tol;

  rep.h = opts.fd.h;
  rep.boundary_nodes = static_cast<int>(mesh->boundary().size());
  rep.mesh_vertices = mesh->num_vertices();
  rep.residual_tol = opts.fd.solver.residual_tol;
  rep.lambda_rel_tol = opts.fd.solver.lambda_rel_tol;
  return rep;
}

// Beta asymptotics ------------------------------------------------------------

struct BetaSweepRow {
  double beta;
  double lambda;
  double profile_gap;  ///< max |phi_beta - phi_D| with both scaled to unit max norm
};

struct BetaSweep {
  std::vector<BetaSweepRow> rows;
  double lambda_dirichlet = 0.0;
  bool increasing = false;  ///< strictly
  bool bounded = false;
  bool gap_decreasing = false;
  double final_relative_gap = 0.0;  ///< (lambda_D - lambda_last) / lambda_D

  bool near_dirichlet(double rel = 0.05) const { return final_relative_gap <= rel; }
};

namespace detail {

inline void require_increasing(const std::vector<double>& betas) {
  if (betas.empty()) throw ConfigError("beta list is empty");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] >= 0.0) || std::isinf(betas[i])) throw ConfigError("beta values must be finite and non-negative");
    if (i && !(betas[i] > betas[i - 1])) throw ConfigError("beta list must be strictly increasing");
  }
}

inline void finish_sweep(BetaSweep& s) {
  s.increasing = s.bounded = s.gap_decreasing = true;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    if (s.rows[i].lambda > s.lambda_dirichlet) s.bounded = false;
    if (i && !(s.rows[i].lambda > s.rows[i - 1].lambda)) s.increasing = false;
    if (i && !(s.rows[i].profile_gap < s.rows[i - 1].profile_gap)) s.gap_decreasing = false;
  }
  s.final_relative_gap = (s.lambda_dirichlet - s.rows.back().lambda) / s.lambda_dirichlet;
}

inline std::vector<double> radial_profile(const RadialSolution& rs, int samples) {
  std::vector<double> u(samples + 1);
  for (int i = 0; i <= samples; ++i) u[i] = evaluate(rs, rs.R * i / samples).u;
  const double m = *std::max_element(u.begin(), u.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  for (double& x : u) x /= std::abs(m);
  return u;
}

inline double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
  return g;
}

}  // namespace detail

/// Sweep on the ball B(0, R) in R^n using the radial solver.
inline BetaSweep beta_sweep_ball(int n, double R, double p, const std::vector<double>& betas,
                                 const RadialOptions& opts = {}, int profile_samples = 2000) {
  detail::require_increasing(betas);
  const auto dir = solve_ball(n, R, p, kDirichlet, opts);
  const auto dir_profile = detail::radial_profile(dir, profile_samples);
  const auto rows = parallel_map<BetaSweepRow>(static_cast<int>(betas.size()), [&](int i) {
    const auto rs = solve_ball(n, R, p, betas[i], opts);
    return BetaSweepRow{betas[i], rs.lambda, detail::max_gap(detail::radial_profile(rs, profile_samples), dir_profile)};
  });
  BetaSweep s{rows, dir.lambda};
  detail::finish_sweep(s);
  return s;
}

/// Sweep on a star-shaped domain with the finite element solver (nodal gaps).
inline BetaSweep beta_sweep_fem(const BoundaryCurve& curve, double p, const std::vector<double>& betas, double h,
                                const SolverOptions& opts = {}) {
  detail::require_increasing(betas);
  auto mesh = std::make_shared<const Mesh>(triangulate(curve, h));
  auto scaled = [](Eigen::VectorXd u) { return Eigen::VectorXd(u / u.cwiseAbs().maxCoeff()); };
  const auto dir = solve({p, kDirichlet, mesh}, opts);
  const Eigen::VectorXd ud = scaled(dir.u);
  const auto rows = parallel_map<BetaSweepRow>(static_cast<int>(betas.size()), [&](int i) {
    const auto sol = solve({p, betas[i], mesh}, opts);
    return BetaSweepRow{betas[i], sol.lambda, (scaled(sol.u) - ud).cwiseAbs().maxCoeff()};
  });
  BetaSweep s{rows, dir.lambda};
  detail::finish_sweep(s);
  return s;
}

// Ball sign predicates --------------------------------------------------------

struct BallCheck {
  int n = 2;
  double R = 1.0, p = 2.0, beta = 1.0;
  double threshold = 0.0;
  bool hypothesis_i = false;
  bool hypothesis_ii = false;
  bool strict_ii = false;
  bool remark_radius = false;  ///< R > (n-1) / (beta^{1/(p-1)} (p-1))
  double flux = 0.0;           ///< int v . eta ds
  double lambda = 0.0;
  double bracket = 0.0;
  double derivative = 0.0;
  std::optional<int> predicted_sign;  ///< -1 or +1 (strict) when a hypothesis applies
  bool non_strict = false;            ///< prediction only claims <= 0 (>= 0)
  bool consistent = true;

  std::string summary() const {
    if (!predicted_sign) return "no prediction";
    const char* rel = *predicted_sign < 0 ? (non_strict ? "<= 0" : "< 0") : (non_strict ? ">= 0" : "> 0");
    return std::string("predicted derivative ") + rel + (consistent ? ", confirmed" : ", VIOLATED");
  }
};

inline BallCheck ball_monotonicity_check(int n, double R, double p, double beta, const VectorFieldSpec& v,
                                         const RadialOptions& opts = {}) {
  if (is_dirichlet(beta) || !(beta > 0.0)) throw DomainError("ball check needs a positive finite beta");
  BallCheck c;
  c.n = n;
  c.R = R;
  c.p = p;
  c.beta = beta;
  const auto rs = solve_ball(n, R, p, beta, opts);
  const auto d = ball_closed_form(rs, v);
  c.lambda = rs.lambda;
  c.bracket = ball_bracket_coefficient(rs);
  c.derivative = d.value;
  double flux_scale;
  if (const auto k = detail::constant_normal_speed(v)) {
    c.flux = *k * unit_sphere_area(n) * std::pow(R, n - 1);
    flux_scale = std::abs(c.flux);
  } else {
    const auto circle = BoundaryCurve::circle(R);
    c.flux = volume_and_rate(circle, v).rate;
    flux_scale = boundary_integral(circle, [&](double th, const BoundaryFrame& fr) { return std::abs(v(circle, th).dot(fr.normal)); });
  }
  if (!(std::abs(c.flux) > 1e-12 * flux_scale))
    throw DomainError("ball check needs a field with non-zero net normal flux");

  c.threshold = ball_beta_threshold(n, R, p);
  c.hypothesis_i = beta >= c.threshold;
  c.hypothesis_ii = R >= 1.0 && beta >= 1.0 && p >= n;
  c.strict_ii = c.hypothesis_ii && (R > 1.0 || beta > 1.0 || p > n);
  c.remark_radius = R > (n - 1) / (std::pow(beta, 1.0 / (p - 1.0)) * (p - 1.0));

  const int s = c.flux > 0.0 ? -1 : 1;
  if (c.hypothesis_i || c.strict_ii) {
    c.predicted_sign = s;
  } else if (c.hypothesis_ii) {
    c.predicted_sign = s;
    c.non_strict = true;
  }
  if (c.predicted_sign) {
    const double signed_value = *c.predicted_sign * c.derivative;
    c.consistent = c.non_strict ? signed_value >= 0.0 : signed_value > 0.0;
  }
  return c;
}

// Empirical large-beta threshold -----------------------------------------------

struct BetaStarRow {
  double beta;
  double derivative;
};

struct BetaStarReport {
  std::vector<BetaStarRow> rows;
  std::optional<double> beta_star;  ///< empty when inconclusive on this grid
};

inline std::vector<double> geometric_beta_grid(double first = 1.0, double last = 1024.0, double factor = 2.0) {
  std::vector<double> g;
  for (double b = first; b <= last * (1.0 + 1e-12); b *= factor) g.push_back(b);
  return g;
}

inline BetaStarReport beta_star_search(const BoundaryCurve& curve, double p, const VectorFieldSpec& v,
                                       const std::vector<double>& betas, double h, const SolverOptions& opts = {}) {
  detail::require_increasing(betas);
  auto mesh = std::make_shared<const Mesh>(triangulate(curve, h));
  for (const auto& bv : mesh->boundary()) {
    const auto fr = boundary_frame(curve, bv.theta);
    if (!(v(curve, bv.theta).dot(fr.normal) > 0.0))
      throw DomainError("beta-star search needs v . eta > 0 on the whole boundary");
  }
  BetaStarReport rep;
  rep.rows = parallel_map<BetaStarRow>(static_cast<int>(betas.size()), [&](int i) {
    const auto sol = solve({p, betas[i], mesh}, opts);
    return BetaStarRow{betas[i], hadamard_formula1(make_trace(*mesh, sol), v).value};
  });
  for (int i = static_cast<int>(rep.rows.size()) - 1; i >= 0 && rep.rows[i].derivative < 0.0; --i)
    rep.beta_star = rep.rows[i].beta;
  return rep;
}

// Stationarity ----------------------------------------------------------------

struct ZetaConstancy {
  ZetaProfile profile;
  double lambda = 0.0;
  int mesh_vertices = 0;
};

inline ZetaConstancy zeta_on_mesh(const std::shared_ptr<const Mesh>& mesh, double p, double beta,
                                  const SolverOptions& opts = {}) {
  const auto sol = solve({p, beta, mesh}, opts);
  return {zeta_profile(make_trace(*mesh, sol)), sol.lambda, mesh->num_vertices()};
}

/// Relative deviation of zeta from its mean on a disk mesh, followed by
/// `refinements` uniform refinements of that mesh.
inline std::vector<ZetaConstancy> zeta_constancy(int n, double R, double p, double beta, double h,
                                                 int refinements = 0, const SolverOptions& opts = {}) {
  if (n != 2) throw DomainError("stationarity profile is computed on planar disks only");
  auto mesh = std::make_shared<const Mesh>(triangulate(BoundaryCurve::circle(R), h));
  std::vector<ZetaConstancy> out{zeta_on_mesh(mesh, p, beta, opts)};
  for (int k = 0; k < refinements; ++k) {
    mesh = std::make_shared<const Mesh>(refine(*mesh));
    out.push_back(zeta_on_mesh(mesh, p, beta, opts));
  }
  return out;
}

/// Normal field g(theta) eta with g a smooth fit of zeta - mean(zeta) and zero
/// net flux. On a domain where zeta is not constant the derivative along it is
/// positive.
inline VectorFieldSpec volume_preserving_field(const BoundaryTrace& tr, int degree = 16) {
  const auto z = zeta_profile(tr);
  std::vector<double> dev;
  for (double x : z.zeta) dev.push_back(x - z.mean);
  auto g = TrigPolynomial::fit(z.theta, dev, degree);
  double flux = 0.0, len = 0.0;
  for (const auto& s : tr.samples) {
    flux += s.weight * g(s.theta);
    len += s.weight;
  }
  g = g + TrigPolynomial::constant(-flux / len);
  return VectorFieldSpec::normal(std::move(g));
}

}  // namespace rpl
