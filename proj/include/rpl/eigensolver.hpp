#pragma once

// First eigenpair of the Robin p-Laplacian on a triangulated domain with
// continuous piecewise-linear elements. The discrete problem is the
// minimisation of
//     J(u) = ( int |grad u|^p + beta int_{dOmega} |u|^p ) / int |u|^p
// with the integrals evaluated by fixed quadrature rules, so that the weak
// residual is exactly the gradient of the discrete functionals.

#include "rpl/errors.hpp"
#include "rpl/mesh.hpp"
#include "rpl/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rpl {

/// Distinguished beta value selecting the Dirichlet problem.
inline constexpr double kDirichlet = std::numeric_limits<double>::infinity();

inline bool is_dirichlet(double beta) { return std::isinf(beta); }

struct ProblemSpec {
  double p = 2.0;
  double beta = 1.0;  ///< >= 0, or kDirichlet
  std::shared_ptr<const Mesh> mesh;

  void validate() const {
    if (!(p > 1.0)) throw DomainError("p must exceed 1 (got " + std::to_string(p) + ")");
    if (!(beta >= 0.0)) throw DomainError("beta must be non-negative or Dirichlet");
    if (!mesh) throw DomainError("problem has no mesh");
  }
};

struct SolverOptions {
  double residual_tol = 1e-8;
  double lambda_rel_tol = 1e-10;
  int max_iterations = 100;          ///< Newton iterations per continuation step
  int max_inverse_iterations = 2000;
  double p_step = 0.25;              ///< continuation step in p
  double intermediate_tol = 1e-6;    ///< residual target for intermediate p
  double gradient_floor = 1e-14;
};

struct BoundarySample {
  int vertex;
  double theta;
  BoundaryFrame frame;
  double u;
  Vec2 grad;
  double dudn;       ///< grad . normal
  double grad_norm;
  bool flagged;      ///< gradient recovered with the 1-ring linear fallback
};

struct SolverDiagnostics {
  int iterations = 0;          ///< total linear solves (inverse iteration + Newton)
  int continuation_steps = 0;
  double residual = 0.0;       ///< dual-norm weak residual
  double rayleigh = 0.0;
};

struct EigenSolution {
  double p = 2.0;
  double beta = 1.0;
  double lambda = 0.0;
  Eigen::VectorXd u;            ///< nodal values, int |u|^p = 1
  double normalization = 1.0;   ///< int |u|^p dx of the stored field
  std::vector<BoundarySample> boundary;
  SolverDiagnostics diagnostics;
};

namespace detail {

struct EdgeGauss {
  std::array<double, 3> s{0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

/// Precomputed P1 geometry of a mesh.
class FemSpace {
 public:
  explicit FemSpace(const Mesh& mesh, bool dirichlet) : mesh_(mesh) {
    const int nt = mesh.num_triangles();
    area_.resize(nt);
    grads_.resize(nt);
    const auto& x = mesh.vertices();
    for (int t = 0; t < nt; ++t) {
      const auto& [a, b, c] = mesh.triangles()[t];
      const double twice = cross(x[b] - x[a], x[c] - x[a]);
      area_[t] = 0.5 * twice;
      // grad phi_a = perp(x_c - x_b) rotated inward / (2A)
      grads_[t] = {Vec2(x[b].y() - x[c].y(), x[c].x() - x[b].x()) / twice,
                   Vec2(x[c].y() - x[a].y(), x[a].x() - x[c].x()) / twice,
                   Vec2(x[a].y() - x[b].y(), x[b].x() - x[a].x()) / twice};
    }
    const auto& bd = mesh.boundary();
    const int nb = static_cast<int>(bd.size());
    for (int k = 0; k < nb; ++k) {
      const auto& p = bd[k];
      const auto& q = bd[(k + 1) % nb];
      const double tq = (k + 1 == nb) ? q.theta + kTwoPi : q.theta;
      edges_.push_back({p.vertex, q.vertex, arc_length(mesh.curve(), p.theta, tq)});
    }
    dof_.assign(mesh.num_vertices(), -1);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (!(dirichlet && mesh.is_boundary(v))) {
        dof_[v] = static_cast<int>(free_.size());
        free_.push_back(v);
      }
  }

  struct BoundaryEdge {
    int a, b;
    double length;
  };

  const Mesh& mesh() const { return mesh_; }
  double area(int t) const { return area_[t]; }
  const std::array<Vec2, 3>& grads(int t) const { return grads_[t]; }
  const std::vector<BoundaryEdge>& edges() const { return edges_; }
  int num_free() const { return static_cast<int>(free_.size()); }
  int dof(int v) const { return dof_[v]; }
  const std::vector<int>& free_vertices() const { return free_; }

  Vec2 gradient(int t, const Eigen::VectorXd& u) const {
    const auto& tri = mesh_.triangles()[t];
    return u[tri[0]] * grads_[t][0] + u[tri[1]] * grads_[t][1] + u[tri[2]] * grads_[t][2];
  }

 private:
  const Mesh& mesh_;
  std::vector<double> area_;
  std::vector<std::array<Vec2, 3>> grads_;
  std::vector<BoundaryEdge> edges_;
  std::vector<int> dof_;
  std::vector<int> free_;
};

struct Functionals {
  double gradient = 0.0;  ///< int |grad u|^p
  double boundary = 0.0;  ///< int_{dOmega} |u|^p
  double mass = 0.0;      ///< int |u|^p
};

inline Functionals evaluate_functionals(const FemSpace& fs, const Eigen::VectorXd& u, double p) {
  Functionals f;
  const auto& rule = triangle_rule_deg5();
  const auto& tris = fs.mesh().triangles();
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[t];
    f.gradient += fs.area(t) * std::pow(fs.gradient(t, u).norm(), p);
    double m = 0.0;
    for (const auto& q : rule) {
      const double uq = q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]];
      m += q.weight * std::pow(std::abs(uq), p);
    }
    f.mass += fs.area(t) * m;
  }
  const EdgeGauss eg;
  for (const auto& e : fs.edges()) {
    double b = 0.0;
    for (int q = 0; q < 3; ++q) b += eg.w[q] * std::pow(std::abs((1.0 - eg.s[q]) * u[e.a] + eg.s[q] * u[e.b]), p);
    f.boundary += e.length * b;
  }
  return f;
}

inline double signed_pow(double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); }

/// Weak residual r_i = d/du_i [ (G + beta B - lambda M) / p ] restricted to
/// free dofs, optionally with its Jacobian and the normalisation gradient
/// m_i = d/du_i (M / p).
struct Linearization {
  Eigen::VectorXd residual;
  Eigen::VectorXd mass_gradient;
  Eigen::SparseMatrix<double> jacobian;
};

inline Linearization linearize(const FemSpace& fs, const Eigen::VectorXd& u, double p, double beta, double lambda,
                               bool with_jacobian, double floor) {
  const int n = fs.num_free();
  const bool dirichlet = is_dirichlet(beta);
  Linearization lin;
  lin.residual = Eigen::VectorXd::Zero(n);
  lin.mass_gradient = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  if (with_jacobian) trip.reserve(fs.mesh().triangles().size() * 9 + fs.edges().size() * 4);
  const auto& rule = triangle_rule_deg5();
  const auto& tris = fs.mesh().triangles();
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[t];
    const auto& g = fs.grads(t);
    const double area = fs.area(t);
    const Vec2 grad = fs.gradient(t, u);
    const double gn = std::max(grad.norm(), floor);
    const double coef = std::pow(gn, p - 2.0);
    double mres[3] = {0, 0, 0};
    double mjac[3][3] = {{0}};
    for (const auto& q : rule) {
      const double uq = q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]];
      const double val = signed_pow(uq, p - 1.0);
      for (int a = 0; a < 3; ++a) mres[a] += q.weight * val * q.bary[a];
      if (with_jacobian) {
        const double d = (p - 1.0) * std::pow(std::max(std::abs(uq), floor), p - 2.0);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) mjac[a][b] += q.weight * d * q.bary[a] * q.bary[b];
      }
    }
    for (int a = 0; a < 3; ++a) {
      const int ia = fs.dof(tri[a]);
      if (ia < 0) continue;
      lin.residual[ia] += area * (coef * grad.dot(g[a]) - lambda * mres[a]);
      lin.mass_gradient[ia] += area * mres[a];
      if (!with_jacobian) continue;
      for (int b = 0; b < 3; ++b) {
        const int ib = fs.dof(tri[b]);
        if (ib < 0) continue;
        const double stiff =
            coef * g[a].dot(g[b]) + (p - 2.0) * coef / (gn * gn) * grad.dot(g[a]) * grad.dot(g[b]);
        trip.emplace_back(ia, ib, area * (stiff - lambda * mjac[a][b]));
      }
    }
  }
  if (!dirichlet && beta > 0.0) {
    const EdgeGauss eg;
    for (const auto& e : fs.edges()) {
      const int ids[2] = {fs.dof(e.a), fs.dof(e.b)};
      double bres[2] = {0, 0};
      double bjac[2][2] = {{0, 0}, {0, 0}};
      for (int q = 0; q < 3; ++q) {
        const double phi[2] = {1.0 - eg.s[q], eg.s[q]};
        const double uq = phi[0] * u[e.a] + phi[1] * u[e.b];
        const double val = signed_pow(uq, p - 1.0);
        const double d = (p - 1.0) * std::pow(std::max(std::abs(uq), floor), p - 2.0);
        for (int a = 0; a < 2; ++a) {
          bres[a] += eg.w[q] * val * phi[a];
          for (int b = 0; b < 2; ++b) bjac[a][b] += eg.w[q] * d * phi[a] * phi[b];
        }
      }
      for (int a = 0; a < 2; ++a) {
        lin.residual[ids[a]] += beta * e.length * bres[a];
        if (with_jacobian)
          for (int b = 0; b < 2; ++b) trip.emplace_back(ids[a], ids[b], beta * e.length * bjac[a][b]);
      }
    }
  }
  if (with_jacobian) {
    lin.jacobian.resize(n, n);
    lin.jacobian.setFromTriplets(trip.begin(), trip.end());
  }
  return lin;
}

/// p = 2 matrices on the free dofs: stiffness (+ beta boundary mass) and mass.
struct LinearMatrices {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> boundary_mass;
  Eigen::SparseMatrix<double> mass;
};

inline LinearMatrices assemble_linear(const FemSpace& fs) {
  const int n = fs.num_free();
  std::vector<Eigen::Triplet<double>> ks, ms, bs;
  const auto& tris = fs.mesh().triangles();
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[t];
    const auto& g = fs.grads(t);
    for (int a = 0; a < 3; ++a) {
      const int ia = fs.dof(tri[a]);
      if (ia < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int ib = fs.dof(tri[b]);
        if (ib < 0) continue;
        ks.emplace_back(ia, ib, fs.area(t) * g[a].dot(g[b]));
        ms.emplace_back(ia, ib, fs.area(t) * (a == b ? 1.0 / 6.0 : 1.0 / 12.0));
      }
    }
  }
  for (const auto& e : fs.edges()) {
    const int ia = fs.dof(e.a), ib = fs.dof(e.b);
    if (ia < 0 || ib < 0) continue;
    bs.emplace_back(ia, ia, e.length / 3.0);
    bs.emplace_back(ib, ib, e.length / 3.0);
    bs.emplace_back(ia, ib, e.length / 6.0);
    bs.emplace_back(ib, ia, e.length / 6.0);
  }
  LinearMatrices out;
  out.stiffness.resize(n, n);
  out.stiffness.setFromTriplets(ks.begin(), ks.end());
  out.mass.resize(n, n);
  out.mass.setFromTriplets(ms.begin(), ms.end());
  out.boundary_mass.resize(n, n);
  out.boundary_mass.setFromTriplets(bs.begin(), bs.end());
  return out;
}

/// Dual norm sqrt(r^T (K + M)^{-1} r) with K, M the p = 2 stiffness and mass.
class DualNorm {
 public:
  explicit DualNorm(const LinearMatrices& lm) {
    Eigen::SparseMatrix<double> gram = lm.stiffness + lm.mass;
    solver_.compute(gram);
    if (solver_.info() != Eigen::Success) throw ConvergenceError("dual-norm Gram matrix factorization failed");
  }
  double operator()(const Eigen::VectorXd& r) const { return std::sqrt(std::max(0.0, r.dot(solver_.solve(r)))); }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

inline Eigen::VectorXd scatter(const FemSpace& fs, const Eigen::VectorXd& free_values) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(fs.mesh().num_vertices());
  for (int k = 0; k < fs.num_free(); ++k) u[fs.free_vertices()[k]] = free_values[k];
  return u;
}

inline Eigen::VectorXd gather(const FemSpace& fs, const Eigen::VectorXd& u) {
  Eigen::VectorXd out(fs.num_free());
  for (int k = 0; k < fs.num_free(); ++k) out[k] = u[fs.free_vertices()[k]];
  return out;
}

inline double rayleigh_from(const Functionals& f, double beta) {
  return (f.gradient + (is_dirichlet(beta) ? 0.0 : beta * f.boundary)) / f.mass;
}

}  // namespace detail

/// Rayleigh quotient of a nodal field.
inline double rayleigh(const ProblemSpec& spec, const Eigen::VectorXd& u) {
  spec.validate();
  if (u.size() != spec.mesh->num_vertices()) throw DomainError("nodal field size does not match the mesh");
  if (u.cwiseAbs().maxCoeff() == 0.0) throw DomainError("Rayleigh quotient of the zero field");
  if (is_dirichlet(spec.beta))
    for (const auto& b : spec.mesh->boundary())
      if (u[b.vertex] != 0.0) throw DomainError("Dirichlet Rayleigh quotient requires a zero boundary trace");
  detail::FemSpace fs(*spec.mesh, is_dirichlet(spec.beta));
  return detail::rayleigh_from(detail::evaluate_functionals(fs, u, spec.p), spec.beta);
}

struct RecoveredGradient {
  Vec2 grad;
  bool flagged;
};

/// Gradient at every boundary vertex (in mesh.boundary() order) from a
/// least-squares quadratic fit over the 2-ring vertex patch. Rank-deficient
/// patches fall back to a linear fit over the 1-ring and are flagged.
inline std::vector<RecoveredGradient> recover_boundary_gradient(const Mesh& mesh, const Eigen::VectorXd& u) {
  std::vector<std::vector<int>> adj(mesh.num_vertices());
  for (const auto& t : mesh.triangles())
    for (int k = 0; k < 3; ++k) {
      adj[t[k]].push_back(t[(k + 1) % 3]);
      adj[t[k]].push_back(t[(k + 2) % 3]);
    }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  const auto& x = mesh.vertices();
  const double scale = mesh.h();
  std::vector<RecoveredGradient> out;
  out.reserve(mesh.boundary().size());

  auto fit = [&](int v, const std::vector<int>& patch, int cols) -> std::optional<Vec2> {
    Eigen::MatrixXd a(patch.size(), cols);
    Eigen::VectorXd rhs(patch.size());
    for (std::size_t i = 0; i < patch.size(); ++i) {
      const Vec2 d = (x[patch[i]] - x[v]) / scale;
      a(i, 0) = 1.0;
      a(i, 1) = d.x();
      a(i, 2) = d.y();
      if (cols == 6) {
        a(i, 3) = d.x() * d.x();
        a(i, 4) = d.x() * d.y();
        a(i, 5) = d.y() * d.y();
      }
      rhs(i) = u[patch[i]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) return std::nullopt;
    const Eigen::VectorXd c = qr.solve(rhs);
    return Vec2(c(1), c(2)) / scale;
  };

  for (const auto& bv : mesh.boundary()) {
    const int v = bv.vertex;
    std::vector<int> patch{v};
    for (int n1 : adj[v]) {
      patch.push_back(n1);
      for (int n2 : adj[n1]) patch.push_back(n2);
    }
    std::sort(patch.begin(), patch.end());
    patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
    if (auto g = patch.size() >= 6 ? fit(v, patch, 6) : std::nullopt) {
      out.push_back({*g, false});
      continue;
    }
    std::vector<int> ring1{v};
    ring1.insert(ring1.end(), adj[v].begin(), adj[v].end());
    auto g = fit(v, ring1, 3);
    out.push_back({g.value_or(Vec2::Zero()), true});
  }
  return out;
}

/// Dual-norm weak residual of a solution, tested against every basis
/// function (zero-trace ones only in the Dirichlet case).
inline double residual(const ProblemSpec& spec, const EigenSolution& sol) {
  spec.validate();
  detail::FemSpace fs(*spec.mesh, is_dirichlet(spec.beta));
  const auto lin = detail::linearize(fs, sol.u, spec.p, spec.beta, sol.lambda, false, 1e-14);
  return detail::DualNorm(detail::assemble_linear(fs))(lin.residual);
}

namespace detail {

inline std::vector<BoundarySample> boundary_samples(const Mesh& mesh, const Eigen::VectorXd& u) {
  const auto grads = recover_boundary_gradient(mesh, u);
  std::vector<BoundarySample> out;
  out.reserve(grads.size());
  for (std::size_t k = 0; k < grads.size(); ++k) {
    const auto& bv = mesh.boundary()[k];
    BoundarySample s;
    s.vertex = bv.vertex;
    s.theta = bv.theta;
    s.frame = boundary_frame(mesh.curve(), bv.theta);
    s.u = u[bv.vertex];
    s.grad = grads[k].grad;
    s.dudn = s.grad.dot(s.frame.normal);
    s.grad_norm = s.grad.norm();
    s.flagged = grads[k].flagged;
    out.push_back(s);
  }
  return out;
}

inline void normalize(const FemSpace& fs, Eigen::VectorXd& u, double p) {
  const double m = evaluate_functionals(fs, u, p).mass;
  u /= std::pow(m, 1.0 / p);
}

/// Smallest eigenpair of (K + beta B) x = lambda M x by inverse iteration.
inline Eigen::VectorXd linear_eigenvector(const FemSpace& fs, double beta, const SolverOptions& opts,
                                          const DualNorm& dual, SolverDiagnostics& diag) {
  const auto lm = assemble_linear(fs);
  Eigen::SparseMatrix<double> k = lm.stiffness;
  if (!is_dirichlet(beta)) k += beta * lm.boundary_mass;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(k);
  if (solver.info() != Eigen::Success) throw ConvergenceError("stiffness factorization failed");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(fs.num_free());
  double lambda = 0.0;
  for (int it = 0; it < opts.max_inverse_iterations; ++it) {
    Eigen::VectorXd y = solver.solve(lm.mass * x);
    y /= std::sqrt(y.dot(lm.mass * y));
    const Eigen::VectorXd ky = k * y;
    const double next = y.dot(ky);
    const double res = dual(ky - next * (lm.mass * y));
    const bool settled = std::abs(next - lambda) <= opts.lambda_rel_tol * std::abs(next);
    x = y;
    lambda = next;
    ++diag.iterations;
    if (settled && res < 0.1 * opts.residual_tol) return x;
  }
  throw ConvergenceError("inverse iteration did not converge in " + std::to_string(opts.max_inverse_iterations) +
                         " iterations");
}

/// Newton iteration on the bordered system
///   [ J    -m ] [du]   [ -r          ]
///   [ m^T   0 ] [dl] = [ (1 - M) / p ]
/// followed by renormalisation and a Rayleigh-quotient update of lambda.
inline void newton_eigen(const FemSpace& fs, Eigen::VectorXd& u, double p, double beta, double tol,
                         const SolverOptions& opts, const DualNorm& dual, SolverDiagnostics& diag) {
  const int n = fs.num_free();
  normalize(fs, u, p);
  double lambda = rayleigh_from(evaluate_functionals(fs, u, p), beta);
  double prev_lambda = std::numeric_limits<double>::quiet_NaN();
  auto lin = linearize(fs, u, p, beta, lambda, true, opts.gradient_floor);
  double res = dual(lin.residual);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const bool lambda_settled = std::abs(lambda - prev_lambda) <= opts.lambda_rel_tol * std::max(1.0, std::abs(lambda));
    if (res < tol && (lambda_settled || tol > opts.residual_tol)) return;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(lin.jacobian.nonZeros() + 2 * n + 1);
    for (int c = 0; c < lin.jacobian.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator itj(lin.jacobian, c); itj; ++itj)
        trip.emplace_back(itj.row(), itj.col(), itj.value());
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(i, n, -lin.mass_gradient[i]);
      trip.emplace_back(n, i, lin.mass_gradient[i]);
    }
    Eigen::SparseMatrix<double> big(n + 1, n + 1);
    big.setFromTriplets(trip.begin(), trip.end());
    big.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(big);
    if (lu.info() != Eigen::Success) throw ConvergenceError("Newton system factorization failed");
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -lin.residual;
    rhs[n] = 0.0;  // u is normalised before every step
    const Eigen::VectorXd step = lu.solve(rhs);
    ++diag.iterations;

    const Eigen::VectorXd u_free = gather(fs, u);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd trial = scatter(fs, u_free + alpha * step.head(n));
      if (trial.sum() < 0.0) trial = -trial;
      normalize(fs, trial, p);
      const double trial_lambda = rayleigh_from(evaluate_functionals(fs, trial, p), beta);
      auto trial_lin = linearize(fs, trial, p, beta, trial_lambda, true, opts.gradient_floor);
      const double trial_res = dual(trial_lin.residual);
      if (trial_res < (1.0 - 1e-4 * alpha) * res || trial_res < 0.1 * tol) {
        u = std::move(trial);
        prev_lambda = lambda;
        lambda = trial_lambda;
        lin = std::move(trial_lin);
        res = trial_res;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (res < tol) return;
      throw ConvergenceError("line search failed at p = " + std::to_string(p) +
                             ", residual = " + std::to_string(res));
    }
  }
  throw ConvergenceError("Newton iteration did not converge at p = " + std::to_string(p) +
                         ", residual = " + std::to_string(res));
}

}  // namespace detail

/// Computes (lambda_1, u) with int |u|^p = 1 and u > 0.
inline EigenSolution solve(const ProblemSpec& spec, const SolverOptions& opts = {}) {
  spec.validate();
  const Mesh& mesh = *spec.mesh;
  const bool dirichlet = is_dirichlet(spec.beta);
  detail::FemSpace fs(mesh, dirichlet);
  const detail::DualNorm dual(detail::assemble_linear(fs));

  EigenSolution sol;
  sol.p = spec.p;
  sol.beta = spec.beta;

  if (!dirichlet && spec.beta == 0.0) {
    // Neumann: the constant minimises the quotient with value zero.
    sol.u = Eigen::VectorXd::Constant(mesh.num_vertices(), std::pow(mesh.area(), -1.0 / spec.p));
  } else {
    Eigen::VectorXd x = detail::linear_eigenvector(fs, spec.beta, opts, dual, sol.diagnostics);
    Eigen::VectorXd u = detail::scatter(fs, x);
    if (u.sum() < 0.0) u = -u;
    if (spec.p != 2.0) {
      const int steps = static_cast<int>(std::ceil(std::abs(spec.p - 2.0) / opts.p_step - 1e-12));
      for (int s = 1; s <= steps; ++s) {
        const double ps = 2.0 + (spec.p - 2.0) * s / steps;
        detail::newton_eigen(fs, u, ps, spec.beta, s == steps ? opts.residual_tol : opts.intermediate_tol, opts, dual,
                             sol.diagnostics);
        ++sol.diagnostics.continuation_steps;
      }
    }
    detail::normalize(fs, u, spec.p);
    sol.u = std::move(u);
  }

  if (sol.u.sum() < 0.0) sol.u = -sol.u;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (dirichlet && mesh.is_boundary(v)) continue;
    if (!(sol.u[v] > 0.0))
      throw ConvergenceError("computed eigenfunction is not positive at vertex " + std::to_string(v));
  }
  const auto f = detail::evaluate_functionals(fs, sol.u, spec.p);
  sol.normalization = f.mass;
  sol.lambda = detail::rayleigh_from(f, spec.beta);
  // rounding in the element gradients of a constant field
  if (!dirichlet && spec.beta == 0.0) sol.lambda = 0.0;
  const auto lin = detail::linearize(fs, sol.u, spec.p, spec.beta, sol.lambda, false, opts.gradient_floor);
  sol.diagnostics.residual = dual(lin.residual);
  sol.diagnostics.rayleigh = sol.lambda;
  if (sol.diagnostics.residual > opts.residual_tol)
    throw ConvergenceError("final weak residual " + std::to_string(sol.diagnostics.residual) + " exceeds tolerance");
  sol.boundary = detail::boundary_samples(mesh, sol.u);
  return sol;
}

}  // namespace rpl
