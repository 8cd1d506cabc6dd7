#include "rpl/eigensolver.hpp"
#include "rpl/radial.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace rpl;

namespace {

const double pi = std::numbers::pi;

std::shared_ptr<const Mesh> disk_mesh(double h, double R = 1.0) {
  return std::make_shared<const Mesh>(triangulate(BoundaryCurve::circle(R), h));
}

std::shared_ptr<const Mesh> ellipse_mesh(double h) {
  return std::make_shared<const Mesh>(triangulate(BoundaryCurve(TrigPolynomial({1.0, 0.0, 0.2}, {0.0, 0.0, 0.0})), h));
}

Eigen::VectorXd nodal(const Mesh& m, double (*f)(const Vec2&)) {
  Eigen::VectorXd u(m.num_vertices());
  for (int i = 0; i < m.num_vertices(); ++i) u[i] = f(m.vertices()[i]);
  return u;
}

void expect_solution_invariants(const ProblemSpec& spec, const EigenSolution& sol) {
  EXPECT_GT(sol.u.minCoeff(), is_dirichlet(spec.beta) ? -1e-300 : 0.0);
  if (!is_dirichlet(spec.beta)) EXPECT_GT(sol.u.minCoeff(), 0.0);
  EXPECT_NEAR(sol.normalization, 1.0, 1e-10);
  EXPECT_NEAR(rayleigh(spec, sol.u), sol.lambda, 1e-10 * std::max(1.0, sol.lambda));
  EXPECT_LE(residual(spec, sol), 1e-8);
}

}  // namespace

TEST(Solve, NeumannGivesZeroAndConstant) {
  for (double p : {2.0, 3.0, 1.5}) {
    const auto m = ellipse_mesh(0.08);
    const auto sol = solve({p, 0.0, m});
    EXPECT_EQ(sol.lambda, 0.0);
    EXPECT_NEAR(sol.u.maxCoeff() - sol.u.minCoeff(), 0.0, 1e-14);
    EXPECT_NEAR(sol.u[0], std::pow(m->area(), -1.0 / p), 1e-12);
  }
}

TEST(Solve, LinearRobinDiskMatchesBesselRoot) {
  const auto m = disk_mesh(0.02);
  for (double beta : {0.5, 1.0, 5.0}) {
    const ProblemSpec spec{2.0, beta, m};
    const auto sol = solve(spec);
    const double exact = oracle::disk_robin_lambda(beta);
    EXPECT_NEAR(sol.lambda / exact, 1.0, 0.01) << beta;
    EXPECT_NEAR(sol.lambda / exact, 1.0, 1e-3) << beta;
    expect_solution_invariants(spec, sol);
  }
}

TEST(Solve, DirichletDiskMatchesBesselZero) {
  const ProblemSpec spec{2.0, kDirichlet, disk_mesh(0.02)};
  const auto sol = solve(spec);
  EXPECT_NEAR(sol.lambda / oracle::disk_dirichlet_lambda(), 1.0, 0.01);
  EXPECT_NEAR(sol.normalization, 1.0, 1e-10);
  EXPECT_LE(residual(spec, sol), 1e-8);
  for (const auto& b : sol.boundary) EXPECT_EQ(sol.u[b.vertex], 0.0);
}

TEST(Solve, NonlinearMatchesRadialShooting) {
  const auto m = disk_mesh(0.04);
  for (double p : {1.5, 3.0}) {
    const ProblemSpec spec{p, 1.0, m};
    const auto sol = solve(spec);
    const double radial = solve_ball(2, 1.0, p, 1.0).lambda;
    EXPECT_NEAR(sol.lambda / radial, 1.0, 0.02) << p;
    expect_solution_invariants(spec, sol);
  }
}

TEST(Solve, NonlinearDirichlet) {
  const ProblemSpec spec{3.0, kDirichlet, disk_mesh(0.04)};
  const auto sol = solve(spec);
  EXPECT_NEAR(sol.lambda / solve_ball(2, 1.0, 3.0, kDirichlet).lambda, 1.0, 0.02);
  EXPECT_LE(residual(spec, sol), 1e-8);
}

TEST(Solve, RejectsInvalidProblems) {
  const auto m = disk_mesh(0.1);
  EXPECT_THROW(solve({1.0, 1.0, m}), DomainError);
  EXPECT_THROW(solve({0.5, 1.0, m}), DomainError);
  EXPECT_THROW(solve({2.0, -1.0, m}), DomainError);
  EXPECT_THROW(solve({2.0, 1.0, nullptr}), DomainError);
}

TEST(Solve, IterationCapRaisesConvergenceError) {
  SolverOptions o;
  o.max_iterations = 1;
  EXPECT_THROW(solve({3.0, 1.0, disk_mesh(0.1)}, o), ConvergenceError);
  SolverOptions lin;
  lin.max_inverse_iterations = 1;
  EXPECT_THROW(solve({2.0, 1.0, disk_mesh(0.1)}, lin), ConvergenceError);
}

TEST(Solve, Deterministic) {
  const auto m = ellipse_mesh(0.06);
  const auto a = solve({2.5, 1.0, m}), b = solve({2.5, 1.0, m});
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ((a.u - b.u).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solve, MonotoneInBetaAndBoundedByDirichlet) {
  for (double p : {2.0, 3.0}) {
    const auto m = ellipse_mesh(0.06);
    const double dir = solve({p, kDirichlet, m}).lambda;
    double prev = 0.0;
    for (double beta : {0.0, 0.3, 1.0, 4.0, 30.0}) {
      const double lam = solve({p, beta, m}).lambda;
      EXPECT_GE(lam, prev) << p << " " << beta;
      EXPECT_LE(lam, dir) << p << " " << beta;
      prev = lam;
    }
  }
}

TEST(Solve, MeshConvergenceLinearDisk) {
  const double l1 = solve({2.0, 1.0, disk_mesh(0.1)}).lambda;
  const double l2 = solve({2.0, 1.0, disk_mesh(0.05)}).lambda;
  const double l3 = solve({2.0, 1.0, disk_mesh(0.025)}).lambda;
  EXPECT_LE(std::abs(l3 - l2), 0.5 * std::abs(l2 - l1));
}

TEST(Solve, DilationLowersEigenvalue) {
  for (double p : {2.0, 3.0}) {
    const double base = solve({p, 1.0, disk_mesh(0.05)}).lambda;
    for (double t : {1.1, 1.5, 2.0}) EXPECT_LE(solve({p, 1.0, disk_mesh(0.05, t)}).lambda, base) << p << " " << t;
  }
}

TEST(Rayleigh, ConstantFields) {
  const auto m = disk_mesh(0.05);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(m->num_vertices(), 0.7);
  EXPECT_NEAR(rayleigh({2.0, 0.0, m}, c), 0.0, 1e-25);
  // boundary length is exact, the polygon area lags pi by O(h^2)
  for (double p : {2.0, 3.0}) EXPECT_NEAR(rayleigh({p, 1.5, m}, c), 2.0 * 1.5, 2.0 * 1.5 * 2 * 0.05 * 0.05);
  EXPECT_NEAR(rayleigh({2.0, 1.5, m}, c), 1.5 * kTwoPi / m->area(), 1e-12);
}

TEST(Rayleigh, ScaleInvariant) {
  const auto m = ellipse_mesh(0.08);
  const auto u = nodal(*m, [](const Vec2& x) { return 1.0 + 0.3 * x.x() - x.y() * x.y(); });
  for (double p : {1.5, 2.0, 3.0}) {
    const ProblemSpec spec{p, 0.8, m};
    const double r = rayleigh(spec, u);
    EXPECT_NEAR(rayleigh(spec, -2.5 * u), r, 1e-12 * r);
    EXPECT_NEAR(rayleigh(spec, 1e-3 * u), r, 1e-12 * r);
  }
}

TEST(Rayleigh, ErrorPaths) {
  const auto m = disk_mesh(0.1);
  EXPECT_THROW(rayleigh({2.0, 1.0, m}, Eigen::VectorXd::Zero(m->num_vertices())), DomainError);
  EXPECT_THROW(rayleigh({2.0, kDirichlet, m}, Eigen::VectorXd::Ones(m->num_vertices())), DomainError);
  EXPECT_THROW(rayleigh({2.0, 1.0, m}, Eigen::VectorXd::Ones(3)), DomainError);
}

TEST(RecoverGradient, ReproducesLinearField) {
  const auto m = ellipse_mesh(0.05);
  const auto g = recover_boundary_gradient(*m, nodal(*m, [](const Vec2& x) { return x.x(); }));
  ASSERT_EQ(g.size(), m->boundary().size());
  for (const auto& r : g) EXPECT_NEAR((r.grad - Vec2(1, 0)).norm(), 0.0, 1e-12);
}

TEST(RecoverGradient, ReproducesQuadraticField) {
  const auto m = disk_mesh(0.05);
  const auto g = recover_boundary_gradient(*m, nodal(*m, [](const Vec2& x) { return x.x() * x.x() - x.y() * x.y(); }));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec2 x = m->vertices()[m->boundary()[i].vertex];
    EXPECT_NEAR((g[i].grad - Vec2(2 * x.x(), -2 * x.y())).norm(), 0.0, 1e-8);
    EXPECT_FALSE(g[i].flagged);
  }
}

TEST(RecoverGradient, RobinBoundaryConditionHoldsOnTrace) {
  for (double p : {2.0, 3.0}) {
    const auto m = ellipse_mesh(0.02);
    const double beta = 1.0;
    const auto sol = solve({p, beta, m});
    for (const auto& s : sol.boundary) {
      const double ratio = std::pow(s.grad_norm, p - 2) * std::abs(s.dudn) / (beta * std::pow(s.u, p - 1));
      EXPECT_NEAR(ratio, 1.0, 0.05) << "p=" << p << " theta=" << s.theta;
      EXPECT_LT(s.dudn, 0.0);
    }
  }
}

TEST(Residual, DetectsPerturbedSolution) {
  const ProblemSpec spec{2.0, 1.0, disk_mesh(0.05)};
  auto sol = solve(spec);
  EXPECT_LE(residual(spec, sol), 1e-8);
  sol.u.array() += 0.1;
  EXPECT_GT(residual(spec, sol), 1e-3);
}

TEST(Residual, NonlinearAndDirichlet) {
  const auto m = ellipse_mesh(0.06);
  for (const ProblemSpec& spec : {ProblemSpec{1.5, 2.0, m}, ProblemSpec{2.0, kDirichlet, m}}) {
    const auto sol = solve(spec);
    EXPECT_LE(residual(spec, sol), 1e-8);
    EXPECT_LE(sol.diagnostics.residual, 1e-8);
  }
}
