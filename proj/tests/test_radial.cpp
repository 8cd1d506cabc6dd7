#include "rpl/radial.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rpl;

namespace {
const double pi = std::numbers::pi;

double norm_p(const RadialSolution& s) {
  // composite Simpson on [0, R] of |u|^p r^{n-1} |S^{n-1}|
  const int N = 4000;
  double acc = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double r = s.R * i / N;
    const double w = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2);
    acc += w * std::pow(std::abs(evaluate(s, r).u), s.p) * std::pow(r, s.n - 1);
  }
  return acc * s.R / (3.0 * N) * unit_sphere_area(s.n);
}
}  // namespace

TEST(UnitSphereArea, LowDimensions) {
  EXPECT_NEAR(unit_sphere_area(2), 2 * pi, 1e-14);
  EXPECT_NEAR(unit_sphere_area(3), 4 * pi, 1e-13);
  EXPECT_NEAR(unit_sphere_area(4), 2 * pi * pi, 1e-13);
}

TEST(SolveBall, NeumannIsConstant) {
  const auto s = solve_ball(3, 1.5, 2.5, 0.0);
  EXPECT_EQ(s.lambda, 0.0);
  EXPECT_NEAR(evaluate(s, 0.3).u, evaluate(s, 1.4).u, 1e-15);
  EXPECT_NEAR(norm_p(s), 1.0, 1e-10);
}

TEST(SolveBall, LinearRobinMatchesBesselRoot) {
  for (double beta : {0.5, 1.0, 5.0}) EXPECT_NEAR(solve_ball(2, 1.0, 2.0, beta).lambda, oracle::disk_robin_lambda(beta), 1e-8);
  EXPECT_NEAR(solve_ball(2, 0.7, 2.0, 2.0).lambda, oracle::disk_robin_lambda(2.0, 0.7), 1e-8);
}

TEST(SolveBall, LinearDirichletMatchesBesselZero) {
  EXPECT_NEAR(solve_ball(2, 1.0, 2.0, kDirichlet).lambda, oracle::disk_dirichlet_lambda(), 1e-8);
}

TEST(SolveBall, ThreeDimensionalLinearCases) {
  // u = sin(kr)/r: Dirichlet k = pi; Robin beta = 1 gives k cot k = 0, k = pi/2
  EXPECT_NEAR(solve_ball(3, 1.0, 2.0, kDirichlet).lambda, pi * pi, 1e-8);
  EXPECT_NEAR(solve_ball(3, 1.0, 2.0, 1.0).lambda, pi * pi / 4, 1e-8);
}

TEST(SolveBall, DirichletScalingLaw) {
  const double l1 = solve_ball(2, 1.0, 2.0, kDirichlet).lambda;
  for (double R : {0.5, 2.0}) EXPECT_NEAR(solve_ball(2, R, 2.0, kDirichlet).lambda, l1 / (R * R), 1e-8 * l1 / (R * R));
  // p-homogeneity: lambda(R) = lambda(1) / R^p
  const double q1 = solve_ball(2, 1.0, 3.0, kDirichlet).lambda;
  EXPECT_NEAR(solve_ball(2, 2.0, 3.0, kDirichlet).lambda, q1 / 8.0, 1e-8 * q1);
}

TEST(SolveBall, BoundaryIdentityAndProfileShape) {
  for (double p : {1.5, 2.0, 3.0, 4.0})
    for (double beta : {0.3, 1.0, 7.0}) {
      const auto s = solve_ball(2, 1.0, p, beta);
      const double uR = s.boundary_u(), duR = s.boundary_du();
      EXPECT_NEAR(std::abs(duR), std::pow(beta, 1.0 / (p - 1.0)) * std::abs(uR), 1e-8 * std::abs(duR));
      const auto at_r = evaluate(s, 1.0);
      EXPECT_NEAR(at_r.u, uR, 1e-12);
      EXPECT_NEAR(at_r.du, duR, 1e-10 * std::abs(duR));
      EXPECT_EQ(evaluate(s, 0.0).du, 0.0);
      double prev = evaluate(s, 0.0).u;
      for (int i = 1; i <= 100; ++i) {
        const auto v = evaluate(s, i / 100.0);
        EXPECT_GT(v.u, 0.0);
        EXPECT_LE(v.du, 0.0);
        EXPECT_LE(v.u, prev + 1e-14);
        prev = v.u;
      }
    }
}

TEST(SolveBall, NormalizedInTheRadialWeight) {
  for (int n : {2, 3})
    for (double p : {1.5, 2.0, 3.0}) EXPECT_NEAR(norm_p(solve_ball(n, 1.2, p, 1.0)), 1.0, 1e-7) << n << " " << p;
  EXPECT_NEAR(norm_p(solve_ball(2, 1.0, 2.0, kDirichlet)), 1.0, 1e-7);
}

TEST(SolveBall, LinearProfileIsBesselJ0) {
  const auto s = solve_ball(2, 1.0, 2.0, 1.0);
  const double k = std::sqrt(s.lambda), u0 = evaluate(s, 0.0).u;
  for (double r : {0.1, 0.35, 0.6, 0.95, 1.0}) EXPECT_NEAR(evaluate(s, r).u / u0, std::cyl_bessel_j(0.0, k * r), 1e-6);
}

TEST(SolveBall, MonotoneInBetaTowardsDirichlet) {
  for (double p : {2.0, 3.0}) {
    const double dir = solve_ball(2, 1.0, p, kDirichlet).lambda;
    double prev = 0.0;
    for (double beta : {0.1, 1.0, 10.0, 100.0, 1e4}) {
      const double lam = solve_ball(2, 1.0, p, beta).lambda;
      EXPECT_GT(lam, prev);
      EXPECT_LE(lam, dir);
      prev = lam;
    }
    EXPECT_NEAR(prev / dir, 1.0, 0.05);
  }
}

TEST(SolveBall, IntegratorToleranceConverged) {
  RadialOptions tight;
  tight.ode_tol = 1e-12;
  for (double p : {1.5, 3.0}) {
    const double a = solve_ball(2, 1.0, p, 1.0).lambda, b = solve_ball(2, 1.0, p, 1.0, tight).lambda;
    EXPECT_NEAR(a, b, 1e-9 * b);
  }
}

TEST(SolveBall, InvalidArguments) {
  EXPECT_THROW(solve_ball(1, 1.0, 2.0, 1.0), DomainError);
  EXPECT_THROW(solve_ball(2, 0.0, 2.0, 1.0), DomainError);
  EXPECT_THROW(solve_ball(2, 1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(solve_ball(2, 1.0, 2.0, -0.5), DomainError);
}

TEST(Evaluate, OutOfRange) {
  const auto s = solve_ball(2, 1.0, 2.0, 1.0);
  EXPECT_THROW(evaluate(s, -0.1), DomainError);
  EXPECT_THROW(evaluate(s, 1.01), DomainError);
}
