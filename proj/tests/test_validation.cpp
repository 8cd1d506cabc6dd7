#include "rpl/validation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rpl;

namespace {

BoundaryCurve ellipse_like() { return BoundaryCurve(TrigPolynomial({1.0, 0.0, 0.2}, {0.0, 0.0, 0.0})); }

FdOptions fd_options(double h, double t0 = 0.02) {
  FdOptions o;
  o.h = h;
  o.schedule.t0 = t0;
  return o;
}

}  // namespace

TEST(ParallelMap, KeepsIndexOrderAndPropagatesErrors) {
  const auto sq = parallel_map<int>(10, [](int i) { return i * i; });
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sq[i], i * i);
  EXPECT_THROW(parallel_map<int>(4, [](int i) -> int {
                 if (i == 2) throw DomainError("boom");
                 return i;
               }),
               DomainError);
}

TEST(FdSchedule, Validation) {
  FdSchedule s;
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.steps(), (std::vector<double>{0.02, 0.01, 0.005}));
  s.halvings = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.t0 = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(FdDerivative, DiskRadiusDerivativeWithinUncertainty) {
  const auto fd = fd_derivative(BoundaryCurve::circle(1.0), 2.0, 1.0, VectorFieldSpec::unit_normal(), fd_options(0.02));
  const auto rs = solve_ball(2, 1.0, 2.0, 1.0);
  const double exact = ball_closed_form(rs, VectorFieldSpec::unit_normal()).value;
  EXPECT_LE(std::abs(fd.estimate - exact), fd.uncertainty) << fd.estimate << " vs " << exact;
  EXPECT_GT(fd.uncertainty, 0.0);
  EXPECT_EQ(fd.differences.size(), 3u);
  EXPECT_EQ(fd.extrapolated.size(), 2u);
}

TEST(FdDerivative, CentralDifferenceIsSecondOrder) {
  // exact value from the extrapolated sequence of the radial solver's dilation
  const auto fd = fd_derivative(BoundaryCurve::circle(1.0), 2.0, 1.0, VectorFieldSpec::unit_normal(), fd_options(0.02));
  const double ratio = (fd.differences[0] - fd.estimate) / (fd.differences[1] - fd.estimate);
  EXPECT_NEAR(ratio, 4.0, 1.0);
}

TEST(FdDerivative, TranslationIsZeroWithinUncertainty) {
  const auto fd = fd_derivative(ellipse_like(), 2.0, 1.0, VectorFieldSpec::constant(Vec2(1, 0)), fd_options(0.03));
  EXPECT_LE(std::abs(fd.estimate), fd.uncertainty);
}

TEST(FdDerivative, StepBelowMeshResolutionIsUnstable) {
  // at h = 0.05 the ring count of the disk jumps between radii 1 - t and 1 + t
  auto o = fd_options(0.05, 1e-4);
  o.mesh_noise = false;
  EXPECT_THROW(fd_derivative(BoundaryCurve::circle(1.0), 2.0, 1.0, VectorFieldSpec::unit_normal(), o), FdInstabilityError);
}

TEST(CompareReport, DiskAllThreeValuesAgree) {
  CompareOptions o;
  const auto r = compare_report(BoundaryCurve::circle(1.0), 2.0, 1.0, VectorFieldSpec::unit_normal(), o);
  ASSERT_TRUE(r.formula2.has_value());
  const double f1 = r.formula1.value, f2 = r.formula2->value, fd = r.fd.estimate;
  EXPECT_NEAR(f1 / f2, 1.0, 0.02);
  EXPECT_NEAR(f1 / fd, 1.0, 0.02);
  EXPECT_NEAR(f2 / fd, 1.0, 0.02);
  EXPECT_TRUE(r.fd_agrees);
  EXPECT_TRUE(r.formulas_agree);
  EXPECT_EQ(r.fd_agrees, r.gap_fd <= r.tol_fd);
  EXPECT_EQ(r.formulas_agree, r.gap_formulas <= o.formula_rel_tol);
  EXPECT_EQ(r.h, 0.02);
  EXPECT_GT(r.boundary_nodes, 0);
  EXPECT_EQ(r.formula1.guard_count + r.formula2->guard_count, 0);
}

TEST(CompareReport, VerdictsFollowTolerances) {
  CompareOptions o;
  o.fd.h = 0.05;
  o.fd_rel_tol = 1e-9;
  o.fd_sigma = 1e-9;
  o.formula_rel_tol = 1e-9;
  const auto r = compare_report(BoundaryCurve::circle(1.0), 2.0, 1.0, VectorFieldSpec::unit_normal(), o);
  EXPECT_FALSE(r.fd_agrees);
  EXPECT_FALSE(r.formulas_agree);
}

TEST(CompareReport, DirichletUsesDirichletFormula) {
  CompareOptions o;
  o.fd.h = 0.04;
  const auto r = compare_report(BoundaryCurve::circle(1.0), 2.0, kDirichlet, VectorFieldSpec::unit_normal(), o);
  EXPECT_FALSE(r.formula2.has_value());
  EXPECT_EQ(r.formula1.formula, "dirichlet");
  EXPECT_TRUE(r.fd_agrees);
  const double j = oracle::kJ0FirstZero;
  EXPECT_NEAR(r.fd.estimate / (-2 * j * j), 1.0, 0.02);
}

TEST(BetaSweep, BallApproachesDirichlet) {
  const auto s = beta_sweep_ball(2, 1.0, 2.0, {0.1, 1.0, 10.0, 100.0, 1e4});
  EXPECT_TRUE(s.increasing);
  EXPECT_TRUE(s.bounded);
  EXPECT_TRUE(s.gap_decreasing);
  EXPECT_TRUE(s.near_dirichlet());
  EXPECT_NEAR(s.lambda_dirichlet, oracle::disk_dirichlet_lambda(), 1e-8);
  for (const auto& r : s.rows) EXPECT_NEAR(r.lambda, oracle::disk_robin_lambda(r.beta), 1e-8 * std::max(1.0, r.lambda));
}

TEST(BetaSweep, FiniteElementsOnNonCircularDomain) {
  const auto s = beta_sweep_fem(ellipse_like(), 3.0, {0.5, 5.0, 50.0, 500.0}, 0.05);
  EXPECT_TRUE(s.increasing);
  EXPECT_TRUE(s.bounded);
  EXPECT_TRUE(s.gap_decreasing);
}

TEST(BetaSweep, RejectsUnsortedList) {
  EXPECT_THROW(beta_sweep_ball(2, 1.0, 2.0, {1.0, 0.5}), ConfigError);
  EXPECT_THROW(beta_sweep_ball(2, 1.0, 2.0, {}), ConfigError);
}

TEST(BallCheck, PredictedSigns) {
  const auto a = ball_monotonicity_check(2, 1.0, 2.0, 2.0, VectorFieldSpec::unit_normal());
  EXPECT_TRUE(a.hypothesis_i);
  ASSERT_TRUE(a.predicted_sign.has_value());
  EXPECT_EQ(*a.predicted_sign, -1);
  EXPECT_LT(a.derivative, 0.0);
  EXPECT_TRUE(a.consistent);

  const auto b = ball_monotonicity_check(2, 1.0, 2.0, 1.0, VectorFieldSpec::unit_normal() * -1.0);
  EXPECT_TRUE(b.hypothesis_i);
  EXPECT_EQ(b.threshold, 1.0);
  ASSERT_TRUE(b.predicted_sign.has_value());
  EXPECT_EQ(*b.predicted_sign, 1);
  EXPECT_GT(b.derivative, 0.0);
  EXPECT_TRUE(b.consistent);

  const auto c = ball_monotonicity_check(2, 1.5, 2.5, 1.2, VectorFieldSpec::unit_normal());
  EXPECT_TRUE(c.hypothesis_ii);
  EXPECT_TRUE(c.strict_ii);
  EXPECT_FALSE(c.non_strict);
  ASSERT_TRUE(c.predicted_sign.has_value());
  EXPECT_EQ(*c.predicted_sign, -1);
  EXPECT_LT(c.derivative, 0.0);
  EXPECT_TRUE(c.remark_radius);
}

TEST(BallCheck, NoPredictionOutsideHypotheses) {
  const auto c = ball_monotonicity_check(2, 0.5, 1.5, 0.1, VectorFieldSpec::unit_normal());
  EXPECT_FALSE(c.hypothesis_i);
  EXPECT_FALSE(c.hypothesis_ii);
  EXPECT_FALSE(c.predicted_sign.has_value());
  EXPECT_EQ(c.summary(), "no prediction");
  EXPECT_FALSE(c.remark_radius);
}

TEST(BallCheck, NonStrictSecondHypothesis) {
  // R = 1, beta = 1, p = n = 2 satisfy (ii) with equality everywhere
  const auto c = ball_monotonicity_check(2, 1.0, 2.0, 1.0, VectorFieldSpec::unit_normal());
  EXPECT_TRUE(c.hypothesis_ii);
  EXPECT_FALSE(c.strict_ii);
  // (i) also holds at the threshold, so the prediction is strict
  EXPECT_FALSE(c.non_strict);
  EXPECT_TRUE(c.consistent);
}

TEST(BallCheck, HigherDimensionAndErrors) {
  const auto c = ball_monotonicity_check(3, 1.0, 3.0, 1.0, VectorFieldSpec::unit_normal());
  EXPECT_TRUE(c.hypothesis_ii);
  EXPECT_TRUE(c.consistent);
  EXPECT_THROW(ball_monotonicity_check(2, 1.0, 2.0, 1.0, VectorFieldSpec::constant(Vec2(1, 0))), DomainError);
  EXPECT_THROW(ball_monotonicity_check(2, 1.0, 2.0, kDirichlet, VectorFieldSpec::unit_normal()), DomainError);
  EXPECT_THROW(ball_monotonicity_check(2, 1.0, 2.0, 0.0, VectorFieldSpec::unit_normal()), DomainError);
}

TEST(BetaStar, DiskIsNegativeFromSmallBeta) {
  const auto r = beta_star_search(BoundaryCurve::circle(1.0), 2.0, VectorFieldSpec::unit_normal(),
                                  geometric_beta_grid(0.25, 64.0), 0.05);
  ASSERT_TRUE(r.beta_star.has_value());
  EXPECT_LE(*r.beta_star, 1.0);
  EXPECT_EQ(r.rows.size(), 9u);
}

TEST(BetaStar, EllipseLikeEventuallyNegative) {
  const auto r = beta_star_search(ellipse_like(), 2.0, VectorFieldSpec::unit_normal(), geometric_beta_grid(), 0.05);
  ASSERT_TRUE(r.beta_star.has_value());
  for (const auto& row : r.rows)
    if (row.beta >= *r.beta_star) EXPECT_LT(row.derivative, 0.0);
  EXPECT_EQ(r.rows.back().beta, 1024.0);
}

TEST(BetaStar, RequiresOutwardField) {
  EXPECT_THROW(beta_star_search(ellipse_like(), 2.0, VectorFieldSpec::constant(Vec2(1, 0)), {1.0, 2.0}, 0.1),
               DomainError);
}

TEST(ZetaConstancy, DiskDeviationHalvesUnderRefinement) {
  const auto z = zeta_constancy(2, 1.0, 2.0, 1.0, 0.02, 1);
  ASSERT_EQ(z.size(), 2u);
  EXPECT_LE(z[0].profile.rel_deviation, 0.02);
  EXPECT_LE(z[1].profile.rel_deviation, 0.5 * z[0].profile.rel_deviation);
  EXPECT_GT(z[1].mesh_vertices, 3 * z[0].mesh_vertices);
  EXPECT_THROW(zeta_constancy(3, 1.0, 2.0, 1.0, 0.02), DomainError);
}
