#include "rpl/quadrature.hpp"
#include "rpl/trig_polynomial.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace rpl;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int n = 1; n <= 8; ++n) {
    const auto rule = gauss_legendre(n);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    EXPECT_NEAR(wsum, 2.0, 1e-14);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(TriangleRule, ExactForDegreeFive) {
  const auto rule = triangle_rule_deg5();
  ASSERT_EQ(rule.size(), 7u);
  // reference triangle (0,0),(1,0),(0,1), area 1/2: int x^a y^b = a! b! / (a+b+2)!
  auto fact = [](int k) { double f = 1; for (int i = 2; i <= k; ++i) f *= i; return f; };
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; a + b <= 5; ++b) {
      double s = 0.0;
      for (const auto& q : rule) s += 0.5 * q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
      EXPECT_NEAR(s, fact(a) * fact(b) / fact(a + b + 2), 1e-15) << a << "," << b;
    }
}

TEST(CompositeAngleRule, PeriodicIntegrals) {
  const auto rule = composite_angle_rule(64);
  double s = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    s += rule.weights[i];
    c2 += rule.weights[i] * std::cos(rule.nodes[i]) * std::cos(rule.nodes[i]);
  }
  EXPECT_NEAR(s, 2 * std::numbers::pi, 1e-13);
  EXPECT_NEAR(c2, std::numbers::pi, 1e-13);
}

TEST(TrigPolynomial, JetMatchesAnalyticDerivatives) {
  const TrigPolynomial f({1.0, 0.5, -0.25}, {0.0, 0.3, 0.1});
  for (double t : {0.0, 0.4, 2.0, 5.5}) {
    const auto j = f.jet(t);
    EXPECT_NEAR(j.f, 1 + 0.5 * std::cos(t) - 0.25 * std::cos(2 * t) + 0.3 * std::sin(t) + 0.1 * std::sin(2 * t), 1e-15);
    EXPECT_NEAR(j.df, -0.5 * std::sin(t) + 0.5 * std::sin(2 * t) + 0.3 * std::cos(t) + 0.2 * std::cos(2 * t), 1e-15);
    EXPECT_NEAR(j.d2f, -0.5 * std::cos(t) + std::cos(2 * t) - 0.3 * std::sin(t) - 0.4 * std::sin(2 * t), 1e-14);
  }
  EXPECT_EQ(f.degree(), 2);
}

TEST(TrigPolynomial, IntegralOfSquareIsParseval) {
  const TrigPolynomial f({1.0, 0.5}, {0.0, 0.2});
  EXPECT_NEAR(f.integral_of_square(), 2 * std::numbers::pi * 1.0 + std::numbers::pi * (0.25 + 0.04), 1e-13);
}

TEST(TrigPolynomial, FitRecoversCoefficients) {
  const TrigPolynomial f({0.7, 0.0, 0.2, -0.1}, {0.0, 0.3, 0.0, 0.05});
  std::vector<double> th, y;
  for (int i = 0; i < 40; ++i) {
    th.push_back(2 * std::numbers::pi * i / 40 + 0.01 * std::sin(i));
    y.push_back(f(th.back()));
  }
  double res = 1.0;
  const auto g = TrigPolynomial::fit(th, y, 5, &res);
  EXPECT_LT(res, 1e-13);
  for (double t : {0.1, 1.3, 4.0}) EXPECT_NEAR(g(t), f(t), 1e-13);
}

TEST(TrigPolynomial, UniformInterpolation) {
  std::vector<double> y;
  for (int i = 0; i < 16; ++i) {
    const double t = 2 * std::numbers::pi * i / 16;
    y.push_back(std::cos(3 * t) - 2 * std::sin(t));
  }
  const auto g = TrigPolynomial::interpolate_uniform(y);
  for (double t : {0.2, 2.2, 6.0}) EXPECT_NEAR(g(t), std::cos(3 * t) - 2 * std::sin(t), 1e-13);
}
