#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rpl {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `n` points on [-1, 1] (Newton on P_n).
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Composite Gauss-Legendre rule on the periodic interval [0, 2pi) with
/// `total_nodes` points split into panels of `points_per_panel`.
inline QuadratureRule composite_angle_rule(int total_nodes, int points_per_panel = 4) {
  if (total_nodes < points_per_panel || total_nodes % points_per_panel != 0)
    throw std::invalid_argument("composite_angle_rule: node count must be a positive multiple of " +
                                std::to_string(points_per_panel));
  const auto base = gauss_legendre(points_per_panel);
  const int panels = total_nodes / points_per_panel;
  const double width = 2.0 * std::numbers::pi / panels;
  QuadratureRule rule;
  rule.nodes.reserve(total_nodes);
  rule.weights.reserve(total_nodes);
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * width;
    for (int q = 0; q < points_per_panel; ++q) {
      rule.nodes.push_back(mid + 0.5 * width * base.nodes[q]);
      rule.weights.push_back(0.5 * width * base.weights[q]);
    }
  }
  return rule;
}

/// Degree-5 seven-point rule on a triangle: barycentric coordinates and
/// weights normalised to sum to one (multiply by the triangle area).
struct TrianglePoint {
  std::array<double, 3> bary;
  double weight;
};

inline const std::array<TrianglePoint, 7>& triangle_rule_deg5() {
  static const std::array<TrianglePoint, 7> rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a = (6.0 - s15) / 21.0, b = (9.0 + 2.0 * s15) / 21.0;
    const double c = (6.0 + s15) / 21.0, d = (9.0 - 2.0 * s15) / 21.0;
    const double wa = (155.0 - s15) / 1200.0, wc = (155.0 + s15) / 1200.0;
    return std::array<TrianglePoint, 7>{{
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
        {{a, a, b}, wa},
        {{a, b, a}, wa},
        {{b, a, a}, wa},
        {{c, c, d}, wc},
        {{c, d, c}, wc},
        {{d, c, c}, wc},
    }};
  }();
  return rule;
}

}  // namespace rpl
