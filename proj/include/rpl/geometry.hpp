#pragma once

// Differential geometry of star-shaped planar domains whose boundary is
// x(theta) = center + rho(theta) (cos theta, sin theta) with rho a
// trigonometric polynomial. All quantities are evaluated in closed form.

#include "rpl/errors.hpp"
#include "rpl/quadrature.hpp"
#include "rpl/trig_polynomial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rpl {

using Vec2 = Eigen::Vector2d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr int kDefaultBoundaryNodes = 512;

/// Rotates a vector by +90 degrees.
inline Vec2 perp(const Vec2& a) { return {-a.y(), a.x()}; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct BoundaryFrame {
  Vec2 point;
  Vec2 tangent;         ///< unit, counter-clockwise
  Vec2 normal;          ///< unit, outward
  double curvature;     ///< signed; positive on convex arcs
  double mean_curvature;  ///< curvature / (n - 1) with n = 2
  double speed;         ///< ds / dtheta
};

class BoundaryCurve {
 public:
  explicit BoundaryCurve(TrigPolynomial radius, Vec2 center = Vec2::Zero())
      : radius_(std::move(radius)), center_(std::move(center)) {
    const int samples = std::max(1024, 32 * (radius_.degree() + 1));
    min_radius_ = std::numeric_limits<double>::infinity();
    max_radius_ = -min_radius_;
    for (int i = 0; i < samples; ++i) {
      const double r = radius_(kTwoPi * i / samples);
      min_radius_ = std::min(min_radius_, r);
      max_radius_ = std::max(max_radius_, r);
    }
    if (!(min_radius_ > 0.0))
      throw InvalidCurveError("boundary curve is not star-shaped: min rho = " + std::to_string(min_radius_));
  }

  static BoundaryCurve circle(double radius, Vec2 center = Vec2::Zero()) {
    return BoundaryCurve(TrigPolynomial::constant(radius), std::move(center));
  }

  const TrigPolynomial& radius() const { return radius_; }
  const Vec2& center() const { return center_; }
  int degree() const { return radius_.degree(); }
  double min_radius() const { return min_radius_; }
  double max_radius() const { return max_radius_; }

  Vec2 point(double theta) const {
    return center_ + radius_(theta) * Vec2(std::cos(theta), std::sin(theta));
  }

  /// Enclosed area, exact: (1/2) int rho^2 dtheta.
  double area() const { return 0.5 * radius_.integral_of_square(); }

  double length(int nodes = kDefaultBoundaryNodes) const;

 private:
  TrigPolynomial radius_;
  Vec2 center_;
  double min_radius_ = 0.0;
  double max_radius_ = 0.0;
};

inline BoundaryFrame boundary_frame(const BoundaryCurve& curve, double theta) {
  const auto [r, dr, d2r] = curve.radius().jet(theta);
  if (!(r > 0.0)) throw InvalidCurveError("non-positive radius at theta = " + std::to_string(theta));
  const Vec2 e(std::cos(theta), std::sin(theta));
  const Vec2 de = perp(e);
  const Vec2 xt = dr * e + r * de;
  const double speed = std::hypot(r, dr);
  BoundaryFrame f;
  f.point = curve.center() + r * e;
  f.speed = speed;
  f.tangent = xt / speed;
  f.normal = Vec2(f.tangent.y(), -f.tangent.x());
  f.curvature = (r * r + 2.0 * dr * dr - r * d2r) / (speed * speed * speed);
  f.mean_curvature = f.curvature;  // n - 1 = 1
  return f;
}

/// Integrates g(theta, frame) ds over the boundary with composite
/// Gauss-Legendre in theta.
inline double boundary_integral(const BoundaryCurve& curve,
                                const std::function<double(double, const BoundaryFrame&)>& g,
                                int nodes = kDefaultBoundaryNodes) {
  const auto rule = composite_angle_rule(nodes);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const auto fr = boundary_frame(curve, rule.nodes[i]);
    sum += rule.weights[i] * fr.speed * g(rule.nodes[i], fr);
  }
  return sum;
}

inline double BoundaryCurve::length(int nodes) const {
  return boundary_integral(*this, [](double, const BoundaryFrame&) { return 1.0; }, nodes);
}

/// Exact arclength between two parameter values (theta_b may exceed 2 pi).
inline double arc_length(const BoundaryCurve& curve, double theta_a, double theta_b, int gauss_points = 8) {
  static thread_local QuadratureRule rule;
  if (static_cast<int>(rule.nodes.size()) != gauss_points) rule = gauss_legendre(gauss_points);
  const double mid = 0.5 * (theta_a + theta_b), half = 0.5 * (theta_b - theta_a);
  double s = 0.0;
  for (int q = 0; q < gauss_points; ++q) {
    const auto [r, dr, d2r] = curve.radius().jet(mid + half * rule.nodes[q]);
    s += rule.weights[q] * std::hypot(r, dr);
  }
  return s * half;
}

// ---------------------------------------------------------------------------
// Perturbation fields

/// v = g(theta) * normal(theta)
struct NormalProfileField {
  TrigPolynomial profile;
};
/// v = c
struct ConstantField {
  Vec2 value;
};
/// v = rate * perp(x - pivot)
struct RotationField {
  Vec2 pivot = Vec2::Zero();
  double rate = 1.0;
};
/// Componentwise trigonometric interpolation of uniform samples in theta.
struct TabulatedField {
  TrigPolynomial vx;
  TrigPolynomial vy;
};

/// Value of the field on the boundary and its derivative in theta.
struct FieldJet {
  Vec2 value;
  Vec2 dtheta;
};

class VectorFieldSpec {
 public:
  using Term = std::variant<NormalProfileField, ConstantField, RotationField, TabulatedField>;

  VectorFieldSpec() = default;
  explicit VectorFieldSpec(Term t) { terms_.emplace_back(1.0, std::move(t)); }

  static VectorFieldSpec normal(TrigPolynomial g) { return VectorFieldSpec(NormalProfileField{std::move(g)}); }
  static VectorFieldSpec unit_normal() { return normal(TrigPolynomial::constant(1.0)); }
  static VectorFieldSpec constant(Vec2 c) { return VectorFieldSpec(ConstantField{std::move(c)}); }
  static VectorFieldSpec rotation(Vec2 pivot = Vec2::Zero(), double rate = 1.0) {
    return VectorFieldSpec(RotationField{std::move(pivot), rate});
  }
  static VectorFieldSpec tabulated(std::span<const double> vx, std::span<const double> vy) {
    if (vx.size() != vy.size() || vx.size() < 3)
      throw std::invalid_argument("tabulated field needs matching component tables of length >= 3");
    return VectorFieldSpec(
        TabulatedField{TrigPolynomial::interpolate_uniform(vx), TrigPolynomial::interpolate_uniform(vy)});
  }

  VectorFieldSpec operator+(const VectorFieldSpec& o) const {
    VectorFieldSpec out = *this;
    out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
    return out;
  }
  VectorFieldSpec operator*(double s) const {
    VectorFieldSpec out = *this;
    for (auto& [w, t] : out.terms_) w *= s;
    return out;
  }

  const std::vector<std::pair<double, Term>>& terms() const { return terms_; }

  FieldJet jet(const BoundaryCurve& curve, double theta) const {
    return jet(curve, theta, boundary_frame(curve, theta));
  }

  FieldJet jet(const BoundaryCurve& curve, double theta, const BoundaryFrame& fr) const {
    FieldJet out{Vec2::Zero(), Vec2::Zero()};
    for (const auto& [w, term] : terms_) {
      const FieldJet j = std::visit(
          [&](const auto& t) -> FieldJet {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, NormalProfileField>) {
              const auto g = t.profile.jet(theta);
              const Vec2 dnormal = fr.curvature * fr.speed * fr.tangent;
              return {g.f * fr.normal, g.df * fr.normal + g.f * dnormal};
            } else if constexpr (std::is_same_v<T, ConstantField>) {
              return {t.value, Vec2::Zero()};
            } else if constexpr (std::is_same_v<T, RotationField>) {
              return {t.rate * perp(fr.point - t.pivot), t.rate * fr.speed * perp(fr.tangent)};
            } else {
              const auto x = t.vx.jet(theta), y = t.vy.jet(theta);
              return {Vec2(x.f, y.f), Vec2(x.df, y.df)};
            }
          },
          term);
      out.value += w * j.value;
      out.dtheta += w * j.dtheta;
    }
    return out;
  }

  Vec2 operator()(const BoundaryCurve& curve, double theta) const { return jet(curve, theta).value; }

 private:
  std::vector<std::pair<double, Term>> terms_;
};

// ---------------------------------------------------------------------------
// Tangential calculus

/// div_{dOmega} v = g^{11} (dv/dtheta . x_theta) with g_11 = |x_theta|^2.
inline double tangential_divergence(const VectorFieldSpec& v, const BoundaryCurve& curve, double theta) {
  const auto fr = boundary_frame(curve, theta);
  const auto j = v.jet(curve, theta, fr);
  return j.dtheta.dot(fr.tangent) / fr.speed;
}

/// Tangential gradient of a boundary scalar field f(theta).
inline Vec2 tangential_gradient(const TrigPolynomial& f, const BoundaryCurve& curve, double theta) {
  const auto fr = boundary_frame(curve, theta);
  return (f.jet(theta).df / fr.speed) * fr.tangent;
}

/// int f div v ds + int v . grad^tau f ds - (n-1) int f (v . eta) H ds.
inline double surface_gauss_residual(const BoundaryCurve& curve, const TrigPolynomial& f,
                                     const VectorFieldSpec& v, int nodes = kDefaultBoundaryNodes) {
  return boundary_integral(
      curve,
      [&](double theta, const BoundaryFrame& fr) {
        const auto fj = f.jet(theta);
        const auto vj = v.jet(curve, theta, fr);
        const double div = vj.dtheta.dot(fr.tangent) / fr.speed;
        const Vec2 grad = (fj.df / fr.speed) * fr.tangent;
        return fj.f * div + vj.value.dot(grad) - fj.f * vj.value.dot(fr.normal) * fr.mean_curvature;
      },
      nodes);
}

/// First-order rate of the surface element, div v^tau + (n-1) H (v . eta).
inline double surface_element_rate(const BoundaryCurve& curve, const VectorFieldSpec& v, double theta) {
  const auto fr = boundary_frame(curve, theta);
  const auto vj = v.jet(curve, theta, fr);
  // d/dtheta (v . tau) = v' . tau + v . tau',  tau' = -kappa * speed * eta
  const double vn = vj.value.dot(fr.normal);
  const double d_vtan = vj.dtheta.dot(fr.tangent) - fr.curvature * fr.speed * vn;
  return d_vtan / fr.speed + fr.mean_curvature * vn;
}

struct VolumeRate {
  double area;
  double rate;  ///< d|Omega_t|/dt at t = 0, = int (v . eta) ds
};

inline VolumeRate volume_and_rate(const BoundaryCurve& curve, const VectorFieldSpec& v,
                                  int nodes = kDefaultBoundaryNodes) {
  const double rate = boundary_integral(
      curve, [&](double theta, const BoundaryFrame& fr) { return v.jet(curve, theta, fr).value.dot(fr.normal); },
      nodes);
  return {curve.area(), rate};
}

// ---------------------------------------------------------------------------
// Domain perturbation

struct PerturbOptions {
  int fit_degree = 64;
  int samples = 1024;
  double tolerance = 1e-10;  ///< max fit residual relative to max rho
};

struct PerturbedCurve {
  BoundaryCurve curve;
  double fit_residual;  ///< max abs residual of the radial fit (length units)
};

/// Moves every boundary point x to x + t v(x) and refits rho about the
/// same center.
inline PerturbedCurve perturb_curve(const BoundaryCurve& curve, const VectorFieldSpec& v, double t,
                                    const PerturbOptions& opts = {}) {
  if (t == 0.0) return {curve, 0.0};
  const int degree = std::max(opts.fit_degree, curve.degree());
  const int n = std::max(opts.samples, 8 * degree + 8);
  std::vector<double> phi(n), r(n);
  double prev = 0.0, offset = 0.0;
  for (int i = 0; i < n; ++i) {
    const double theta = kTwoPi * i / n;
    const auto fr = boundary_frame(curve, theta);
    const Vec2 y = fr.point + t * v.jet(curve, theta, fr).value - curve.center();
    r[i] = y.norm();
    if (!(r[i] > 0.0)) throw PerturbationTooLargeError("perturbed boundary passes through the center");
    double a = std::atan2(y.y(), y.x()) + offset;
    if (i > 0) {
      while (a - prev > std::numbers::pi) a -= kTwoPi, offset -= kTwoPi;
      while (a - prev < -std::numbers::pi) a += kTwoPi, offset += kTwoPi;
      if (!(a > prev))
        throw PerturbationTooLargeError("perturbed boundary is no longer star-shaped about the center (t = " +
                                        std::to_string(t) + ")");
    }
    phi[i] = a;
    prev = a;
  }
  if (phi[n - 1] - phi[0] >= kTwoPi)
    throw PerturbationTooLargeError("perturbed boundary winds more than once about the center");
  double residual = 0.0;
  auto fitted = TrigPolynomial::fit(phi, r, degree, &residual);
  const double scale = *std::max_element(r.begin(), r.end());
  if (residual > opts.tolerance * scale)
    throw DegreeTooLowError("radial fit residual " + std::to_string(residual) + " exceeds tolerance at degree " +
                            std::to_string(degree));
  try {
    return {BoundaryCurve(std::move(fitted), curve.center()), residual};
  } catch (const InvalidCurveError& e) {
    throw PerturbationTooLargeError(e.what());
  }
}

/// Max radial distance between two curves sharing a center.
inline double curve_distance(const BoundaryCurve& a, const BoundaryCurve& b, int samples = 2048) {
  double d = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double th = kTwoPi * i / samples;
    d = std::max(d, std::abs(a.radius()(th) - b.radius()(th)));
  }
  return d;
}

}  // namespace rpl
