#pragma once

// Boundary-integral shape derivatives of the first Robin p-Laplacian
// eigenvalue under the perturbation x -> x + t v(x), evaluated from a
// converged eigensolution. Quadrature nodes are the boundary vertices of the
// mesh (trapezoidal rule in theta with arclength weights).

#include "rpl/eigensolver.hpp"
#include "rpl/errors.hpp"
#include "rpl/geometry.hpp"
#include "rpl/radial.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace rpl {

inline constexpr double kGradientFloor = 1e-14;

struct TraceSample {
  double theta;
  double weight;  ///< arclength quadrature weight
  Vec2 point;
  Vec2 normal;
  double mean_curvature;
  double u;
  Vec2 grad;
  double dudn;
  double grad_norm;
};

struct BoundaryTrace {
  BoundaryCurve curve;
  std::vector<TraceSample> samples;
  double lambda = 0.0;
  double p = 2.0;
  double beta = 1.0;
  int n = 2;
  double normalization = 1.0;  ///< int |u|^p dx of the generating solve
  int sign_violations = 0;     ///< samples with grad u . eta >= 0 (Robin only)

  double boundary_length() const {
    double s = 0.0;
    for (const auto& x : samples) s += x.weight;
    return s;
  }
};

/// Builds the boundary trace of a solution computed on `mesh`.
inline BoundaryTrace make_trace(const Mesh& mesh, const EigenSolution& sol) {
  BoundaryTrace tr{mesh.curve(), {}, sol.lambda, sol.p, sol.beta, 2, sol.normalization, 0};
  const auto& b = sol.boundary;
  const int nb = static_cast<int>(b.size());
  if (nb < 3) throw DomainError("boundary trace needs at least three samples");
  tr.samples.reserve(nb);
  for (int k = 0; k < nb; ++k) {
    double next = b[(k + 1) % nb].theta, prev = b[(k + nb - 1) % nb].theta;
    if (k + 1 == nb) next += kTwoPi;
    if (k == 0) prev -= kTwoPi;
    const auto& s = b[k];
    tr.samples.push_back({s.theta, 0.5 * (next - prev) * s.frame.speed, s.frame.point, s.frame.normal,
                          s.frame.mean_curvature, s.u, s.grad, s.dudn, s.grad_norm});
    if (!is_dirichlet(sol.beta) && !(s.dudn < 0.0)) ++tr.sign_violations;
  }
  return tr;
}

struct DerivativeValue {
  double value = 0.0;
  std::string formula;
  std::vector<double> integrand;  ///< bracket term at each sample (before v . eta)
  double magnitude = 0.0;         ///< int |integrand (v . eta)| ds
  int guard_count = 0;
  bool flagged = false;
};

// Pointwise integrands ------------------------------------------------------

/// |grad u|^p - lambda |u|^p + beta |u|^p (n-1) H + p beta u |u|^{p-2} (grad u . eta)
inline double formula1_integrand(const TraceSample& s, double lambda, double p, double beta, int n = 2) {
  const double au = std::abs(s.u);
  return std::pow(s.grad_norm, p) - lambda * std::pow(au, p) + beta * std::pow(au, p) * (n - 1) * s.mean_curvature +
         p * beta * s.u * std::pow(au, p - 2.0) * s.dudn;
}

/// |grad u|^p - lambda |u|^p + beta |u|^p (n-1) H - p beta^2 |u|^{2p-2} / |grad u|^{p-2}
inline double formula2_integrand(const TraceSample& s, double lambda, double p, double beta, int n = 2,
                                 bool* guarded = nullptr) {
  const double au = std::abs(s.u);
  const bool guard = s.grad_norm < kGradientFloor;
  if (guarded) *guarded = guard;
  const double g = guard ? kGradientFloor : s.grad_norm;
  return std::pow(s.grad_norm, p) - lambda * std::pow(au, p) + beta * std::pow(au, p) * (n - 1) * s.mean_curvature -
         p * beta * beta * std::pow(au, 2.0 * p - 2.0) / std::pow(g, p - 2.0);
}

/// Linear-case integrand |grad u|^2 - lambda u^2 + beta (n-1) H u^2 - 2 beta^2 u^2.
inline double robin_laplace_integrand(const TraceSample& s, double lambda, double beta, int n = 2) {
  const double u2 = s.u * s.u;
  return s.grad_norm * s.grad_norm - lambda * u2 + beta * (n - 1) * s.mean_curvature * u2 - 2.0 * beta * beta * u2;
}

namespace detail {

inline void require_robin(const BoundaryTrace& tr) {
  if (is_dirichlet(tr.beta)) throw WrongProblemError("Robin formula applied to a Dirichlet trace");
  if (std::abs(tr.normalization - 1.0) > 1e-8)
    throw NormalizationError("trace is not normalised: int |u|^p = " + std::to_string(tr.normalization));
}

template <class Integrand>
DerivativeValue integrate(const BoundaryTrace& tr, const VectorFieldSpec& v, std::string name, Integrand&& f) {
  DerivativeValue out;
  out.formula = std::move(name);
  out.integrand.reserve(tr.samples.size());
  for (const auto& s : tr.samples) {
    bool guarded = false;
    const double z = f(s, guarded);
    if (guarded) ++out.guard_count;
    const double vn = v(tr.curve, s.theta).dot(s.normal);
    out.integrand.push_back(z);
    out.value += s.weight * z * vn;
    out.magnitude += s.weight * std::abs(z * vn);
  }
  out.flagged = out.guard_count > 0;
  return out;
}

}  // namespace detail

inline DerivativeValue hadamard_formula1(const BoundaryTrace& tr, const VectorFieldSpec& v) {
  detail::require_robin(tr);
  return detail::integrate(tr, v, "formula1", [&](const TraceSample& s, bool&) {
    return formula1_integrand(s, tr.lambda, tr.p, tr.beta, tr.n);
  });
}

inline DerivativeValue hadamard_formula2(const BoundaryTrace& tr, const VectorFieldSpec& v) {
  detail::require_robin(tr);
  return detail::integrate(tr, v, "formula2", [&](const TraceSample& s, bool& guarded) {
    return formula2_integrand(s, tr.lambda, tr.p, tr.beta, tr.n, &guarded);
  });
}

/// -(p-1) int |du/deta|^p (v . eta) ds for a Dirichlet trace.
inline DerivativeValue dirichlet_hadamard(const BoundaryTrace& tr, const VectorFieldSpec& v) {
  if (std::abs(tr.normalization - 1.0) > 1e-8)
    throw NormalizationError("trace is not normalised: int |u|^p = " + std::to_string(tr.normalization));
  double gmax = 0.0;
  for (const auto& s : tr.samples) gmax = std::max(gmax, s.grad_norm);
  for (const auto& s : tr.samples)
    if (std::abs(s.u) > 1e-12 * std::max(1.0, gmax))
      throw WrongProblemError("Dirichlet formula needs a vanishing boundary trace");
  return detail::integrate(tr, v, "dirichlet", [&](const TraceSample& s, bool&) {
    return -(tr.p - 1.0) * std::pow(std::abs(s.dudn), tr.p);
  });
}

struct ZetaProfile {
  std::vector<double> theta;
  std::vector<double> zeta;
  double mean = 0.0;           ///< arclength average
  double rel_deviation = 0.0;  ///< max |zeta - mean| / |mean|
  int guard_count = 0;
};

/// Stationarity profile zeta (the formula-2 bracket) on the trace.
inline ZetaProfile zeta_profile(const BoundaryTrace& tr) {
  detail::require_robin(tr);
  ZetaProfile z;
  double num = 0.0, len = 0.0;
  for (const auto& s : tr.samples) {
    bool guarded = false;
    const double val = formula2_integrand(s, tr.lambda, tr.p, tr.beta, tr.n, &guarded);
    if (guarded) ++z.guard_count;
    z.theta.push_back(s.theta);
    z.zeta.push_back(val);
    num += s.weight * val;
    len += s.weight;
  }
  z.mean = num / len;
  double dev = 0.0;
  for (double val : z.zeta) dev = std::max(dev, std::abs(val - z.mean));
  z.rel_deviation = dev / std::abs(z.mean);
  return z;
}

// Ball closed form ------------------------------------------------------------

/// beta^{p/(p-1)} (1-p) - lambda + beta (n-1) / R
inline double ball_bracket_coefficient(const RadialSolution& rs) {
  return std::pow(rs.beta, rs.p / (rs.p - 1.0)) * (1.0 - rs.p) - rs.lambda + rs.beta * (rs.n - 1) / rs.R;
}

/// Threshold ((n-1) / (R (p-1)))^{p-1} above which the bracket is negative.
inline double ball_beta_threshold(int n, double R, double p) {
  return std::pow((n - 1) / (R * (p - 1.0)), p - 1.0);
}

namespace detail {

/// The constant c when v is c * eta (sum of degree-0 normal profiles).
inline std::optional<double> constant_normal_speed(const VectorFieldSpec& v) {
  double c = 0.0;
  for (const auto& [w, term] : v.terms()) {
    const auto* np = std::get_if<NormalProfileField>(&term);
    if (!np || np->profile.degree() != 0) return std::nullopt;
    c += w * np->profile.cos_coeffs()[0];
  }
  return c;
}

}  // namespace detail

/// Ball shape derivative: bracket * |u(R)|^p * int (v . eta) ds. The
/// surface integral is analytic for v = c eta in any dimension and uses
/// quadrature on the circle otherwise (n = 2 only).
inline DerivativeValue ball_closed_form(const RadialSolution& rs, const VectorFieldSpec& v,
                                        int nodes = kDefaultBoundaryNodes) {
  if (is_dirichlet(rs.beta)) throw WrongProblemError("ball closed form applies to the Robin problem");
  double flux;
  if (const auto c = detail::constant_normal_speed(v)) {
    flux = *c * unit_sphere_area(rs.n) * std::pow(rs.R, rs.n - 1);
  } else {
    if (rs.n != 2) throw DomainError("general perturbation fields are supported on the disk only");
    flux = volume_and_rate(BoundaryCurve::circle(rs.R), v, nodes).rate;
  }
  DerivativeValue out;
  out.formula = "ball";
  const double bracket = ball_bracket_coefficient(rs);
  out.integrand = {bracket * std::pow(std::abs(rs.boundary_u()), rs.p)};
  out.value = out.integrand[0] * flux;
  out.magnitude = std::abs(out.value);
  return out;
}

}  // namespace rpl
