#pragma once

// Radial reduction of the Robin p-Laplacian eigenproblem on the ball B(0, R)
// in R^n:
//     (r^{n-1} w)' + lambda r^{n-1} |u|^{p-2} u = 0,   w = |u'|^{p-2} u'
// integrated as a first-order system in (u, w) by an adaptive Dormand-Prince
// pair and solved for lambda by bisection on the boundary relation.

#include "rpl/eigensolver.hpp"
#include "rpl/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace rpl {

struct RadialOptions {
  double start_fraction = 1e-8;  ///< integration starts at r0 = start_fraction * R
  double ode_tol = 1e-11;
  double lambda_rel_tol = 1e-10;
  int max_ode_steps = 200000;
};

struct RadialDiagnostics {
  int bisection_steps = 0;
  int ode_steps = 0;        ///< steps of the final integration
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

struct RadialSolution {
  int n = 2;
  double R = 1.0;
  double p = 2.0;
  double beta = 1.0;
  double lambda = 0.0;
  // Profile on the integration grid, normalised to int_B |u|^p dx = 1.
  std::vector<double> r, u, du, w, dw;
  double scale = 1.0;  ///< factor applied to the unit-start shooting solution
  RadialDiagnostics diagnostics;

  double boundary_u() const { return u.back(); }
  double boundary_du() const { return du.back(); }
};

/// Surface area of the unit sphere S^{n-1}.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace detail {

inline double flux_to_slope(double w, double p) { return std::copysign(std::pow(std::abs(w), 1.0 / (p - 1.0)), w); }

struct ShootResult {
  double u = 0.0, w = 0.0, q = 0.0;
  bool crossed = false;  ///< u vanished before R
  int steps = 0;
};

struct RadialOde {
  int n;
  double p;
  double lambda;
  // state: u, w, q (q accumulates int |u|^p r^{n-1} dr)
  std::array<double, 3> operator()(double r, const std::array<double, 3>& y) const {
    const double up = flux_to_slope(y[1], p);
    const double wp = -(n - 1) * y[1] / r - lambda * std::copysign(std::pow(std::abs(y[0]), p - 1.0), y[0]);
    const double qp = std::pow(std::abs(y[0]), p) * std::pow(r, n - 1);
    return {up, wp, qp};
  }
};

/// Integrates from r0 to R; records the profile when `record` is non-null.
inline ShootResult shoot(int n, double R, double p, double lambda, const RadialOptions& opts,
                         RadialSolution* record = nullptr) {
  // Dormand-Prince 5(4) coefficients.
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const RadialOde f{n, p, lambda};
  double r = opts.start_fraction * R;
  std::array<double, 3> y{1.0, 0.0, 0.0};
  double h = r;
  ShootResult res;
  auto push = [&](double rr, const std::array<double, 3>& yy) {
    if (!record) return;
    const auto d = f(rr, yy);
    record->r.push_back(rr);
    record->u.push_back(yy[0]);
    record->w.push_back(yy[1]);
    record->du.push_back(d[0]);
    record->dw.push_back(d[1]);
  };
  push(r, y);
  auto k1 = f(r, y);
  while (r < R) {
    if (res.steps >= opts.max_ode_steps) throw ConvergenceError("radial ODE step limit reached");
    bool last = false;
    if (r + h >= R) {
      h = R - r;
      last = true;
    }
    auto axpy = [&](std::initializer_list<std::pair<double, const std::array<double, 3>*>> terms) {
      std::array<double, 3> out = y;
      for (const auto& [c, k] : terms)
        for (int i = 0; i < 3; ++i) out[i] += h * c * (*k)[i];
      return out;
    };
    const auto k2 = f(r + c2 * h, axpy({{a21, &k1}}));
    const auto k3 = f(r + c3 * h, axpy({{a31, &k1}, {a32, &k2}}));
    const auto k4 = f(r + c4 * h, axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const auto k5 = f(r + c5 * h, axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const auto k6 = f(r + h, axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const auto y5 = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const auto k7 = f(r + h, y5);
    double err = 0.0;
    for (int i = 0; i < 2; ++i) {  // q is a quadrature, not part of the control
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opts.ode_tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0 || h < 1e-15 * R) {
      r = last ? R : r + h;
      y = y5;
      k1 = k7;
      ++res.steps;
      push(r, y);
      if (y[0] <= 0.0 && r < R) {
        res.crossed = true;
        break;
      }
    } else {
      last = false;
    }
    const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= fac;
  }
  res.u = y[0];
  res.w = y[1];
  res.q = y[2];
  return res;
}

}  // namespace detail

/// First eigenpair of the radial problem on B(0, R) in R^n.
inline RadialSolution solve_ball(int n, double R, double p, double beta, const RadialOptions& opts = {}) {
  if (n < 2) throw DomainError("dimension must be at least 2");
  if (!(R > 0.0)) throw DomainError("radius must be positive");
  if (!(p > 1.0)) throw DomainError("p must exceed 1 (got " + std::to_string(p) + ")");
  if (!(beta >= 0.0)) throw DomainError("beta must be non-negative or Dirichlet");

  RadialSolution sol;
  sol.n = n;
  sol.R = R;
  sol.p = p;
  sol.beta = beta;

  auto finish = [&](double lambda) {
    sol.lambda = lambda;
    const auto res = detail::shoot(n, R, p, lambda, opts, &sol);
    sol.diagnostics.ode_steps = res.steps;
    if (res.crossed) throw BracketError("final radial profile changes sign");
    const double mass = unit_sphere_area(n) * res.q;
    sol.scale = std::pow(mass, -1.0 / p);
    const double wscale = std::pow(sol.scale, p - 1.0);
    for (std::size_t i = 0; i < sol.r.size(); ++i) {
      sol.u[i] *= sol.scale;
      sol.du[i] *= sol.scale;
      sol.w[i] *= wscale;
      sol.dw[i] *= wscale;
    }
    return sol;
  };

  if (beta == 0.0) {
    sol.lambda = 0.0;
    const double c = std::pow(unit_sphere_area(n) * std::pow(R, n) / n, -1.0 / p);
    sol.r = {0.0, R};
    sol.u = {c, c};
    sol.du = {0.0, 0.0};
    sol.w = {0.0, 0.0};
    sol.dw = {0.0, 0.0};
    return sol;
  }

  // Dirichlet eigenvalue: the largest lambda for which u stays positive.
  auto positive = [&](double lambda) {
    const auto res = detail::shoot(n, R, p, lambda, opts);
    return !res.crossed && res.u > 0.0;
  };
  double lo = 1e-8, hi = 1.0 / std::pow(R, p);
  while (positive(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw BracketError("no upper bracket for the Dirichlet eigenvalue");
  }
  while ((hi - lo) > 1e-3 * opts.lambda_rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? lo : hi) = mid;
    ++sol.diagnostics.bisection_steps;
  }
  const double lambda_d = 0.5 * (lo + hi);
  if (is_dirichlet(beta)) {
    sol.diagnostics.bracket_lo = lo;
    sol.diagnostics.bracket_hi = hi;
    return finish(lo);
  }

  // Robin: F(lambda) = w(R) + beta |u(R)|^{p-2} u(R), positive below lambda_1.
  auto robin_positive = [&](double lambda) {
    const auto res = detail::shoot(n, R, p, lambda, opts);
    if (res.crossed) return false;  // beyond the first eigenvalue
    return res.w + beta * detail::signed_pow(res.u, p - 1.0) > 0.0;
  };
  lo = 1e-8;
  hi = lambda_d * (1.0 + 1e-6);
  if (!robin_positive(lo)) throw BracketError("boundary relation has no sign change above lambda = 1e-8");
  if (robin_positive(hi)) throw BracketError("boundary relation has no sign change below the Dirichlet eigenvalue");
  sol.diagnostics.bracket_lo = lo;
  sol.diagnostics.bracket_hi = hi;
  while ((hi - lo) > opts.lambda_rel_tol * 1e-2 * hi) {
    const double mid = 0.5 * (lo + hi);
    (robin_positive(mid) ? lo : hi) = mid;
    ++sol.diagnostics.bisection_steps;
  }
  return finish(0.5 * (lo + hi));
}

struct RadialValue {
  double u;
  double du;
};

/// Profile value and slope at radius r, by cubic Hermite interpolation of u
/// and of the flux w on the integration grid.
inline RadialValue evaluate(const RadialSolution& sol, double r) {
  if (r < 0.0 || r > sol.R * (1.0 + 1e-14)) throw DomainError("radius outside [0, R]");
  if (sol.r.size() < 2) throw DomainError("empty radial profile");
  if (r <= sol.r.front()) return {sol.u.front(), detail::flux_to_slope(sol.w.front(), sol.p)};
  const auto it = std::upper_bound(sol.r.begin(), sol.r.end(), r);
  const std::size_t i = it == sol.r.end() ? sol.r.size() - 2 : static_cast<std::size_t>(it - sol.r.begin()) - 1;
  const double r0 = sol.r[i], r1 = sol.r[i + 1], dr = r1 - r0;
  const double s = std::clamp((r - r0) / dr, 0.0, 1.0);
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  const double u = h00 * sol.u[i] + h10 * dr * sol.du[i] + h01 * sol.u[i + 1] + h11 * dr * sol.du[i + 1];
  const double w = h00 * sol.w[i] + h10 * dr * sol.dw[i] + h01 * sol.w[i + 1] + h11 * dr * sol.dw[i + 1];
  return {u, detail::flux_to_slope(w, sol.p)};
}

}  // namespace rpl
