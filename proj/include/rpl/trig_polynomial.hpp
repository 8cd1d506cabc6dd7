#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace rpl {

/// Real trigonometric polynomial
///   f(theta) = a_0 + sum_{k=1}^{D} (a_k cos k theta + b_k sin k theta).
/// `cos_coeffs` has D+1 entries (a_0..a_D); `sin_coeffs` has D+1 entries
/// with sin_coeffs[0] ignored.
class TrigPolynomial {
 public:
  TrigPolynomial() : cos_(1, 0.0), sin_(1, 0.0) {}

  TrigPolynomial(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
      : cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {
    if (cos_.empty()) cos_.push_back(0.0);
    const std::size_t n = std::max(cos_.size(), sin_.size());
    cos_.resize(n, 0.0);
    sin_.resize(n, 0.0);
    sin_[0] = 0.0;
  }

  static TrigPolynomial constant(double c) { return TrigPolynomial({c}, {0.0}); }

  int degree() const { return static_cast<int>(cos_.size()) - 1; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }

  /// Value and first two derivatives in theta.
  struct Jet {
    double f, df, d2f;
  };

  Jet jet(double theta) const {
    Jet out{cos_[0], 0.0, 0.0};
    const double c1 = std::cos(theta), s1 = std::sin(theta);
    double ck = 1.0, sk = 0.0;
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      const double cn = ck * c1 - sk * s1;
      sk = sk * c1 + ck * s1;
      ck = cn;
      const double kk = static_cast<double>(k);
      const double a = cos_[k], b = sin_[k];
      out.f += a * ck + b * sk;
      out.df += kk * (b * ck - a * sk);
      out.d2f -= kk * kk * (a * ck + b * sk);
    }
    return out;
  }

  double operator()(double theta) const { return jet(theta).f; }

  /// Exact mean over one period times 2 pi of f^2.
  double integral_of_square() const {
    double s = 2.0 * std::numbers::pi * cos_[0] * cos_[0];
    for (std::size_t k = 1; k < cos_.size(); ++k)
      s += std::numbers::pi * (cos_[k] * cos_[k] + sin_[k] * sin_[k]);
    return s;
  }

  TrigPolynomial operator+(const TrigPolynomial& o) const {
    const std::size_t n = std::max(cos_.size(), o.cos_.size());
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (k < cos_.size()) a[k] += cos_[k], b[k] += sin_[k];
      if (k < o.cos_.size()) a[k] += o.cos_[k], b[k] += o.sin_[k];
    }
    return {std::move(a), std::move(b)};
  }

  TrigPolynomial operator*(double s) const {
    auto a = cos_, b = sin_;
    for (auto& x : a) x *= s;
    for (auto& x : b) x *= s;
    return {std::move(a), std::move(b)};
  }

  /// Least-squares fit of degree `degree` to (theta_i, y_i). Returns the
  /// fit and stores the max absolute residual in `max_residual` when given.
  static TrigPolynomial fit(std::span<const double> theta, std::span<const double> y, int degree,
                            double* max_residual = nullptr) {
    if (theta.size() != y.size()) throw std::invalid_argument("TrigPolynomial::fit: size mismatch");
    const Eigen::Index rows = static_cast<Eigen::Index>(theta.size());
    const Eigen::Index cols = 2 * degree + 1;
    if (rows < cols) throw std::invalid_argument("TrigPolynomial::fit: too few samples for degree");
    Eigen::MatrixXd basis(rows, cols);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      basis(i, 0) = 1.0;
      for (int k = 1; k <= degree; ++k) {
        basis(i, 2 * k - 1) = std::cos(k * theta[i]);
        basis(i, 2 * k) = std::sin(k * theta[i]);
      }
      rhs(i) = y[i];
    }
    const Eigen::VectorXd c = basis.colPivHouseholderQr().solve(rhs);
    std::vector<double> a(degree + 1, 0.0), b(degree + 1, 0.0);
    a[0] = c(0);
    for (int k = 1; k <= degree; ++k) {
      a[k] = c(2 * k - 1);
      b[k] = c(2 * k);
    }
    if (max_residual) *max_residual = (basis * c - rhs).cwiseAbs().maxCoeff();
    return {std::move(a), std::move(b)};
  }

  /// Trigonometric interpolation of uniformly spaced samples
  /// y_j = f(2 pi j / N), j = 0..N-1 (N odd gives an exact interpolant;
  /// for even N the Nyquist mode is split symmetrically).
  static TrigPolynomial interpolate_uniform(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n == 0) return {};
    const int deg = n / 2;
    std::vector<double> a(deg + 1, 0.0), b(deg + 1, 0.0);
    for (int k = 0; k <= deg; ++k) {
      double sc = 0.0, ss = 0.0;
      for (int j = 0; j < n; ++j) {
        const double ang = 2.0 * std::numbers::pi * k * j / n;
        sc += y[j] * std::cos(ang);
        ss += y[j] * std::sin(ang);
      }
      const bool nyquist = (n % 2 == 0 && k == deg);
      const double scale = (k == 0 || nyquist) ? 1.0 / n : 2.0 / n;
      a[k] = scale * sc;
      b[k] = nyquist ? 0.0 : scale * ss;
    }
    return {std::move(a), std::move(b)};
  }

 private:
  std::vector<double> cos_;
  std::vector<double> sin_;
};

}  // namespace rpl
