#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fmorph/error.hpp"

namespace fmorph {

/// Degree-2 Taylor coefficients of a scalar with respect to k active
/// coordinates: value, gradient, and symmetric Hessian. All arithmetic
/// follows truncated Taylor rules, so composing smooth primitives keeps the
/// first and second derivatives exact.
struct Jet2 {
  double val = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;

  Jet2() = default;
  Jet2(double v, Eigen::VectorXd g, Eigen::MatrixXd h)
      : val(v), grad(std::move(g)), hess(std::move(h)) {}

  static Jet2 constant(double c, int k) {
    return {c, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k)};
  }

  /// Coordinate seed: value x in slot i, unit gradient, zero Hessian.
  static Jet2 variable(double x, int k, int i) {
    Jet2 j = constant(x, k);
    j.grad(i) = 1.0;
    return j;
  }

  int dim() const { return static_cast<int>(grad.size()); }

  bool is_constant(double eps = 0.0) const {
    return grad.lpNorm<Eigen::Infinity>() <= eps && hess.lpNorm<Eigen::Infinity>() <= eps;
  }
};

namespace detail {

/// Univariate chain rule: y = F(u) given F(u.val), F'(u.val), F''(u.val).
inline Jet2 chain1(const Jet2& u, double f, double fp, double fpp) {
  Jet2 r;
  r.val = f;
  r.grad = fp * u.grad;
  r.hess = fp * u.hess + fpp * (u.grad * u.grad.transpose());
  return r;
}

/// Bivariate chain rule: y = F(a, b) given F and its partials at the point.
inline Jet2 chain2(const Jet2& a, const Jet2& b, double f, double fa, double fb, double faa,
                   double fab, double fbb) {
  Jet2 r;
  r.val = f;
  r.grad = fa * a.grad + fb * b.grad;
  r.hess = fa * a.hess + fb * b.hess + faa * (a.grad * a.grad.transpose()) +
           fab * (a.grad * b.grad.transpose() + b.grad * a.grad.transpose()) +
           fbb * (b.grad * b.grad.transpose());
  return r;
}

inline bool is_integer(double x) { return std::isfinite(x) && x == std::floor(x); }

}  // namespace detail

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.val + b.val, a.grad + b.grad, a.hess + b.hess};
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.val - b.val, a.grad - b.grad, a.hess - b.hess};
}
inline Jet2 operator-(const Jet2& a) { return {-a.val, -a.grad, -a.hess}; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return detail::chain2(a, b, a.val * b.val, b.val, a.val, 0.0, 1.0, 0.0);
}
inline Jet2 operator*(double c, const Jet2& a) { return {c * a.val, c * a.grad, c * a.hess}; }
inline Jet2 operator*(const Jet2& a, double c) { return c * a; }
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  if (b.val == 0.0) throw Error(ErrorCode::DomainError, "division by zero");
  const double inv = 1.0 / b.val;
  return detail::chain2(a, b, a.val / b.val, inv, -a.val * inv * inv, 0.0, -inv * inv,
                        2.0 * a.val * inv * inv * inv);
}
inline Jet2 operator/(const Jet2& a, double c) { return a / Jet2::constant(c, a.dim()); }

inline Jet2 sin(const Jet2& u) {
  const double s = std::sin(u.val), c = std::cos(u.val);
  return detail::chain1(u, s, c, -s);
}
inline Jet2 cos(const Jet2& u) {
  const double s = std::sin(u.val), c = std::cos(u.val);
  return detail::chain1(u, c, -s, -c);
}
inline Jet2 tan(const Jet2& u) {
  const double t = std::tan(u.val), d = 1.0 + t * t;
  return detail::chain1(u, t, d, 2.0 * t * d);
}
inline Jet2 tanh(const Jet2& u) {
  const double t = std::tanh(u.val), d = 1.0 - t * t;
  return detail::chain1(u, t, d, -2.0 * t * d);
}
inline Jet2 exp(const Jet2& u) {
  const double e = std::exp(u.val);
  return detail::chain1(u, e, e, e);
}
inline Jet2 log(const Jet2& u) {
  if (u.val <= 0.0) throw Error(ErrorCode::DomainError, "log of non-positive value");
  const double inv = 1.0 / u.val;
  return detail::chain1(u, std::log(u.val), inv, -inv * inv);
}
inline Jet2 sqrt(const Jet2& u) {
  if (u.val <= 0.0) throw Error(ErrorCode::DomainError, "sqrt of non-positive value");
  const double s = std::sqrt(u.val);
  return detail::chain1(u, s, 0.5 / s, -0.25 / (u.val * s));
}
/// abs with derivative sign(x); a DomainError only at exactly 0.
inline Jet2 abs(const Jet2& u) {
  if (u.val == 0.0) throw Error(ErrorCode::DomainError, "abs is not differentiable at 0");
  const double s = u.val > 0.0 ? 1.0 : -1.0;
  return detail::chain1(u, std::abs(u.val), s, 0.0);
}
inline Jet2 atan2(const Jet2& y, const Jet2& x) {
  const double d = x.val * x.val + y.val * y.val;
  if (d == 0.0) throw Error(ErrorCode::DomainError, "atan2(0, 0)");
  const double fy = x.val / d;
  const double fx = -y.val / d;
  const double d2 = d * d;
  const double fyy = -2.0 * x.val * y.val / d2;
  const double fyx = (y.val * y.val - x.val * x.val) / d2;
  const double fxx = 2.0 * x.val * y.val / d2;
  return detail::chain2(y, x, std::atan2(y.val, x.val), fy, fx, fyy, fyx, fxx);
}
inline Jet2 min(const Jet2& a, const Jet2& b) { return a.val <= b.val ? a : b; }
inline Jet2 max(const Jet2& a, const Jet2& b) { return a.val >= b.val ? a : b; }

inline Jet2 pow(const Jet2& a, const Jet2& b) {
  const double v = std::pow(a.val, b.val);
  if (b.is_constant()) {
    const double c = b.val;
    if (c == 0.0) return Jet2::constant(1.0, a.dim());
    if (c == 1.0) return detail::chain1(a, v, 1.0, 0.0);
    if (a.val > 0.0 || (detail::is_integer(c) && (a.val != 0.0 || c >= 2.0))) {
      return detail::chain1(a, v, c * std::pow(a.val, c - 1.0),
                            c * (c - 1.0) * std::pow(a.val, c - 2.0));
    }
    throw Error(ErrorCode::DomainError, "pow: base must be positive for non-integer exponent");
  }
  if (a.val <= 0.0)
    throw Error(ErrorCode::DomainError, "pow: base must be positive for variable exponent");
  const double la = std::log(a.val);
  const double fa = b.val * v / a.val;
  const double fb = v * la;
  const double faa = b.val * (b.val - 1.0) * v / (a.val * a.val);
  const double fab = v / a.val * (1.0 + b.val * la);
  const double fbb = v * la * la;
  return detail::chain2(a, b, v, fa, fb, faa, fab, fbb);
}

/// Gauss-Jordan inversion of a matrix of jets (partial pivoting on values).
/// Inputs must be square with all entries sharing the same jet dimension.
inline std::vector<std::vector<Jet2>> jet_matrix_inverse(std::vector<std::vector<Jet2>> a) {
  const int n = static_cast<int>(a.size());
  const int k = a.empty() ? 0 : a[0][0].dim();
  std::vector<std::vector<Jet2>> inv(n, std::vector<Jet2>(n, Jet2::constant(0.0, k)));
  for (int i = 0; i < n; ++i) inv[i][i] = Jet2::constant(1.0, k);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col].val) > std::abs(a[piv][col].val)) piv = r;
    if (a[piv][col].val == 0.0)
      throw Error(ErrorCode::NotPositiveDefinite, "singular matrix in jet inversion");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const Jet2 d = a[col][col];
    for (int c = 0; c < n; ++c) {
      a[col][c] = a[col][c] / d;
      inv[col][c] = inv[col][c] / d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet2 factor = a[r][col];
      if (factor.val == 0.0 && factor.is_constant()) continue;
      for (int c = 0; c < n; ++c) {
        a[r][c] = a[r][c] - factor * a[col][c];
        inv[r][c] = inv[r][c] - factor * inv[col][c];
      }
    }
  }
  return inv;
}

}  // namespace fmorph
