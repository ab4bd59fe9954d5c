#pragma once

// Exact 2x2 linear algebra: eigenstructure, real Jordan form, closed-form
// exponentials, the inter-sample transition matrix and the Lyapunov solve.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ietlab/error.hpp"
#include "ietlab/policy.hpp"

namespace ietlab {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x1, -a.x2}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }
inline double norm(Vec2 a) { return std::hypot(a.x1, a.x2); }
inline Vec2 unit_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Dense 2x2 matrix, row-major fields.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 zero() { return {}; }
  static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
  static constexpr Mat2 scalar(double s) { return {s, 0.0, 0.0, s}; }

  constexpr double trace() const { return a11 + a22; }
  constexpr double det() const { return a11 * a22 - a12 * a21; }
  constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
  double max_abs() const {
    return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
  }
  bool finite() const {
    return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) && std::isfinite(a22);
  }

  friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
  }
  friend constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
  }
  friend constexpr Mat2 operator-(const Mat2& a) { return {-a.a11, -a.a12, -a.a21, -a.a22}; }
  friend constexpr Mat2 operator*(double s, const Mat2& a) {
    return {s * a.a11, s * a.a12, s * a.a21, s * a.a22};
  }
  friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
  }
  friend constexpr Vec2 operator*(const Mat2& a, Vec2 v) {
    return {a.a11 * v.x1 + a.a12 * v.x2, a.a21 * v.x1 + a.a22 * v.x2};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

inline Mat2 inverse(const Mat2& m) {
  const double d = m.det();
  return (1.0 / d) * Mat2{m.a22, -m.a12, -m.a21, m.a11};
}

inline Mat2 symmetrize(const Mat2& m) {
  const double off = 0.5 * (m.a12 + m.a21);
  return {m.a11, off, off, m.a22};
}

inline double quad_form(const Mat2& m, Vec2 x) { return dot(x, m * x); }

/// Eigenvalues of a symmetric matrix, ascending.
inline std::array<double, 2> sym_eigenvalues(const Mat2& s) {
  const double mean = 0.5 * (s.a11 + s.a22);
  const double half_diff = 0.5 * (s.a11 - s.a22);
  const double off = 0.5 * (s.a12 + s.a21);
  const double radius = std::hypot(half_diff, off);
  return {mean - radius, mean + radius};
}

/// Singular values, ascending. Closed form through the symmetric/antisymmetric split.
inline std::array<double, 2> singular_values(const Mat2& m) {
  const double p = std::hypot(m.a11 + m.a22, m.a21 - m.a12);
  const double q = std::hypot(m.a11 - m.a22, m.a21 + m.a12);
  return {0.5 * std::abs(p - q), 0.5 * (p + q)};
}

/// Induced 2-norm.
inline double norm2(const Mat2& m) { return singular_values(m)[1]; }

enum class JordanKind { RealDistinct, RealRepeatedDiagonalizable, RealRepeatedDefective, ComplexPair };

inline const char* to_string(JordanKind kind) {
  switch (kind) {
    case JordanKind::RealDistinct: return "RealDistinct";
    case JordanKind::RealRepeatedDiagonalizable: return "RealRepeatedDiagonalizable";
    case JordanKind::RealRepeatedDefective: return "RealRepeatedDefective";
    case JordanKind::ComplexPair: return "ComplexPair";
  }
  return "Unknown";
}

/// A = S J S^-1 with J in real Jordan form.
///
/// RealDistinct: J = diag(lambda1, lambda2), lambda1 < lambda2, unit eigenvector columns.
/// ComplexPair: J = [[mu, omega], [-omega, mu]], omega > 0, S = [Re v, Im v] for a unit v.
/// RealRepeatedDefective: J = [[lambda, 1], [0, lambda]].
struct RealJordan {
  JordanKind kind = JordanKind::RealDistinct;
  Mat2 S = Mat2::identity();
  Mat2 J = Mat2::zero();
  double lambda1 = 0.0;  ///< smaller real eigenvalue, or the repeated one
  double lambda2 = 0.0;
  double mu = 0.0;       ///< real part of a complex pair
  double omega = 0.0;    ///< imaginary part of a complex pair, > 0

  bool diagonalizable() const { return kind != JordanKind::RealRepeatedDefective; }
};

namespace detail {

// Null vector of the singular 2x2 matrix m, taken from the larger row.
inline Vec2 null_vector(const Mat2& m) {
  const double r1 = std::hypot(m.a11, m.a12);
  const double r2 = std::hypot(m.a21, m.a22);
  Vec2 v = r1 >= r2 ? Vec2{-m.a12, m.a11} : Vec2{-m.a22, m.a21};
  const double n = norm(v);
  if (n == 0.0) return {1.0, 0.0};
  return (1.0 / n) * v;
}

// Real eigenvector of a for eigenvalue lambda (complex parts zero).
inline Vec2 eigenvector(const Mat2& a, double lambda) {
  return null_vector(a - Mat2::scalar(lambda));
}

}  // namespace detail

inline RealJordan eigen2(const Mat2& a, const NumericPolicy& policy = {}) {
  RealJordan out;
  const double tr = a.trace();
  const double det = a.det();
  const double half = 0.5 * tr;
  const double disc = tr * tr - 4.0 * det;
  const double disc_tol = policy.defective_disc_tol * std::max(1.0, tr * tr);

  if (std::abs(disc) <= disc_tol) {
    const double lambda = half;
    const Mat2 nil = a - Mat2::scalar(lambda);
    out.lambda1 = out.lambda2 = lambda;
    if (nil.max_abs() <= policy.defective_disc_tol * std::max(1.0, a.max_abs())) {
      out.kind = JordanKind::RealRepeatedDiagonalizable;
      out.J = Mat2::scalar(lambda);
      out.S = Mat2::identity();
      return out;
    }
    // Pick v2 as the basis vector that nil moves the most, v1 = nil * v2.
    const double c1 = std::hypot(nil.a11, nil.a21);
    const double c2 = std::hypot(nil.a12, nil.a22);
    const Vec2 v2 = c1 >= c2 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const Vec2 v1 = nil * v2;
    out.kind = JordanKind::RealRepeatedDefective;
    out.J = {lambda, 1.0, 0.0, lambda};
    out.S = {v1.x1, v2.x1, v1.x2, v2.x2};
    return out;
  }

  if (disc > 0.0) {
    // Avoid cancellation in the smaller-magnitude root.
    // q is the root of larger magnitude; disc > 0 keeps it nonzero.
    const double root = std::sqrt(disc);
    const double q = 0.5 * (tr + std::copysign(root, tr));
    const double other = det / q;
    const double lo = std::min(q, other);
    const double hi = std::max(q, other);
    const Vec2 v1 = detail::eigenvector(a, lo);
    const Vec2 v2 = detail::eigenvector(a, hi);
    out.kind = JordanKind::RealDistinct;
    out.lambda1 = lo;
    out.lambda2 = hi;
    out.J = Mat2::diag(lo, hi);
    out.S = {v1.x1, v2.x1, v1.x2, v2.x2};
    return out;
  }

  // Complex pair mu +- i omega. Eigenvector v = (a12, mu - a11 + i omega) or the
  // equivalent from the second row, whichever is better conditioned.
  const double mu = half;
  const double omega = 0.5 * std::sqrt(-disc);
  double pr, pi, qr, qi;  // v = (pr + i pi, qr + i qi)
  if (std::abs(a.a12) >= std::abs(a.a21)) {
    pr = a.a12; pi = 0.0;
    qr = mu - a.a11; qi = omega;
  } else {
    pr = mu - a.a22; pi = omega;
    qr = a.a21; qi = 0.0;
  }
  const double n = std::sqrt(pr * pr + pi * pi + qr * qr + qi * qi);
  // S = [Re v, Im v], then A S = S [[mu, omega], [-omega, mu]].
  out.kind = JordanKind::ComplexPair;
  out.mu = mu;
  out.omega = omega;
  out.lambda1 = out.lambda2 = mu;
  out.S = {pr / n, pi / n, qr / n, qi / n};
  out.J = {mu, omega, -omega, mu};
  return out;
}

/// e^{J tau} of a real Jordan block.
inline Mat2 jordan_exp(const RealJordan& jordan, double tau) {
  switch (jordan.kind) {
    case JordanKind::RealDistinct:
      return Mat2::diag(std::exp(jordan.lambda1 * tau), std::exp(jordan.lambda2 * tau));
    case JordanKind::RealRepeatedDiagonalizable:
      return Mat2::scalar(std::exp(jordan.lambda1 * tau));
    case JordanKind::RealRepeatedDefective: {
      const double e = std::exp(jordan.lambda1 * tau);
      return {e, e * tau, 0.0, e};
    }
    case JordanKind::ComplexPair: {
      const double e = std::exp(jordan.mu * tau);
      const double c = std::cos(jordan.omega * tau);
      const double s = std::sin(jordan.omega * tau);
      return {e * c, e * s, -e * s, e * c};
    }
  }
  return Mat2::identity();
}

namespace detail {

inline void check_overflow(const Mat2& m, const NumericPolicy& policy) {
  if (!m.finite() || m.max_abs() > policy.overflow_limit) {
    throw Error(ErrorKind::Overflow, "matrix exponential entry exceeds the overflow limit");
  }
}

}  // namespace detail

/// e^{A tau} in closed form.
///
/// Each Jordan class has e^{A tau} = e^{s tau} (c(tau) I + d(tau) (A - s I)) with
/// s = tr(A)/2: cosh/sinh for distinct real eigenvalues, cos/sin for a complex
/// pair, (1, tau) for a repeated eigenvalue. This equals S e^{J tau} S^-1 without
/// inverting S.
inline Mat2 mat_exp(const Mat2& a, const RealJordan& jordan, double tau,
                    const NumericPolicy& policy = {}) {
  const double s = 0.5 * a.trace();
  const Mat2 shifted = a - Mat2::scalar(s);
  // c and d already carry the e^{s tau} factor.
  double c = 0.0;
  double d = 0.0;
  switch (jordan.kind) {
    case JordanKind::RealDistinct: {
      const double gap = jordan.lambda2 - jordan.lambda1;
      const double e1 = std::exp(jordan.lambda1 * tau);
      const double e2 = std::exp(jordan.lambda2 * tau);
      c = 0.5 * (e1 + e2);
      d = gap * tau < 1e-300 ? e1 * tau : e1 * std::expm1(gap * tau) / gap;
      break;
    }
    case JordanKind::ComplexPair: {
      const double w = jordan.omega;
      const double scale = std::exp(s * tau);
      c = scale * std::cos(w * tau);
      d = scale * (w * tau < 1e-8 ? tau * (1.0 - w * w * tau * tau / 6.0) : std::sin(w * tau) / w);
      break;
    }
    case JordanKind::RealRepeatedDiagonalizable:
    case JordanKind::RealRepeatedDefective: {
      const double scale = std::exp(s * tau);
      c = scale;
      d = scale * tau;
      break;
    }
  }
  const Mat2 out = Mat2::scalar(c) + d * shifted;
  detail::check_overflow(out, policy);
  return out;
}

inline Mat2 mat_exp(const Mat2& a, double tau, const NumericPolicy& policy = {}) {
  return mat_exp(a, eigen2(a, policy), tau, policy);
}

/// 4x4 dense matrix used only for the augmented exponential.
using Mat4 = std::array<std::array<double, 4>, 4>;

namespace detail {

inline Mat4 mul4(const Mat4& x, const Mat4& y) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      const double xik = x[i][k];
      for (int j = 0; j < 4; ++j) out[i][j] += xik * y[k][j];
    }
  return out;
}

}  // namespace detail

/// exp(Z) for a 4x4 matrix by scaling and squaring with a Taylor series.
inline Mat4 expm4(const Mat4& z) {
  double norm1 = 0.0;
  for (int j = 0; j < 4; ++j) {
    double col = 0.0;
    for (int i = 0; i < 4; ++i) col += std::abs(z[i][j]);
    norm1 = std::max(norm1, col);
  }
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const double scale = std::ldexp(1.0, -squarings);

  Mat4 scaled{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) scaled[i][j] = z[i][j] * scale;

  // |scaled| <= 0.5, so 20 terms reach well below machine epsilon.
  Mat4 result{};
  Mat4 term{};
  for (int i = 0; i < 4; ++i) result[i][i] = term[i][i] = 1.0;
  for (int k = 1; k <= 20; ++k) {
    term = detail::mul4(term, scaled);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) term[i][j] /= k;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) result[i][j] += term[i][j];
  }
  for (int s = 0; s < squarings; ++s) result = detail::mul4(result, result);
  return result;
}

/// G(tau) = e^{A tau} + int_0^tau e^{A(tau-s)} ds (A_c - A), via exp of
/// [[A, A_c - A], [0, 0]] tau. Valid for any A.
inline Mat2 transition_g_augmented(const Mat2& a, const Mat2& a_c, double tau,
                                   const NumericPolicy& policy = {}) {
  const Mat2 gap = a_c - a;
  Mat4 z{};
  z[0][0] = a.a11 * tau; z[0][1] = a.a12 * tau; z[0][2] = gap.a11 * tau; z[0][3] = gap.a12 * tau;
  z[1][0] = a.a21 * tau; z[1][1] = a.a22 * tau; z[1][2] = gap.a21 * tau; z[1][3] = gap.a22 * tau;
  const Mat4 e = expm4(z);
  const Mat2 out{e[0][0] + e[0][2], e[0][1] + e[0][3], e[1][0] + e[1][2], e[1][1] + e[1][3]};
  detail::check_overflow(out, policy);
  return out;
}

/// G(tau) = I + A^-1 (e^{A tau} - I) A_c. Requires invertible A.
inline Mat2 transition_g_shortcut(const Mat2& a, const RealJordan& jordan, const Mat2& a_inv,
                                  const Mat2& a_c, double tau, const NumericPolicy& policy = {}) {
  const Mat2 e = mat_exp(a, jordan, tau, policy);
  const Mat2 out = Mat2::identity() + a_inv * (e - Mat2::identity()) * a_c;
  detail::check_overflow(out, policy);
  return out;
}

inline bool a_is_invertible(const Mat2& a, const NumericPolicy& policy = {}) {
  const double m = a.max_abs();
  return std::abs(a.det()) > policy.singular_a_tol * m * m;
}

/// Lyapunov solve P A_c + A_c^T P = -Q for symmetric P.
inline Mat2 lyapunov_solve(const Mat2& a_c, const Mat2& q, const NumericPolicy& policy = {}) {
  if (!(a_c.trace() < 0.0) || !(a_c.det() > 0.0)) {
    throw Error(ErrorKind::NotHurwitz, "closed-loop matrix is not Hurwitz (need tr < 0 and det > 0)");
  }
  // Unknowns p = (p11, p12, p22); the three independent entries of the equation.
  const double a = a_c.a11, b = a_c.a12, c = a_c.a21, d = a_c.a22;
  const double qs12 = 0.5 * (q.a12 + q.a21);
  // (1,1): 2 a p11 + 2 c p12            = -q11
  // (1,2): b p11 + (a + d) p12 + c p22  = -q12
  // (2,2): 2 b p12 + 2 d p22            = -q22
  std::array<std::array<double, 4>, 3> m{{
      {2.0 * a, 2.0 * c, 0.0, -q.a11},
      {b, a + d, c, -qs12},
      {0.0, 2.0 * b, 2.0 * d, -q.a22},
  }};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  const double p11 = m[0][3] / m[0][0];
  const double p12 = m[1][3] / m[1][1];
  const double p22 = m[2][3] / m[2][2];
  const Mat2 p{p11, p12, p12, p22};
  const Mat2 residual = p * a_c + a_c.transpose() * p + q;
  if (residual.max_abs() > policy.lyapunov_residual_tol * std::max(1.0, q.max_abs())) {
    throw Error(ErrorKind::NotHurwitz, "Lyapunov solve residual too large");
  }
  return p;
}

/// Angle of v in [0, 2pi).
inline double arg2(Vec2 v, const NumericPolicy& policy = {}) {
  if (norm(v) <= policy.zero_vector_tol) throw Error(ErrorKind::ZeroVector, "angle of the zero vector");
  double a = std::atan2(v.x2, v.x1);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  if (a >= 2.0 * std::numbers::pi) a = 0.0;
  return a;
}

/// sigma_m(tau) = e^{lambda tau} sqrt(((tau^2 + 2) - tau sqrt(tau^2 + 4)) / 2).
inline double defective_min_singular(double lambda, double tau) {
  const double t2 = tau * tau;
  const double inner = 0.5 * ((t2 + 2.0) - tau * std::sqrt(t2 + 4.0));
  return std::exp(lambda * tau) * std::sqrt(std::max(inner, 0.0));
}

/// Minimum singular value of e^{J tau}.
inline double min_singular_expJ(const RealJordan& jordan, double tau) {
  switch (jordan.kind) {
    case JordanKind::RealDistinct:
      return std::exp(std::min(jordan.lambda1 * tau, jordan.lambda2 * tau));
    case JordanKind::RealRepeatedDiagonalizable:
      return std::exp(jordan.lambda1 * tau);
    case JordanKind::ComplexPair:
      return std::exp(jordan.mu * tau);
    case JordanKind::RealRepeatedDefective:
      return defective_min_singular(jordan.lambda1, tau);
  }
  return 0.0;
}

/// Representative of angle in (-pi, pi].
inline double wrap_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(angle, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

/// Representative of angle in [0, period).
inline double wrap_positive(double angle, double period) {
  double r = std::fmod(angle, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

}  // namespace ietlab
