#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include "ulamkit/errors.hpp"

namespace ulamkit {

using Cx = std::complex<double>;

/// Which vector norm (and the induced matrix norm) a computation uses.
enum class NormKind { MaxNorm, EuclidNorm };

[[nodiscard]] constexpr const char* to_string(NormKind k) noexcept {
  return k == NormKind::MaxNorm ? "max" : "euclid";
}

struct Vec2 {
  Cx v1{};
  Cx v2{};

  friend Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.v1 + b.v1, a.v2 + b.v2}; }
  friend Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.v1 - b.v1, a.v2 - b.v2}; }
  friend Vec2 operator*(Cx s, const Vec2& a) { return {s * a.v1, s * a.v2}; }
  friend Vec2 operator*(const Vec2& a, Cx s) { return s * a; }
  Vec2& operator+=(const Vec2& o) { v1 += o.v1; v2 += o.v2; return *this; }
  Vec2 operator-() const { return {-v1, -v2}; }
};

[[nodiscard]] inline double norm(const Vec2& v, NormKind kind) {
  const double a1 = std::abs(v.v1);
  const double a2 = std::abs(v.v2);
  return kind == NormKind::MaxNorm ? std::max(a1, a2) : std::hypot(a1, a2);
}

/// 2x2 complex matrix, row-major entries.
struct Mat2 {
  Cx m11{}, m12{}, m21{}, m22{};

  [[nodiscard]] static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  [[nodiscard]] Cx det() const { return m11 * m22 - m12 * m21; }

  [[nodiscard]] Mat2 inverse() const {
    const Cx d = det();
    if (std::abs(d) < 1e-300) throw SingularMatrixError("2x2 matrix is numerically singular");
    return {m22 / d, -m12 / d, -m21 / d, m11 / d};
  }

  friend Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m.m11 * v.v1 + m.m12 * v.v2, m.m21 * v.v1 + m.m22 * v.v2};
  }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
            a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
  }
  friend Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.m11 + b.m11, a.m12 + b.m12, a.m21 + b.m21, a.m22 + b.m22};
  }
  friend Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.m11 - b.m11, a.m12 - b.m12, a.m21 - b.m21, a.m22 - b.m22};
  }
  friend Mat2 operator*(Cx s, const Mat2& m) {
    return {s * m.m11, s * m.m12, s * m.m21, s * m.m22};
  }
};

[[nodiscard]] inline double max_abs_entry(const Mat2& m) {
  return std::max(std::max(std::abs(m.m11), std::abs(m.m12)),
                  std::max(std::abs(m.m21), std::abs(m.m22)));
}

/// Induced operator norm matching the vector norm: max row sum for the
/// maximum norm, largest singular value for the Euclidean norm.
[[nodiscard]] inline double operator_norm(const Mat2& m, NormKind kind) {
  if (kind == NormKind::MaxNorm) {
    return std::max(std::abs(m.m11) + std::abs(m.m12), std::abs(m.m21) + std::abs(m.m22));
  }
  // Largest eigenvalue of M^H M, closed form for the 2x2 case.
  const double b11 = std::norm(m.m11) + std::norm(m.m21);
  const double b22 = std::norm(m.m12) + std::norm(m.m22);
  const Cx b12 = std::conj(m.m11) * m.m12 + std::conj(m.m21) * m.m22;
  const double mean = 0.5 * (b11 + b22);
  const double disc = std::hypot(0.5 * (b11 - b22), std::abs(b12));
  return std::sqrt(std::max(0.0, mean + disc));
}

/// A 2x2 matrix stored as diag(exp(s1), exp(s2)) * m with real exponents
/// s1, s2 and a modestly-sized factor m. Fundamental matrices of the
/// Jordan forms are held this way so products X(t)*v can combine
/// exponents before exponentiating; the factors of blow-up systems
/// overflow individually while the products stay finite.
struct ScaledMat2 {
  double s1{0.0};
  double s2{0.0};
  Mat2 m{Mat2::identity()};

  /// Dense value; may overflow for extreme exponents.
  [[nodiscard]] Mat2 dense() const {
    const double e1 = std::exp(s1), e2 = std::exp(s2);
    return {e1 * m.m11, e1 * m.m12, e2 * m.m21, e2 * m.m22};
  }

  /// this * v, dense. Overflows only when the product itself overflows.
  [[nodiscard]] Vec2 apply(const Vec2& v) const {
    const Vec2 w = m * v;
    return {std::exp(s1) * w.v1, std::exp(s2) * w.v2};
  }

  /// || this * v || computed in log scale.
  [[nodiscard]] double apply_norm(const Vec2& v, NormKind kind) const {
    const Vec2 w = m * v;
    const double a1 = std::abs(w.v1);
    const double a2 = std::abs(w.v2);
    const double l1 = a1 > 0 ? s1 + std::log(a1) : -std::numeric_limits<double>::infinity();
    const double l2 = a2 > 0 ? s2 + std::log(a2) : -std::numeric_limits<double>::infinity();
    if (kind == NormKind::MaxNorm) return std::exp(std::max(l1, l2));
    const double lm = std::max(l1, l2);
    if (lm == -std::numeric_limits<double>::infinity()) return 0.0;
    const double r1 = std::exp(l1 - lm);
    const double r2 = std::exp(l2 - lm);
    return std::exp(lm) * std::hypot(r1, r2);
  }

  friend Mat2 operator*(const ScaledMat2& a, const Mat2& b) { return a.dense() * b; }
};

}  // namespace ulamkit
