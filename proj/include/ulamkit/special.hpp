#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace ulamkit::special {

namespace detail {

// erf via the all-positive power series
//   erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_{n>=0} 2^n x^(2n+1) / (1*3*...*(2n+1)),
// free of cancellation for the |x| <= 1.5 range it is used on.
inline double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x2) * sum;
}

// Laplace continued fraction for x >= 1.5,
//   sqrt(pi) exp(x^2) erfc(x) = 1/(x+ (1/2)/(x+ 1/(x+ (3/2)/(x+ ...)))),
// evaluated with the modified Lentz algorithm.
inline double erfc_cf(double x) {
  const double tiny = 1e-300;
  double f = x, c = f, d = 0.0;
  for (int n = 1; n < 400; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x * x) / (std::sqrt(std::numbers::pi) * f);
}

}  // namespace detail

/// Complementary error function, accurate to ~1e-15 relative over the
/// real line.
[[nodiscard]] inline double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x >= 1.5) return detail::erfc_cf(x);
  if (x >= 0.0) return 1.0 - detail::erf_series(x);
  return 2.0 - erfc(-x);
}

/// Error function.
[[nodiscard]] inline double erf(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return -erf(-x);
  if (x <= 1.5) return detail::erf_series(x);
  return 1.0 - detail::erfc_cf(x);
}

}  // namespace ulamkit::special
