#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "ulamkit/calculus.hpp"
#include "ulamkit/errors.hpp"
#include "ulamkit/interval.hpp"
#include "ulamkit/mat2.hpp"

namespace ulamkit::jordan {

using ScalarFn = std::function<Cx(double)>;

enum class JordanForm { I, II, III };

[[nodiscard]] constexpr const char* to_string(JordanForm f) noexcept {
  switch (f) {
    case JordanForm::I: return "I";
    case JordanForm::II: return "II";
    case JordanForm::III: return "III";
  }
  return "?";
}

struct FundamentalPair {
  ScaledMat2 X;
  ScaledMat2 Xinv;
};

/// A two-dimensional system x' = A(t) x whose coefficient matrix is one of
/// the generalized Jordan normal forms:
///   I    diag(lambda1, lambda2)
///   II   [[lambda, mu], [0, lambda]]
///   III  [[alpha, beta], [-beta, alpha]]        (alpha, beta real-valued)
/// Antiderivatives of the coefficients are accumulated once on shared
/// grids and reused by every module that needs the fundamental matrix.
///
/// Grids grow lazily. Call ensure_coverage before evaluating from several
/// threads; afterwards the object is read-only and shareable.
class JordanSystem {
public:
  [[nodiscard]] static JordanSystem form_i(ScalarFn lambda1, ScalarFn lambda2,
                                           Interval iv, double t0) {
    return JordanSystem(JordanForm::I, std::move(lambda1), std::move(lambda2), iv, t0);
  }
  [[nodiscard]] static JordanSystem form_ii(ScalarFn lambda, ScalarFn mu,
                                            Interval iv, double t0) {
    return JordanSystem(JordanForm::II, std::move(lambda), std::move(mu), iv, t0);
  }
  [[nodiscard]] static JordanSystem form_iii(ScalarFn alpha, ScalarFn beta,
                                             Interval iv, double t0) {
    JordanSystem sys(JordanForm::III, std::move(alpha), std::move(beta), iv, t0);
    sys.check_real_coefficients();
    return sys;
  }

  [[nodiscard]] JordanForm form() const { return form_; }
  [[nodiscard]] const Interval& interval() const { return iv_; }
  [[nodiscard]] double t0() const { return t0_; }

  [[nodiscard]] Cx coef_a(double t) const { return ca_(t); }
  [[nodiscard]] Cx coef_b(double t) const { return cb_(t); }

  [[nodiscard]] Mat2 coefficient_matrix(double t) const {
    const Cx a = ca_(t);
    const Cx b = cb_(t);
    switch (form_) {
      case JordanForm::I: return {a, 0.0, 0.0, b};
      case JordanForm::II: return {a, b, 0.0, a};
      case JordanForm::III: {
        const double ar = real_checked(a, t);
        const double br = real_checked(b, t);
        return {ar, br, -br, ar};
      }
    }
    return {};
  }

  /// int_{t0}^t of the first coefficient (lambda1 / lambda / alpha).
  [[nodiscard]] Cx prim_a(double t) const { return grid(GridId::A).value_at(t); }
  /// int_{t0}^t of the second coefficient (lambda2 / mu / beta).
  [[nodiscard]] Cx prim_b(double t) const { return grid(GridId::B).value_at(t); }
  /// Form I only: int_{t0}^t min(Re lambda1, Re lambda2).
  [[nodiscard]] double prim_min_re(double t) const {
    return grid(GridId::MinRe).value_at(t).real();
  }
  /// Form I only: int_{t0}^t max(Re lambda1, Re lambda2).
  [[nodiscard]] double prim_max_re(double t) const {
    return grid(GridId::MaxRe).value_at(t).real();
  }

  /// X(t) X^{-1}(s), exponent-scaled. X(t) = propagator(t, t0).
  [[nodiscard]] ScaledMat2 propagator(double t, double s) const {
    switch (form_) {
      case JordanForm::I: {
        const Cx d1 = prim_a(t) - prim_a(s);
        const Cx d2 = prim_b(t) - prim_b(s);
        Mat2 m{};
        m.m11 = std::polar(1.0, d1.imag());
        m.m22 = std::polar(1.0, d2.imag());
        return {d1.real(), d2.real(), m};
      }
      case JordanForm::II: {
        const Cx dl = prim_a(t) - prim_a(s);
        const Cx dm = prim_b(t) - prim_b(s);
        const Cx phase = std::polar(1.0, dl.imag());
        Mat2 m{phase, phase * dm, 0.0, phase};
        return {dl.real(), dl.real(), m};
      }
      case JordanForm::III: {
        const double da = (prim_a(t) - prim_a(s)).real();
        const double th = (prim_b(t) - prim_b(s)).real();
        const double c = std::cos(th), sn = std::sin(th);
        return {da, da, Mat2{c, sn, -sn, c}};
      }
    }
    return {};
  }

  [[nodiscard]] FundamentalPair fundamental(double t) const {
    return {propagator(t, t0_), propagator(t0_, t)};
  }

  /// Extends the antiderivative grids to cover [lo, hi] clipped to the
  /// open interior of the interval. Not thread-safe.
  void ensure_coverage(double lo, double hi) const {
    // Matches the closest-approach gap of make_truncation_schedule.
    const double margin_a = iv_.finite_left()
        ? 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(iv_.a))
        : 0.0;
    const double margin_b = iv_.finite_right()
        ? 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(iv_.b))
        : 0.0;
    lo = std::max(lo, iv_.a + margin_a);
    hi = std::min(hi, iv_.b - margin_b);
    if (!(lo < hi)) return;
    for_each_grid([&](calculus::AntiderivativeGrid& g) {
      g.extend_to(hi);
      g.extend_to(lo);
    });
  }

  [[nodiscard]] calculus::QuadTol tol() const { return tol_; }

private:
  enum class GridId { A, B, MinRe, MaxRe };

  JordanForm form_;
  ScalarFn ca_, cb_;
  Interval iv_;
  double t0_;
  calculus::QuadTol tol_{};

  struct Grids {
    std::optional<calculus::AntiderivativeGrid> a, b, min_re, max_re;
  };
  std::shared_ptr<Grids> grids_ = std::make_shared<Grids>();

  JordanSystem(JordanForm f, ScalarFn ca, ScalarFn cb, Interval iv, double t0)
      : form_(f), ca_(std::move(ca)), cb_(std::move(cb)), iv_(iv), t0_(t0) {
    if (!iv_.contains_interior(t0))
      throw ConfigError("base point t0 must be strictly interior to the interval");
  }

  double real_checked(Cx v, double t) const {
    if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real())))
      throw ConfigError("form III coefficient has nonzero imaginary part at t = " +
                        std::to_string(t));
    return v.real();
  }

  void check_real_coefficients() const {
    const double lo = std::max(iv_.a, t0_ - 8.0);
    const double hi = std::min(iv_.b, t0_ + 8.0);
    for (int k = 1; k < 16; ++k) {
      const double t = lo + (hi - lo) * k / 16.0;
      if (!iv_.contains_interior(t)) continue;
      real_checked(ca_(t), t);
      real_checked(cb_(t), t);
    }
  }

  calculus::AntiderivativeGrid& grid(GridId id) const {
    Grids& g = *grids_;
    auto make = [&](ScalarFn fn) {
      const double seed[] = {t0_};
      return calculus::AntiderivativeGrid(std::move(fn), t0_, seed, tol_);
    };
    switch (id) {
      case GridId::A:
        if (!g.a) g.a.emplace(make(ca_));
        return *g.a;
      case GridId::B:
        if (!g.b) g.b.emplace(make(cb_));
        return *g.b;
      case GridId::MinRe: {
        if (form_ != JordanForm::I)
          throw ConfigError("min-real-part antiderivative only exists for form I");
        if (!g.min_re)
          g.min_re.emplace(make([ca = ca_, cb = cb_](double t) {
            return Cx(std::min(ca(t).real(), cb(t).real()), 0.0);
          }));
        return *g.min_re;
      }
      case GridId::MaxRe: {
        if (form_ != JordanForm::I)
          throw ConfigError("max-real-part antiderivative only exists for form I");
        if (!g.max_re)
          g.max_re.emplace(make([ca = ca_, cb = cb_](double t) {
            return Cx(std::max(ca(t).real(), cb(t).real()), 0.0);
          }));
        return *g.max_re;
      }
    }
    throw ConfigError("bad grid id");
  }

  template <class Fn>
  void for_each_grid(const Fn& fn) const {
    fn(grid(GridId::A));
    fn(grid(GridId::B));
    if (form_ == JordanForm::I) {
      fn(grid(GridId::MinRe));
      fn(grid(GridId::MaxRe));
    }
  }
};

/// Operation-level wrappers.
[[nodiscard]] inline Mat2 coefficient_matrix(const JordanSystem& sys, double t) {
  return sys.coefficient_matrix(t);
}
[[nodiscard]] inline FundamentalPair fundamental(const JordanSystem& sys, double t) {
  return sys.fundamental(t);
}

}  // namespace ulamkit::jordan
