#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ulamkit/calculus.hpp"
#include "ulamkit/expr.hpp"
#include "ulamkit/ode.hpp"
#include "ulamkit/shadow.hpp"

namespace ulamkit::transform {

using ode::MatFn;

struct SupResult {
  double sup{0.0};
  double argmax{0.0};
  bool attained{true};
  bool bounded{true};
};

/// Supremum of a continuous scalar function over the interval interior:
/// coarse grid, golden-section refinement of interior maxima, geometric
/// extrapolation at the edges. `bounded=false` when the samples are still
/// rising at the horizon.
template <class Fn>
[[nodiscard]] SupResult sup_on_interval(const Fn& f, const Interval& iv, double t0,
                                        std::size_t n = 512, double refine_tol = 1e-8) {
  const auto grid = kappa::make_sample_grid(iv, t0, n);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid[i]);
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (vals[i] > vals[best]) best = i;

  SupResult out;
  if (best > 0 && best + 1 < grid.size()) {
    auto [arg, sup] =
        calculus::golden_section_max(f, grid[best - 1], grid[best + 1], refine_tol);
    out.sup = std::max(sup, vals[best]);
    out.argmax = arg;
    return out;
  }
  const bool right = best + 1 == grid.size();
  std::vector<double> run;
  for (std::size_t k = 0; k < 8 && k < grid.size(); ++k)
    run.push_back(vals[right ? grid.size() - 1 - k : k]);
  const double flat = 1e-9 * (1.0 + std::abs(run[0]));
  out.argmax = right ? iv.b : iv.a;
  if (run.front() - run.back() <= 8.0 * flat) {
    out.sup = vals[best];
    out.argmax = grid[best];
    return out;
  }
  const double d1 = run[0] - run[1];
  const double d0 = run[1] - run[2];
  out.attained = false;
  if (std::abs(d1) <= flat) {
    out.sup = run[0];
    return out;
  }
  const double rho = d0 != 0.0 ? d1 / d0 : 1.0;
  if (!(rho > 0.0) || rho > 0.9) {
    out.bounded = false;
    out.sup = run[0];
    return out;
  }
  out.sup = run[0] + d1 * rho / (1.0 - rho);
  return out;
}

/// A time-dependent similarity transform R(t) together with its
/// derivative, inverses, and the sup data needed to propagate Ulam
/// constants. Entries come from DSL expressions (symbolic R') or plain
/// functions (4th-order finite-difference R').
class TransformSpec {
public:
  [[nodiscard]] static TransformSpec from_exprs(const expr::Expr& r11, const expr::Expr& r12,
                                                const expr::Expr& r21, const expr::Expr& r22,
                                                Interval iv, NormKind norm, double t0) {
    TransformSpec s(iv, norm, t0);
    auto at = [](const expr::Expr& e) { return e.fn(); };
    s.r_ = {at(r11), at(r12), at(r21), at(r22)};
    auto d = [](const expr::Expr& e) { return e.derivative().fn(); };
    s.rp_ = {d(r11), d(r12), d(r21), d(r22)};
    return s;
  }

  [[nodiscard]] static TransformSpec from_strings(const std::string& r11,
                                                  const std::string& r12,
                                                  const std::string& r21,
                                                  const std::string& r22, Interval iv,
                                                  NormKind norm, double t0) {
    return from_exprs(expr::Expr::parse(r11), expr::Expr::parse(r12),
                      expr::Expr::parse(r21), expr::Expr::parse(r22), iv, norm, t0);
  }

  [[nodiscard]] static TransformSpec from_fn(MatFn R, Interval iv, NormKind norm,
                                             double t0) {
    TransformSpec s(iv, norm, t0);
    s.rfn_ = std::move(R);
    return s;
  }

  [[nodiscard]] Mat2 R(double t) const {
    if (rfn_) return rfn_(t);
    return {r_[0](t), r_[1](t), r_[2](t), r_[3](t)};
  }

  [[nodiscard]] Mat2 Rprime(double t) const {
    if (!rfn_) return {rp_[0](t), rp_[1](t), rp_[2](t), rp_[3](t)};
    const double h = 1e-5 * (1.0 + std::abs(t));
    const Mat2 m2 = rfn_(t + 2 * h), m1 = rfn_(t + h), p1 = rfn_(t - h), p2 = rfn_(t - 2 * h);
    const Cx w = 1.0 / (12.0 * h);
    return w * ((-1.0) * m2 + 8.0 * m1 - 8.0 * p1 + p2);
  }

  [[nodiscard]] Mat2 Rinv(double t) const {
    const Mat2 r = R(t);
    if (std::abs(r.det()) <= 1e-12)
      throw SingularMatrixError("R(t) is singular at t = " + std::to_string(t));
    return r.inverse();
  }

  [[nodiscard]] const Interval& interval() const { return iv_; }
  [[nodiscard]] NormKind norm() const { return norm_; }
  [[nodiscard]] double t0() const { return t0_; }

  [[nodiscard]] const SupResult& sup_R() const {
    if (!sup_r_)
      sup_r_ = sup_on_interval([this](double t) { return operator_norm(R(t), norm_); },
                               iv_, t0_);
    return *sup_r_;
  }

  [[nodiscard]] const SupResult& sup_Rinv() const {
    if (!sup_rinv_)
      sup_rinv_ = sup_on_interval(
          [this](double t) { return operator_norm(Rinv(t), norm_); }, iv_, t0_);
    return *sup_rinv_;
  }

  [[nodiscard]] bool bounded() const { return sup_R().bounded && sup_Rinv().bounded; }

private:
  explicit TransformSpec(Interval iv, NormKind norm, double t0)
      : iv_(iv), norm_(norm), t0_(t0) {}

  Interval iv_;
  NormKind norm_;
  double t0_;
  std::array<std::function<Cx(double)>, 4> r_{};
  std::array<std::function<Cx(double)>, 4> rp_{};
  MatFn rfn_;
  mutable std::optional<SupResult> sup_r_;
  mutable std::optional<SupResult> sup_rinv_;
};

/// J(t) = (R'(t) + R(t) A(t)) R^{-1}(t).
[[nodiscard]] inline MatFn similarity(MatFn A, const TransformSpec& R) {
  return [A = std::move(A), &R](double t) {
    return (R.Rprime(t) + R.R(t) * A(t)) * R.Rinv(t);
  };
}

struct Classification {
  std::optional<jordan::JordanForm> form;  // nullopt: general matrix
  double max_pattern_residual{0.0};
};

/// Pattern-matches J(t) against the three Jordan forms at interior
/// samples (tolerance 1e-10 relative to the local matrix scale).
[[nodiscard]] inline Classification classify(const MatFn& J, const Interval& iv, double t0) {
  const double reach = 8.0;
  const double lo = std::max(iv.a + 1e-3 * (std::isfinite(iv.a) ? (iv.b - iv.a) : 1.0),
                             t0 - reach);
  const double hi = std::min(iv.b - 1e-3 * (std::isfinite(iv.b) ? (iv.b - iv.a) : 1.0),
                             t0 + reach);
  bool diag = true, upper = true, skew = true;
  double worst_diag = 0.0, worst_upper = 0.0, worst_skew = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double t = lo + (hi - lo) * k / 40.0;
    if (!iv.contains_interior(t)) continue;
    const Mat2 m = J(t);
    const double s = std::max(1.0, max_abs_entry(m));
    const double tol = 1e-10 * s;
    const double off = std::max(std::abs(m.m12), std::abs(m.m21));
    const double low = std::abs(m.m21);
    const double eq_diag = std::abs(m.m11 - m.m22);
    const double skew_off = std::abs(m.m12 + m.m21);
    const double imag_mass = std::max({std::abs(m.m11.imag()), std::abs(m.m12.imag()),
                                       std::abs(m.m21.imag()), std::abs(m.m22.imag())});
    if (off > tol) diag = false;
    if (low > tol || eq_diag > tol) upper = false;
    if (eq_diag > tol || skew_off > tol || imag_mass > tol) skew = false;
    worst_diag = std::max(worst_diag, off / s);
    worst_upper = std::max(worst_upper, std::max(low, eq_diag) / s);
    worst_skew = std::max(worst_skew, std::max({eq_diag, skew_off, imag_mass}) / s);
  }
  Classification c;
  if (diag) {
    c.form = jordan::JordanForm::I;
    c.max_pattern_residual = worst_diag;
  } else if (upper) {
    c.form = jordan::JordanForm::II;
    c.max_pattern_residual = worst_upper;
  } else if (skew) {
    c.form = jordan::JordanForm::III;
    c.max_pattern_residual = worst_skew;
  }
  return c;
}

/// Wraps a classified J(t) as a JordanSystem whose coefficients evaluate
/// the matrix function directly.
[[nodiscard]] inline jordan::JordanSystem as_jordan_system(const MatFn& J,
                                                           jordan::JordanForm form,
                                                           Interval iv, double t0) {
  switch (form) {
    case jordan::JordanForm::I:
      return jordan::JordanSystem::form_i([J](double t) { return J(t).m11; },
                                          [J](double t) { return J(t).m22; }, iv, t0);
    case jordan::JordanForm::II:
      return jordan::JordanSystem::form_ii([J](double t) { return J(t).m11; },
                                           [J](double t) { return J(t).m12; }, iv, t0);
    case jordan::JordanForm::III:
      return jordan::JordanSystem::form_iii(
          [J](double t) { return Cx(J(t).m11.real(), 0.0); },
          [J](double t) { return Cx(J(t).m12.real(), 0.0); }, iv, t0);
  }
  throw ConfigError("bad form");
}

/// sup||R|| sup||R^{-1}|| K; requires both sups finite.
[[nodiscard]] inline double propagate_constant(double K, const TransformSpec& R) {
  const SupResult& sr = R.sup_R();
  const SupResult& si = R.sup_Rinv();
  if (!sr.bounded || !si.bounded)
    throw HypothesisError("||R|| or ||R^{-1}|| is unbounded on I: constant propagation "
                          "is not licensed");
  return sr.sup * si.sup * K;
}

inline void fill_slopes(ode::Trajectory& tr) {
  const std::size_t n = tr.t.size();
  if (n < 3) throw ConfigError("need at least 3 nodes to estimate slopes");
  tr.xdot.assign(n, Vec2{});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a, m, b;
    if (i == 0) { a = 0; m = 1; b = 2; }
    else if (i + 1 == n) { a = n - 3; m = n - 2; b = n - 1; }
    else { a = i - 1; m = i; b = i + 1; }
    const double t0 = tr.t[a], t1 = tr.t[m], t2 = tr.t[b], tt = tr.t[i];
    auto dcomp = [&](auto get) {
      const Cx y0 = get(tr.x[a]), y1 = get(tr.x[m]), y2 = get(tr.x[b]);
      return y0 * ((2 * tt - t1 - t2) / ((t0 - t1) * (t0 - t2))) +
             y1 * ((2 * tt - t0 - t2) / ((t1 - t0) * (t1 - t2))) +
             y2 * ((2 * tt - t0 - t1) / ((t2 - t0) * (t2 - t1)));
    };
    tr.xdot[i] = {dcomp([](const Vec2& v) { return v.v1; }),
                  dcomp([](const Vec2& v) { return v.v2; })};
  }
}

struct ReducedProblem {
  ode::Trajectory psi;  // phi - z, an approximate solution of x' = A x
  double z_residual{0.0};
};

/// Strips a particular solution z of x' = A x + f off the approximate
/// solution phi; shadowing x for the inhomogeneous problem is y + z with
/// y the homogeneous shadow of psi.
[[nodiscard]] inline ReducedProblem reduce_inhomogeneous(const MatFn& A,
                                                         const ode::Forcing& f,
                                                         const ode::Trajectory& z,
                                                         const shadow::ApproxSolution& phi,
                                                         double tol = 1e-6) {
  // Residual of z by 4th-order differences on a uniform resample.
  const std::size_t n = 1025;
  const double lo = z.lo(), hi = z.hi();
  const double h = (hi - lo) / static_cast<double>(n - 1);
  std::vector<Vec2> zs(n);
  double z_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    zs[i] = z.sample(lo + h * static_cast<double>(i));
    z_scale = std::max(z_scale, norm(zs[i], NormKind::MaxNorm));
  }
  ReducedProblem out;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double t = lo + h * static_cast<double>(i);
    auto stencil = [&](auto get) {
      return (-get(zs[i + 2]) + 8.0 * get(zs[i + 1]) - 8.0 * get(zs[i - 1]) +
              get(zs[i - 2])) /
             (12.0 * h);
    };
    const Vec2 zdot{stencil([](const Vec2& v) { return v.v1; }),
                    stencil([](const Vec2& v) { return v.v2; })};
    const Vec2 r = zdot - A(t) * zs[i] - f.at(t);
    out.z_residual = std::max(out.z_residual, norm(r, NormKind::MaxNorm));
  }
  if (out.z_residual > tol * (1.0 + z_scale))
    throw Error("z residual too large: the supplied trajectory does not solve "
                "x' = A x + f to tolerance");

  auto [plo, phi_hi] = std::pair{lo, hi};
  if (phi.is_sampled()) {
    plo = std::max(plo, phi.trajectory().lo());
    phi_hi = std::min(phi_hi, phi.trajectory().hi());
  }
  const std::size_t m = 1025;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = plo + (phi_hi - plo) * static_cast<double>(i) / (m - 1);
    out.psi.t.push_back(t);
    out.psi.x.push_back(phi.eval(t) - z.sample(t));
  }
  fill_slopes(out.psi);
  return out;
}

}  // namespace ulamkit::transform
