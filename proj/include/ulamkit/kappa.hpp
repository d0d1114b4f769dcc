#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ulamkit/calculus.hpp"
#include "ulamkit/jordan.hpp"
#include "ulamkit/parallel.hpp"

namespace ulamkit::kappa {

using jordan::JordanForm;
using jordan::JordanSystem;

/// Which endpoint anchors the shadow solution. Forward constructs it from
/// the limit at b, Backward from the limit at a, Hyperbolic (form I only)
/// mixes one component from each endpoint.
enum class Direction { Forward, Backward, Hyperbolic };

[[nodiscard]] constexpr const char* to_string(Direction d) noexcept {
  switch (d) {
    case Direction::Forward: return "forward";
    case Direction::Backward: return "backward";
    case Direction::Hyperbolic: return "hyperbolic";
  }
  return "?";
}

enum class Verdict { Holds, Fails, Inconclusive };

[[nodiscard]] constexpr const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

/// Result of probing one of the divergence side-conditions: does the
/// relevant coefficient integral tend to +infinity toward the anchored
/// endpoint? `evidence` is the integral value at the deepest horizon.
struct ConditionReport {
  std::string label;
  Verdict verdict{Verdict::Inconclusive};
  double evidence{0.0};
};

struct KappaValue {
  double value{0.0};
  calculus::ImproperStatus status{calculus::ImproperStatus::Inconclusive};
};

namespace detail {

inline void validate_direction(const JordanSystem& sys, Direction dir) {
  if (dir == Direction::Hyperbolic && sys.form() != JordanForm::I)
    throw ConfigError("hyperbolic direction is defined for form I only");
}

// Exponent accessor G with int_t^s G' appearing as G(s) - G(t).
using GridAccessor = double (*)(const JordanSystem&, double);

inline double acc_min_re(const JordanSystem& s, double t) { return s.prim_min_re(t); }
inline double acc_max_re(const JordanSystem& s, double t) { return s.prim_max_re(t); }
inline double acc_re_a(const JordanSystem& s, double t) { return s.prim_a(t).real(); }
inline double acc_re_b(const JordanSystem& s, double t) { return s.prim_b(t).real(); }

// One-sided kappa integral int over (t, endpoint) of w(s) e^{G(t)-G(s)},
// positively oriented. The exponent is clamped so saturated integrands
// read as divergence instead of overflowing.
template <class WeightFn>
KappaValue one_sided(const JordanSystem& sys, GridAccessor G, const WeightFn& w,
                     double t, double endpoint, calculus::QuadTol tol) {
  const auto schedule = calculus::make_truncation_schedule(t, endpoint);
  sys.ensure_coverage(std::min(t, schedule.back()), std::max(t, schedule.back()));
  const double gt = G(sys, t);
  auto integrand = [&](double s) {
    const double lw = std::log(w(s));  // w >= 1 throughout
    const double e = std::min(gt - G(sys, s) + lw, 690.0);
    return Cx(std::exp(e), 0.0);
  };
  auto out = calculus::improper_integral(integrand, t, endpoint, tol, schedule);
  KappaValue kv;
  kv.status = out.status;
  kv.value = endpoint < t ? -out.value.real() : out.value.real();
  return kv;
}

inline KappaValue combine_max(const KappaValue& a, const KappaValue& b) {
  KappaValue kv;
  if (a.status == calculus::ImproperStatus::Diverged ||
      b.status == calculus::ImproperStatus::Diverged)
    kv.status = calculus::ImproperStatus::Diverged;
  else if (a.status == calculus::ImproperStatus::Inconclusive ||
           b.status == calculus::ImproperStatus::Inconclusive)
    kv.status = calculus::ImproperStatus::Inconclusive;
  else
    kv.status = calculus::ImproperStatus::Converged;
  kv.value = std::max(a.value, b.value);
  return kv;
}

}  // namespace detail

/// kappa(t) for the given direction. Selects among the seven displays:
/// form I forward/backward use the pointwise min/max of the coefficient
/// real parts, hyperbolic takes the max of the two one-sided integrals,
/// form II carries the 1 + |int mu| weight, form III uses alpha alone.
[[nodiscard]] inline KappaValue kappa_at(const JordanSystem& sys, Direction dir,
                                         double t, calculus::QuadTol tol = {}) {
  detail::validate_direction(sys, dir);
  const auto& iv = sys.interval();
  const auto unit = [](double) { return 1.0; };
  switch (sys.form()) {
    case JordanForm::I:
      if (dir == Direction::Forward)
        return detail::one_sided(sys, detail::acc_min_re, unit, t, iv.b, tol);
      if (dir == Direction::Backward)
        return detail::one_sided(sys, detail::acc_max_re, unit, t, iv.a, tol);
      return detail::combine_max(
          detail::one_sided(sys, detail::acc_re_a, unit, t, iv.b, tol),
          detail::one_sided(sys, detail::acc_re_b, unit, t, iv.a, tol));
    case JordanForm::II: {
      const Cx mt = sys.prim_b(t);
      auto w = [&](double s) { return 1.0 + std::abs(sys.prim_b(s) - mt); };
      return detail::one_sided(sys, detail::acc_re_a, w, t,
                               dir == Direction::Forward ? iv.b : iv.a, tol);
    }
    case JordanForm::III:
      return detail::one_sided(sys, detail::acc_re_a, unit, t,
                               dir == Direction::Forward ? iv.b : iv.a, tol);
  }
  return {};
}

/// Default supremum-search grid: n interior points, uniform plus a
/// geometric sequence of offsets toward finite endpoints, sinh-spaced
/// toward infinite endpoints out to half-width w_inf.
[[nodiscard]] inline std::vector<double> make_sample_grid(const Interval& iv, double t0,
                                                          std::size_t n = 512,
                                                          double w_inf = 100.0) {
  std::vector<double> pts;
  pts.push_back(t0);
  const std::size_t m = std::max<std::size_t>(8, n / 2);
  auto side = [&](double endpoint, int sign) {
    if (std::isinf(endpoint)) {
      const double span = std::asinh(w_inf);
      for (std::size_t k = 1; k <= m; ++k)
        pts.push_back(t0 + sign * std::sinh(span * static_cast<double>(k) / m));
      return;
    }
    const double reach = std::abs(endpoint - t0);
    double offset = 0.1 * reach;
    for (int j = 1; j <= 12; ++j, offset *= 0.1) {
      const double p = endpoint - sign * offset;
      if (iv.contains_interior(p)) pts.push_back(p);
    }
    const std::size_t uni = m > 12 ? m - 12 : 0;
    for (std::size_t k = 1; k <= uni; ++k) {
      const double p = t0 + sign * reach * static_cast<double>(k) / (uni + 1);
      if (iv.contains_interior(p)) pts.push_back(p);
    }
  };
  side(iv.b, +1);
  side(iv.a, -1);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::erase_if(pts, [&](double p) { return !iv.contains_interior(p); });
  return pts;
}

/// Probes the divergence side-condition for the direction: the relevant
/// real-part integral must tend to +infinity toward the anchored endpoint.
/// `holds` is declared when the integral passes 1/abs_tol or keeps growing
/// with non-shrinking increments through the whole truncation schedule;
/// `fails` when it settles to a finite value or decreases.
[[nodiscard]] inline ConditionReport check_condition(const JordanSystem& sys, Direction dir,
                                                     calculus::QuadTol tol = {}) {
  detail::validate_direction(sys, dir);
  const auto& iv = sys.interval();
  const double t0 = sys.t0();

  auto monitor = [&](detail::GridAccessor G, double endpoint) {
    const auto schedule = calculus::make_truncation_schedule(t0, endpoint);
    sys.ensure_coverage(std::min(t0, schedule.back()), std::max(t0, schedule.back()));
    const double threshold = 1.0 / tol.abs;
    std::vector<double> g;
    g.reserve(schedule.size());
    for (double T : schedule) {
      g.push_back(G(sys, T));
      if (g.back() >= threshold) return std::pair{Verdict::Holds, g.back()};
    }
    const std::size_t k = g.size();
    if (k < 3) return std::pair{Verdict::Inconclusive, g.back()};
    const double d1 = g[k - 1] - g[k - 2];
    const double d0 = g[k - 2] - g[k - 3];
    const double tiny = 1e-8 * (1.0 + std::abs(g.back()));
    if (std::abs(d1) <= tiny && std::abs(d0) <= tiny)
      return std::pair{Verdict::Fails, g.back()};
    if (d1 > 0.0 && d0 > 0.0 && d1 >= 0.995 * d0)
      return std::pair{Verdict::Holds, g.back()};
    if (d1 < 0.0 && d0 < 0.0) return std::pair{Verdict::Fails, g.back()};
    return std::pair{Verdict::Inconclusive, g.back()};
  };

  ConditionReport rep;
  switch (dir) {
    case Direction::Forward: {
      rep.label = "int of " + std::string(sys.form() == JordanForm::I
                                              ? "min Re(lambda_1, lambda_2)"
                                              : (sys.form() == JordanForm::II ? "Re(lambda)"
                                                                              : "alpha")) +
                  " -> +inf toward b";
      auto G = sys.form() == JordanForm::I ? detail::acc_min_re : detail::acc_re_a;
      auto [v, e] = monitor(G, iv.b);
      rep.verdict = v;
      rep.evidence = e;
      return rep;
    }
    case Direction::Backward: {
      rep.label = "int of " + std::string(sys.form() == JordanForm::I
                                              ? "max Re(lambda_1, lambda_2)"
                                              : (sys.form() == JordanForm::II ? "Re(lambda)"
                                                                              : "alpha")) +
                  " -> +inf toward a";
      auto G = sys.form() == JordanForm::I ? detail::acc_max_re : detail::acc_re_a;
      auto [v, e] = monitor(G, iv.a);
      rep.verdict = v;
      rep.evidence = e;
      return rep;
    }
    case Direction::Hyperbolic: {
      rep.label = "int Re(lambda_1) -> +inf toward b and int Re(lambda_2) -> +inf toward a";
      auto [v1, e1] = monitor(detail::acc_re_a, iv.b);
      auto [v2, e2] = monitor(detail::acc_re_b, iv.a);
      if (v1 == Verdict::Fails || v2 == Verdict::Fails) rep.verdict = Verdict::Fails;
      else if (v1 == Verdict::Holds && v2 == Verdict::Holds) rep.verdict = Verdict::Holds;
      else rep.verdict = Verdict::Inconclusive;
      rep.evidence = std::min(e1, e2);
      return rep;
    }
  }
  return rep;
}

/// Sampled kappa profile. `kappa` holds the raw display values; the Ulam
/// constant additionally carries `norm_scale`, which is sqrt(2) when the
/// requested norm is not the native one for the form (max norm for forms
/// I/II, Euclidean for form III) and 1 otherwise.
struct KappaProfile {
  const JordanSystem* sys{nullptr};
  Direction dir{Direction::Forward};
  NormKind norm{NormKind::MaxNorm};
  double norm_scale{1.0};
  std::vector<double> t;
  std::vector<double> kappa;
  bool exists_everywhere{true};
  double witness_t{0.0};
  calculus::ImproperStatus witness_status{calculus::ImproperStatus::Converged};
  ConditionReport condition;
  double sup_coarse{0.0};
  double argmax_coarse{0.0};
  calculus::QuadTol tol{};
};

[[nodiscard]] inline double native_scale(JordanForm form, NormKind norm) {
  const bool native = (form == JordanForm::III) ? (norm == NormKind::EuclidNorm)
                                                : (norm == NormKind::MaxNorm);
  return native ? 1.0 : std::numbers::sqrt2;
}

[[nodiscard]] inline KappaProfile kappa_profile(const JordanSystem& sys, Direction dir,
                                                NormKind norm,
                                                std::vector<double> grid = {},
                                                calculus::QuadTol tol = {}) {
  detail::validate_direction(sys, dir);
  KappaProfile p;
  p.sys = &sys;
  p.dir = dir;
  p.norm = norm;
  p.norm_scale = native_scale(sys.form(), norm);
  p.tol = tol;
  p.t = grid.empty() ? make_sample_grid(sys.interval(), sys.t0()) : std::move(grid);
  std::sort(p.t.begin(), p.t.end());
  for (double x : p.t)
    if (!sys.interval().contains_interior(x))
      throw ConfigError("kappa sample grid must be interior to the interval");

  // Serial pre-coverage of every horizon the workers will touch, so the
  // parallel evaluations below never extend the shared grids.
  const auto& iv = sys.interval();
  const double width = p.t.back() - p.t.front();
  double lo_env = p.t.front();
  double hi_env = p.t.back();
  auto sched_end = [](double t_sample, double endpoint) {
    return calculus::make_truncation_schedule(t_sample, endpoint).back();
  };
  for (double edge : {p.t.front(), p.t.back()}) {
    if (dir != Direction::Backward) {
      double e = sched_end(edge, iv.b);
      if (std::isinf(iv.b)) e += width;  // interior samples reach slightly deeper
      hi_env = std::max(hi_env, e);
    }
    if (dir != Direction::Forward) {
      double e = sched_end(edge, iv.a);
      if (std::isinf(iv.a)) e -= width;
      lo_env = std::min(lo_env, e);
    }
  }
  sys.ensure_coverage(lo_env, hi_env);

  p.kappa.assign(p.t.size(), 0.0);
  std::vector<calculus::ImproperStatus> status(p.t.size());
  parallel_for(p.t.size(), [&](std::size_t i) {
    const KappaValue kv = kappa_at(sys, dir, p.t[i], tol);
    p.kappa[i] = kv.value;
    status[i] = kv.status;
  });

  for (std::size_t i = 0; i < p.t.size(); ++i) {
    if (status[i] != calculus::ImproperStatus::Converged) {
      p.exists_everywhere = false;
      p.witness_t = p.t[i];
      p.witness_status = status[i];
      break;
    }
  }

  p.condition = check_condition(sys, dir, tol);

  if (p.exists_everywhere && !p.t.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.t.size(); ++i)
      if (p.kappa[i] > p.kappa[best]) best = i;
    p.sup_coarse = p.kappa[best];
    p.argmax_coarse = p.t[best];
  }
  return p;
}

/// Refined (best) Ulam constant from a profile: golden-section around the
/// bracketing coarse panel for interior maxima, one-sided geometric
/// extrapolation for suprema approached at an interval endpoint (flagged
/// attained=false). Ties resolve to the smallest t.
struct BestConstant {
  double K{0.0};
  double t_star{0.0};
  bool attained{true};
};

[[nodiscard]] inline BestConstant best_constant(const KappaProfile& p,
                                                double refine_tol = 1e-8) {
  if (!p.exists_everywhere)
    throw HypothesisError("kappa does not exist everywhere (witness t = " +
                          std::to_string(p.witness_t) + ")");
  if (p.t.size() < 4) throw ConfigError("kappa profile grid is too small");
  const JordanSystem& sys = *p.sys;

  std::size_t best = 0;
  for (std::size_t i = 1; i < p.t.size(); ++i)
    if (p.kappa[i] > p.kappa[best]) best = i;

  auto eval = [&](double t) { return kappa_at(sys, p.dir, t, p.tol).value; };

  BestConstant out;
  const std::size_t last = p.t.size() - 1;
  if (best > 0 && best < last) {
    auto [t_star, k_star] =
        calculus::golden_section_max(eval, p.t[best - 1], p.t[best + 1], refine_tol);
    out.K = p.norm_scale * std::max(k_star, p.kappa[best]);
    out.t_star = t_star;
    out.attained = true;
    return out;
  }

  // Supremum at the sampling edge: follow the trailing samples toward the
  // boundary and extrapolate their geometric trend.
  const bool right = (best == last);
  std::vector<double> run;
  for (std::size_t k = 0; k < 8 && k < p.t.size(); ++k)
    run.push_back(p.kappa[right ? p.t.size() - 1 - k : k]);
  // run[0] is the closest-to-boundary value; differences go away from it.
  const double flat = p.tol.rel * (1.0 + run[0]) + p.tol.abs;
  const double total_rise = run.front() - run.back();
  if (total_rise <= 8.0 * flat) {
    // Numerically flat profile; the edge value is the supremum.
    out.K = p.norm_scale * p.kappa[best];
    out.t_star = p.t[best];
    out.attained = true;
    return out;
  }
  const double d1 = run[0] - run[1];
  const double d0 = run[1] - run[2];
  out.t_star = right ? sys.interval().b : sys.interval().a;
  out.attained = false;
  if (std::abs(d1) <= flat) {
    // Rising toward the boundary but already below resolution at the
    // deepest offsets: the remaining tail is negligible.
    out.K = p.norm_scale * run[0];
    return out;
  }
  const double rho = d0 != 0.0 ? d1 / d0 : 1.0;
  if (!(rho > 0.0) || rho > 0.9)
    throw HypothesisError(
        "kappa supremum still increasing at the sampling horizon (unbounded?)");
  out.K = p.norm_scale * (run[0] + d1 * rho / (1.0 - rho));
  return out;
}

/// One-call convenience: profile + refinement.
[[nodiscard]] inline BestConstant best_ulam_constant(const JordanSystem& sys, Direction dir,
                                                     NormKind norm,
                                                     std::vector<double> grid = {},
                                                     calculus::QuadTol tol = {}) {
  const KappaProfile p = kappa_profile(sys, dir, norm, std::move(grid), tol);
  return best_constant(p);
}

/// Closed-form best constants for constant coefficients (I = R):
///   form I    max(1/|Re l1|, 1/|Re l2|)          max norm
///   form II   (|Re l|+1)/(Re l)^2, unit mu       max norm
///   form III  1/|alpha| (Euclidean), sqrt(2)/|alpha| (max norm, beta != 0)
[[nodiscard]] inline double closed_form_constant(const JordanSystem& sys, NormKind norm) {
  // Constancy check by sampling.
  const auto& iv = sys.interval();
  const double lo = std::max(iv.a, sys.t0() - 10.0);
  const double hi = std::min(iv.b, sys.t0() + 10.0);
  const Cx a0 = sys.coef_a(sys.t0());
  const Cx b0 = sys.coef_b(sys.t0());
  for (int k = 0; k <= 32; ++k) {
    const double t = lo + (hi - lo) * k / 32.0;
    if (!iv.contains_interior(t)) continue;
    if (std::abs(sys.coef_a(t) - a0) > 1e-12 * (1.0 + std::abs(a0)) ||
        std::abs(sys.coef_b(t) - b0) > 1e-12 * (1.0 + std::abs(b0)))
      throw std::invalid_argument("closed-form constants require constant coefficients");
  }

  switch (sys.form()) {
    case JordanForm::I: {
      if (norm != NormKind::MaxNorm)
        throw std::invalid_argument("form I closed-form constant is stated for the max norm");
      const double r1 = a0.real(), r2 = b0.real();
      if (r1 == 0.0 || r2 == 0.0)
        throw HypothesisError("zero real part: no closed-form Ulam constant");
      return std::max(1.0 / std::abs(r1), 1.0 / std::abs(r2));
    }
    case JordanForm::II: {
      if (norm != NormKind::MaxNorm)
        throw std::invalid_argument("form II closed-form constant is stated for the max norm");
      if (std::abs(b0 - Cx(1.0, 0.0)) > 1e-12)
        throw std::invalid_argument("form II closed-form constant covers mu == 1");
      const double r = a0.real();
      if (r == 0.0) throw HypothesisError("zero real part: no closed-form Ulam constant");
      return (std::abs(r) + 1.0) / (r * r);
    }
    case JordanForm::III: {
      const double alpha = a0.real();
      if (alpha == 0.0)
        throw HypothesisError("alpha = 0 is a center: not Ulam stable, no constant");
      if (norm == NormKind::EuclidNorm) return 1.0 / std::abs(alpha);
      if (b0.real() == 0.0)
        throw std::invalid_argument("max-norm form III constant requires beta != 0");
      return std::numbers::sqrt2 / std::abs(alpha);
    }
  }
  throw std::invalid_argument("bad form");
}

}  // namespace ulamkit::kappa
