#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ulamkit/expr.hpp"
#include "ulamkit/kappa.hpp"
#include "ulamkit/ode.hpp"

namespace ulamkit::shadow {

using jordan::JordanSystem;
using kappa::Direction;

/// An epsilon-approximate solution: either an analytic pair of DSL
/// expressions (differentiable symbolically) or a sampled trajectory
/// (differentiated numerically).
class ApproxSolution {
public:
  [[nodiscard]] static ApproxSolution analytic(expr::Expr phi1, expr::Expr phi2) {
    ApproxSolution s;
    s.repr_ = Analytic{std::move(phi1), std::move(phi2)};
    return s;
  }
  [[nodiscard]] static ApproxSolution sampled(ode::Trajectory tr) {
    ApproxSolution s;
    s.repr_ = std::move(tr);
    return s;
  }

  [[nodiscard]] bool is_sampled() const {
    return std::holds_alternative<ode::Trajectory>(repr_);
  }
  [[nodiscard]] const ode::Trajectory& trajectory() const {
    return std::get<ode::Trajectory>(repr_);
  }

  [[nodiscard]] Vec2 eval(double t) const {
    if (is_sampled()) return trajectory().sample(t);
    const auto& a = std::get<Analytic>(repr_);
    return {a.phi1.eval(t), a.phi2.eval(t)};
  }

  [[nodiscard]] bool has_symbolic_derivative() const { return !is_sampled(); }

  [[nodiscard]] Vec2 deriv(double t) const {
    const auto& a = std::get<Analytic>(repr_);
    if (!d1_) {
      d1_ = a.phi1.derivative();
      d2_ = a.phi2.derivative();
    }
    return {d1_->eval(t), d2_->eval(t)};
  }

  /// Evaluation window: the trajectory range, or [lo, hi] clipped to the
  /// interval for analytic solutions.
  [[nodiscard]] std::pair<double, double> window(const Interval& iv,
                                                 double fallback_halfwidth,
                                                 double t0) const {
    if (is_sampled()) return {trajectory().lo(), trajectory().hi()};
    const double lo = std::isfinite(iv.a) ? iv.a : t0 - fallback_halfwidth;
    const double hi = std::isfinite(iv.b) ? iv.b : t0 + fallback_halfwidth;
    return {lo, hi};
  }

private:
  struct Analytic {
    expr::Expr phi1, phi2;
  };
  std::variant<Analytic, ode::Trajectory> repr_;
  mutable std::optional<expr::Expr> d1_, d2_;
};

/// Defect f = phi' - A(t) phi on an evaluation grid and its sup norm.
struct DefectReport {
  std::vector<double> t;
  std::vector<Vec2> f;
  double epsilon{0.0};
  double argsup{0.0};
  bool grid_warning{false};  // full- vs half-grid sup estimates differ > 1%
};

/// Computes the defect on a uniform grid over `range` (defaults to the
/// solution's own window). Sampled solutions are differentiated with
/// 4th-order central differences, so two grid points at each end carry no
/// defect sample.
[[nodiscard]] inline DefectReport defect(const ApproxSolution& phi, const JordanSystem& sys,
                                         NormKind norm,
                                         std::optional<std::pair<double, double>> range = {},
                                         std::size_t n = 2049) {
  auto [lo, hi] = range ? *range : phi.window(sys.interval(), 20.0, sys.t0());
  const auto& iv = sys.interval();
  // Stay strictly inside the interval: coefficients may blow up at the ends.
  const double pad = 1e-9 * (hi - lo);
  lo = std::max(lo, iv.a + (std::isfinite(iv.a) ? pad : 0.0));
  hi = std::min(hi, iv.b - (std::isfinite(iv.b) ? pad : 0.0));
  if (!(lo < hi)) throw ConfigError("defect range is empty");

  const double h = (hi - lo) / static_cast<double>(n - 1);
  std::vector<Vec2> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = phi.eval(lo + h * static_cast<double>(i));

  DefectReport rep;
  const bool symbolic = phi.has_symbolic_derivative();
  const std::size_t first = symbolic ? 0 : 2;
  const std::size_t last = symbolic ? n - 1 : n - 3;
  for (std::size_t i = first; i <= last; ++i) {
    const double ti = lo + h * static_cast<double>(i);
    Vec2 dphi;
    if (symbolic) {
      dphi = phi.deriv(ti);
    } else {
      auto stencil = [&](auto get) {
        return (-get(values[i + 2]) + 8.0 * get(values[i + 1]) - 8.0 * get(values[i - 1]) +
                get(values[i - 2])) /
               (12.0 * h);
      };
      dphi = {stencil([](const Vec2& v) { return v.v1; }),
              stencil([](const Vec2& v) { return v.v2; })};
    }
    const Vec2 fi = dphi - sys.coefficient_matrix(ti) * values[i];
    rep.t.push_back(ti);
    rep.f.push_back(fi);
  }
  double half_sup = 0.0;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    const double m = ulamkit::norm(rep.f[i], norm);
    if (m > rep.epsilon) {
      rep.epsilon = m;
      rep.argsup = rep.t[i];
    }
    if (i % 2 == 0) half_sup = std::max(half_sup, m);
  }
  if (rep.epsilon > 0.0 && std::abs(rep.epsilon - half_sup) > 0.01 * rep.epsilon)
    rep.grid_warning = true;
  return rep;
}

namespace detail {

[[nodiscard]] inline std::vector<double> limit_schedule(const JordanSystem& sys, double from,
                                                        double endpoint,
                                                        const ApproxSolution* phi) {
  auto sched = calculus::make_truncation_schedule(from, endpoint);
  if (phi && phi->is_sampled()) {
    // Clip to the trajectory and make its very edge the deepest probe.
    const auto& tr = phi->trajectory();
    std::erase_if(sched, [&](double T) { return !tr.covers(T); });
    const double edge = endpoint > from ? tr.hi() : tr.lo();
    if (sched.empty() || sched.back() != edge) sched.push_back(edge);
  }
  if (!sched.empty())
    sys.ensure_coverage(std::min(from, sched.back()), std::max(from, sched.back()));
  return sched;
}

/// Accepts the limit at the first probe whose increment is below the
/// tolerance and not growing; the schedule spacing grows geometrically,
/// so a genuinely convergent sequence shows strictly shrinking increments
/// while a drifting one keeps failing the bound.
[[nodiscard]] inline Cx limit_of(const std::vector<double>& ts,
                                 const std::function<Cx(double)>& u, double tol,
                                 const char* what) {
  if (ts.size() < 3)
    throw NoLimitError(std::string("not enough points to extract the ") + what +
                       " limit (trajectory too short?)");
  Cx prev = u(ts[0]);
  double prev_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const Cx cur = u(ts[k]);
    const double d = std::abs(cur - prev);
    if (k >= 2 && d <= tol && d <= prev_d) return cur;
    prev = cur;
    prev_d = d;
  }
  throw NoLimitError(std::string(what) +
                     " limit failed its Cauchy criterion (hypothesis violation?)");
}

}  // namespace detail

/// The constant vector lim X^{-1}(t) phi(t) toward the anchored endpoint
/// (componentwise from opposite endpoints in the hyperbolic case),
/// extracted along the truncation schedule with an absolute Cauchy
/// criterion.
[[nodiscard]] inline Vec2 anchor(const ApproxSolution& phi, const JordanSystem& sys,
                                 Direction dir, double anchor_tol = 1e-7) {
  const auto& iv = sys.interval();
  const double t0 = sys.t0();
  auto u_full = [&](double T) { return sys.propagator(t0, T).apply(phi.eval(T)); };
  switch (dir) {
    case Direction::Forward: {
      auto ts = detail::limit_schedule(sys, t0, iv.b, &phi);
      const Cx c1 = detail::limit_of(ts, [&](double T) { return u_full(T).v1; },
                                     anchor_tol, "forward anchor (component 1)");
      const Cx c2 = detail::limit_of(ts, [&](double T) { return u_full(T).v2; },
                                     anchor_tol, "forward anchor (component 2)");
      return {c1, c2};
    }
    case Direction::Backward: {
      auto ts = detail::limit_schedule(sys, t0, iv.a, &phi);
      const Cx c1 = detail::limit_of(ts, [&](double T) { return u_full(T).v1; },
                                     anchor_tol, "backward anchor (component 1)");
      const Cx c2 = detail::limit_of(ts, [&](double T) { return u_full(T).v2; },
                                     anchor_tol, "backward anchor (component 2)");
      return {c1, c2};
    }
    case Direction::Hyperbolic: {
      auto ts_b = detail::limit_schedule(sys, t0, iv.b, &phi);
      auto ts_a = detail::limit_schedule(sys, t0, iv.a, &phi);
      const Cx c1 = detail::limit_of(ts_b, [&](double T) { return u_full(T).v1; },
                                     anchor_tol, "hyperbolic anchor (component 1, t->b)");
      const Cx c2 = detail::limit_of(ts_a, [&](double T) { return u_full(T).v2; },
                                     anchor_tol, "hyperbolic anchor (component 2, t->a)");
      return {c1, c2};
    }
  }
  return {};
}

/// Exact anchor by variation of parameters when the forcing is known:
/// phi(t0) plus the improper integral of X^{-1}(s) f(s) toward the
/// anchored endpoint(s).
[[nodiscard]] inline Vec2 anchor_from_forcing(const JordanSystem& sys, Direction dir,
                                              Vec2 phi_at_t0, const ode::Forcing& f,
                                              calculus::QuadTol tol = {}) {
  const auto& iv = sys.interval();
  const double t0 = sys.t0();
  auto component = [&](int comp, double endpoint) {
    const auto sched = calculus::make_truncation_schedule(t0, endpoint);
    sys.ensure_coverage(std::min(t0, sched.back()), std::max(t0, sched.back()));
    auto integrand = [&](double s) {
      const Vec2 v = sys.propagator(t0, s).apply(f.at(s));
      return comp == 1 ? v.v1 : v.v2;
    };
    auto out = calculus::improper_integral(integrand, t0, endpoint, tol, sched);
    if (!out.converged())
      throw NoLimitError("variation-of-parameters anchor integral did not converge");
    return out.value;
  };
  switch (dir) {
    case Direction::Forward:
      return {phi_at_t0.v1 + component(1, iv.b), phi_at_t0.v2 + component(2, iv.b)};
    case Direction::Backward:
      return {phi_at_t0.v1 + component(1, iv.a), phi_at_t0.v2 + component(2, iv.a)};
    case Direction::Hyperbolic:
      return {phi_at_t0.v1 + component(1, iv.b), phi_at_t0.v2 + component(2, iv.a)};
  }
  return {};
}

/// x(t) = X(t) * anchor on the given grid.
[[nodiscard]] inline ode::Trajectory shadow_solution(Vec2 anchor_vec, const JordanSystem& sys,
                                                     const std::vector<double>& grid) {
  ode::Trajectory tr;
  if (grid.empty()) throw ConfigError("shadow grid is empty");
  sys.ensure_coverage(grid.front(), grid.back());
  for (double t : grid) {
    const Vec2 x = sys.propagator(t, sys.t0()).apply(anchor_vec);
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.xdot.push_back(sys.coefficient_matrix(t) * x);
  }
  return tr;
}

/// Sup deviation between an approximate solution and a shadow trajectory,
/// measured at the trajectory nodes. Returns (D, argsup).
[[nodiscard]] inline std::pair<double, double> deviation(const ApproxSolution& phi,
                                                         const ode::Trajectory& x,
                                                         NormKind norm) {
  double D = 0.0, arg = x.t.front();
  for (std::size_t i = 0; i < x.t.size(); ++i) {
    const double m = ulamkit::norm(phi.eval(x.t[i]) - x.x[i], norm);
    if (m > D) {
      D = m;
      arg = x.t[i];
    }
  }
  return {D, arg};
}

/// Pointwise deviation through the scaled fundamental matrix:
/// || X(t)(u(t)-c) || with u = X^{-1} phi, immune to the overflow of X's
/// factors near blow-up endpoints.
[[nodiscard]] inline std::vector<double> deviation_curve(const JordanSystem& sys,
                                                         const ApproxSolution& phi,
                                                         Vec2 anchor_vec,
                                                         const std::vector<double>& ts,
                                                         NormKind norm) {
  if (ts.empty()) throw ConfigError("deviation grid is empty");
  sys.ensure_coverage(ts.front(), ts.back());
  const double t0 = sys.t0();
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) {
    const Vec2 u = sys.propagator(t0, t).apply(phi.eval(t));
    out.push_back(sys.propagator(t, t0).apply_norm(u - anchor_vec, norm));
  }
  return out;
}

[[nodiscard]] inline std::pair<double, double> deviation_from_anchor(
    const JordanSystem& sys, const ApproxSolution& phi, Vec2 anchor_vec,
    const std::vector<double>& ts, NormKind norm) {
  const auto curve = deviation_curve(sys, phi, anchor_vec, ts, norm);
  double D = 0.0, arg = ts.front();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (curve[i] > D) {
      D = curve[i];
      arg = ts[i];
    }
  }
  return {D, arg};
}

enum class ProbeVerdict { Diverges, NoDivergence, Inconclusive };

[[nodiscard]] constexpr const char* to_string(ProbeVerdict v) noexcept {
  switch (v) {
    case ProbeVerdict::Diverges: return "diverges";
    case ProbeVerdict::NoDivergence: return "no-divergence";
    case ProbeVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ProbeResult {
  std::vector<double> t;
  std::vector<double> growth;  // ||X(t) delta||
  ProbeVerdict verdict{ProbeVerdict::Inconclusive};
};

/// Growth of || X(t) delta || toward the anchored endpoint; `diverges`
/// once it exceeds `threshold` and is still increasing at the horizon.
/// Quantifies the uniqueness argument: any second candidate anchor drifts
/// away from the shadow without bound when the divergence condition holds.
[[nodiscard]] inline ProbeResult uniqueness_probe(const JordanSystem& sys, Direction dir,
                                                  Vec2 delta, NormKind norm,
                                                  double threshold) {
  const auto& iv = sys.interval();
  const double endpoint = dir == Direction::Backward ? iv.a : iv.b;
  auto sched = detail::limit_schedule(sys, sys.t0(), endpoint, nullptr);
  ProbeResult res;
  for (double T : sched) {
    res.t.push_back(T);
    res.growth.push_back(sys.propagator(T, sys.t0()).apply_norm(delta, norm));
  }
  const std::size_t n = res.growth.size();
  if (n < 3) return res;
  const bool rising = res.growth[n - 1] > res.growth[n - 2];
  const double peak = *std::max_element(res.growth.begin(), res.growth.end());
  if (peak > threshold && rising) res.verdict = ProbeVerdict::Diverges;
  else if (!rising && peak <= threshold) res.verdict = ProbeVerdict::NoDivergence;
  else res.verdict = ProbeVerdict::Inconclusive;
  return res;
}

/// End-to-end record for one shadowing run.
struct ShadowReport {
  double epsilon{0.0};
  double K{0.0};
  Direction dir{Direction::Forward};
  NormKind norm{NormKind::MaxNorm};
  Vec2 anchor{};
  double sup_deviation{0.0};
  double ratio{0.0};  // sup_deviation / (K epsilon)
  double argsup_t{0.0};
  bool kappa_exists{false};
  bool sup_finite{false};
  kappa::Verdict divergence{kappa::Verdict::Inconclusive};
};

[[nodiscard]] inline nlohmann::ordered_json to_json(const ShadowReport& r) {
  nlohmann::ordered_json j;
  j["epsilon"] = r.epsilon;
  j["K"] = r.K;
  j["direction"] = kappa::to_string(r.dir);
  j["norm"] = ulamkit::to_string(r.norm);
  j["anchor"] = {r.anchor.v1.real(), r.anchor.v1.imag(), r.anchor.v2.real(),
                 r.anchor.v2.imag()};
  j["sup_deviation"] = r.sup_deviation;
  j["ratio"] = r.ratio;
  j["argsup_t"] = r.argsup_t;
  j["conditions"] = {{"kappa_exists", r.kappa_exists},
                     {"sup_finite", r.sup_finite},
                     {"divergence", kappa::to_string(r.divergence)}};
  return j;
}

/// Full pipeline: defect -> kappa/K -> conditions -> anchor -> deviation.
/// Throws HypothesisError when kappa does not exist, its sup is infinite,
/// or the divergence condition fails (the CLI turns that into exit 2).
[[nodiscard]] inline ShadowReport run_shadow(const JordanSystem& sys,
                                             const ApproxSolution& phi, Direction dir,
                                             NormKind norm,
                                             std::optional<std::pair<double, double>>
                                                 range = {}) {
  ShadowReport rep;
  rep.dir = dir;
  rep.norm = norm;

  const kappa::KappaProfile profile = kappa::kappa_profile(sys, dir, norm);
  rep.kappa_exists = profile.exists_everywhere;
  rep.divergence = profile.condition.verdict;
  if (!profile.exists_everywhere)
    throw HypothesisError("kappa does not exist everywhere (witness t = " +
                          std::to_string(profile.witness_t) + "); not Ulam stable by this route");
  const kappa::BestConstant bc = kappa::best_constant(profile);
  rep.sup_finite = true;
  rep.K = bc.K;
  if (rep.divergence == kappa::Verdict::Fails)
    throw HypothesisError("divergence side-condition fails: shadow anchor is not unique");

  const DefectReport d = defect(phi, sys, norm, range);
  rep.epsilon = d.epsilon;
  rep.anchor = anchor(phi, sys, dir);
  auto [D, arg] = deviation_from_anchor(sys, phi, rep.anchor, d.t, norm);
  rep.sup_deviation = D;
  rep.argsup_t = arg;
  rep.ratio = rep.K > 0.0 && rep.epsilon > 0.0 ? D / (rep.K * rep.epsilon) : 0.0;
  return rep;
}

}  // namespace ulamkit::shadow
