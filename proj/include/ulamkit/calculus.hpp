#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ulamkit/errors.hpp"
#include "ulamkit/interval.hpp"
#include "ulamkit/mat2.hpp"

namespace ulamkit::calculus {

struct QuadTol {
  double rel{1e-9};
  double abs{1e-12};
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.0,
    0.2077849550078985,
    0.4058451513773972,
    0.5860872354676911,
    0.7415311855993945,
    0.8648644233597691,
    0.9491079123427585,
    0.9914553711208126,
};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.2094821410847278,
    0.2044329400752989,
    0.1903505780647854,
    0.1690047266392679,
    0.1406532597155259,
    0.1047900103222502,
    0.0630920926299785,
    0.0229353220105292,
};
// Gauss weights attach to Kronrod nodes 0, 2, 4, 6.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892767,
    0.1294849661688697,
};

template <class V>
[[nodiscard]] double abs_of(const V& v) {
  if constexpr (std::is_same_v<V, Cx>) return std::abs(v);
  else return norm(v, NormKind::MaxNorm);
}

template <class V>
[[nodiscard]] bool finite(const V& v) {
  if constexpr (std::is_same_v<V, Cx>)
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  else
    return finite(v.v1) && finite(v.v2);
}

template <class V>
struct PanelResult {
  V integral{};
  double error{0.0};
};

template <class V, class Fn>
PanelResult<V> gk15(const Fn& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  V gauss{};
  V kronrod{};
  for (std::size_t i = 0; i < kKronrodNodes.size(); ++i) {
    const double x = kKronrodNodes[i];
    V v = f(mid + half * x);
    if (x != 0.0) v += f(mid - half * x);
    if (!finite(v))
      throw SingularityError("non-finite integrand value inside quadrature panel");
    kronrod += kKronrodWeights[i] * v;
    if (i % 2 == 0) gauss += kGaussWeights[i / 2] * v;
  }
  PanelResult<V> r;
  r.integral = half * kronrod;
  r.error = std::abs(half) * abs_of<V>(kronrod - gauss);
  return r;
}

template <class V, class Fn>
V adaptive(const Fn& f, double a, double b, double abs_budget, double rel,
           int depth, std::int64_t& panels_left) {
  const auto p = gk15<V>(f, a, b);
  const double accept = std::max(abs_budget, rel * abs_of<V>(p.integral));
  if (p.error <= accept || depth >= 52 ||
      std::abs(b - a) <= 16.0 * std::numeric_limits<double>::epsilon() *
                             std::max({std::abs(a), std::abs(b), 1.0})) {
    if (p.error > accept && depth >= 52)
      throw ToleranceError("quadrature panel budget exhausted before tolerance was met");
    return p.integral;
  }
  if (--panels_left <= 0)
    throw ToleranceError("quadrature exceeded the 2^20 panel budget");
  const double mid = 0.5 * (a + b);
  return adaptive<V>(f, a, mid, 0.5 * abs_budget, rel, depth + 1, panels_left) +
         adaptive<V>(f, mid, b, 0.5 * abs_budget, rel, depth + 1, panels_left);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of a complex scalar function over a
/// finite panel.
template <class Fn>
[[nodiscard]] Cx adaptive_quad(const Fn& f, double a, double b, QuadTol tol = {}) {
  if (a == b) return Cx{};
  std::int64_t panels = std::int64_t{1} << 20;
  return detail::adaptive<Cx>(f, a, b, tol.abs, tol.rel, 0, panels);
}

/// Vector-valued variant used for the shadow/extremal kernels.
template <class Fn>
[[nodiscard]] Vec2 adaptive_quad_vec2(const Fn& f, double a, double b, QuadTol tol = {}) {
  if (a == b) return Vec2{};
  std::int64_t panels = std::int64_t{1} << 20;
  return detail::adaptive<Vec2>(f, a, b, tol.abs, tol.rel, 0, panels);
}

enum class ImproperStatus { Converged, Diverged, Inconclusive };

template <class V>
struct ImproperOutcome {
  V value{};
  ImproperStatus status{ImproperStatus::Inconclusive};
  double truncation{0.0};
  double tail_estimate{0.0};

  [[nodiscard]] bool converged() const { return status == ImproperStatus::Converged; }
  [[nodiscard]] bool diverged() const { return status == ImproperStatus::Diverged; }
};

using ImproperResult = ImproperOutcome<Cx>;

/// Truncation points approaching `to` starting from `from`. Infinite
/// endpoints use the doubling schedule from + 2^k max(1,|from|); finite
/// (typically singular) endpoints are approached through offsets shrinking
/// by a factor of 10, stopping once double precision cannot separate the
/// offset from the endpoint.
[[nodiscard]] inline std::vector<double> make_truncation_schedule(double from, double to) {
  std::vector<double> pts;
  if (std::isinf(to)) {
    const double sign = to > 0 ? 1.0 : -1.0;
    const double unit = std::max(1.0, std::abs(from));
    double step = unit;
    for (int k = 0; k <= 40; ++k) {
      pts.push_back(from + sign * step);
      step *= 2.0;
    }
    return pts;
  }
  const double span = std::abs(to - from);
  if (span == 0.0) throw ConfigError("improper integral over an empty range");
  const double min_gap =
      8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(to));
  double offset = 0.1 * span;
  for (int j = 1; j <= 12 && offset > min_gap; ++j, offset *= 0.1) {
    const double p = to - std::copysign(offset, to - from);
    if (!pts.empty() && p == pts.back()) break;
    if (p == to) break;
    pts.push_back(p);
  }
  if (pts.empty()) pts.push_back(from + 0.5 * (to - from));
  return pts;
}

namespace detail {

template <class V, class Fn>
ImproperOutcome<V> improper(const Fn& f, double from, double to, QuadTol tol,
                            std::span<const double> schedule) {
  const bool reversed = to < from;
  const double divergence_threshold = 1.0 / tol.abs;

  ImproperOutcome<V> out;
  V total{};
  double prev_d = -1.0, prev_prev_d = -1.0;
  double last_abs = 0.0;
  bool monotone = true;
  double edge = from;

  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const double target = schedule[k];
    const V panel = [&] {
      std::int64_t panels = std::int64_t{1} << 20;
      if (!reversed) return adaptive<V>(f, edge, target, tol.abs * 0.125, tol.rel, 0, panels);
      return adaptive<V>(f, target, edge, tol.abs * 0.125, tol.rel, 0, panels);
    }();
    total += panel;
    edge = target;
    out.truncation = target;

    const double d = abs_of<V>(panel);
    const double mag = abs_of<V>(total);
    if (mag < last_abs - tol.abs) monotone = false;
    last_abs = mag;

    if (!std::isfinite(mag) || mag > divergence_threshold) {
      out.status = ImproperStatus::Diverged;
      out.value = total;
      return out;
    }

    const double bound = tol.rel * mag + tol.abs;
    if (k >= 1 && d <= bound) {
      double tail = d;
      if (prev_d > 0.0) {
        const double rho = d / prev_d;
        if (rho < 0.9) tail = d * rho / (1.0 - rho);
      }
      if (d == 0.0) tail = 0.0;
      if (tail <= bound) {
        out.status = ImproperStatus::Converged;
        out.tail_estimate = tail;
        out.value = reversed ? V{} - total : total;
        return out;
      }
    }
    prev_prev_d = prev_d;
    prev_d = d;
  }

  // Schedule exhausted: classify the trend of the last increments.
  out.value = reversed ? V{} - total : total;
  double rho_bar = 0.0;
  if (prev_prev_d > 0.0 && prev_d >= 0.0) rho_bar = std::sqrt(prev_d / prev_prev_d);
  if (monotone && prev_d > 0.0 && rho_bar >= 0.995) {
    out.status = ImproperStatus::Diverged;
  } else {
    out.status = ImproperStatus::Inconclusive;
  }
  return out;
}

}  // namespace detail

/// Improper integral of g from `from` toward `to` (possibly infinite or a
/// singular finite endpoint). The returned value is signed, i.e. it is
/// the limit of int_from^T g as T runs through the truncation schedule.
template <class Fn>
[[nodiscard]] ImproperResult improper_integral(
    const Fn& g, double from, double to, QuadTol tol = {},
    std::span<const double> schedule = {}) {
  std::vector<double> own;
  if (schedule.empty()) {
    own = make_truncation_schedule(from, to);
    schedule = own;
  }
  return detail::improper<Cx>(g, from, to, tol, schedule);
}

template <class Fn>
[[nodiscard]] ImproperOutcome<Vec2> improper_integral_vec2(
    const Fn& g, double from, double to, QuadTol tol = {},
    std::span<const double> schedule = {}) {
  std::vector<double> own;
  if (schedule.empty()) {
    own = make_truncation_schedule(from, to);
    schedule = own;
  }
  return detail::improper<Vec2>(g, from, to, tol, schedule);
}

/// Cumulative antiderivative Lambda(t) = int_{t0}^t g(s) ds held on an
/// adaptively refined node set and evaluated by cubic Hermite
/// interpolation (the stored g values at the nodes supply the slopes).
/// Panels are split until the interpolant reproduces a quadrature value at
/// the panel midpoint to tolerance, so evaluation anywhere inside the
/// covered range carries the quadrature accuracy.
class AntiderivativeGrid {
public:
  AntiderivativeGrid(std::function<Cx(double)> g, double t0,
                     std::span<const double> samples, QuadTol tol = {})
      : g_(std::move(g)), t0_(t0), tol_(tol) {
    nodes_.push_back(t0);
    values_.push_back(Cx{});
    derivs_.push_back(g_(t0));
    std::vector<double> pts(samples.begin(), samples.end());
    std::sort(pts.begin(), pts.end());
    for (double p : pts) {
      if (p > hi()) append_panel(p);
    }
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      if (*it < lo()) prepend_panel(*it);
    }
  }

  [[nodiscard]] double t0() const { return t0_; }
  [[nodiscard]] double lo() const { return nodes_.front(); }
  [[nodiscard]] double hi() const { return nodes_.back(); }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }

  /// Lambda(t). Throws GridCoverageError outside [lo, hi].
  [[nodiscard]] Cx value_at(double t) const {
    if (t < lo() || t > hi())
      throw GridCoverageError("antiderivative grid does not cover t = " + std::to_string(t));
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
    if (j < nodes_.size() && nodes_[j] == t) return values_[j];
    const std::size_t i = j - 1;
    return hermite(nodes_[i], values_[i], derivs_[i], nodes_[i + 1], values_[i + 1],
                   derivs_[i + 1], t);
  }

  [[nodiscard]] double real_at(double t) const { return value_at(t).real(); }

  /// Appends the given points (each beyond the current range on its side)
  /// as panel boundaries. Not thread-safe; callers extend before any
  /// concurrent evaluation.
  void extend_along(std::span<const double> pts) {
    std::vector<double> sorted(pts.begin(), pts.end());
    std::sort(sorted.begin(), sorted.end());
    for (double p : sorted)
      if (p > hi()) append_panel(p);
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it)
      if (*it < lo()) prepend_panel(*it);
  }

  /// Extends coverage to include t, stepping geometrically.
  void extend_to(double t) {
    while (t > hi()) {
      double step = std::max(1.0, 0.5 * std::abs(hi()));
      append_panel(std::min(t, hi() + step));
    }
    while (t < lo()) {
      double step = std::max(1.0, 0.5 * std::abs(lo()));
      prepend_panel(std::max(t, lo() - step));
    }
  }

private:
  std::function<Cx(double)> g_;
  double t0_;
  QuadTol tol_;
  std::vector<double> nodes_;
  std::vector<Cx> values_;
  std::vector<Cx> derivs_;

  static Cx hermite(double x0, Cx v0, Cx d0, double x1, Cx v1, Cx d1, double t) {
    const double h = x1 - x0;
    const double th = (t - x0) / h;
    const double th2 = th * th;
    const double th3 = th2 * th;
    return v0 * (2 * th3 - 3 * th2 + 1) + d0 * (h * (th3 - 2 * th2 + th)) +
           v1 * (-2 * th3 + 3 * th2) + d1 * (h * (th3 - th2));
  }

  struct Piece {
    double x;
    Cx v;
    Cx d;
  };

  // Builds the refined node chain for (x0, x1], given Lambda(x0).
  void build(double x0, Cx v0, Cx d0, double x1, int depth, std::vector<Piece>& out) {
    const Cx d1 = g_(x1);
    const Cx full = adaptive_quad(g_, x0, x1, tol_);
    const Cx v1 = v0 + full;
    const double mid = 0.5 * (x0 + x1);
    const bool degenerate =
        (x1 - x0) <= 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max({std::abs(x0), std::abs(x1), 1.0});
    if (!degenerate && depth < 48) {
      const Cx vm_true = v0 + adaptive_quad(g_, x0, mid, tol_);
      const Cx vm_interp = hermite(x0, v0, d0, x1, v1, d1, mid);
      const double err = std::abs(vm_interp - vm_true);
      if (err > tol_.rel * (1.0 + std::abs(vm_true)) + tol_.abs) {
        build(x0, v0, d0, mid, depth + 1, out);
        const Piece& back = out.back();
        build(back.x, back.v, back.d, x1, depth + 1, out);
        return;
      }
    }
    out.push_back({x1, v1, d1});
  }

  void append_panel(double x1) {
    std::vector<Piece> pieces;
    build(nodes_.back(), values_.back(), derivs_.back(), x1, 0, pieces);
    for (const Piece& p : pieces) {
      nodes_.push_back(p.x);
      values_.push_back(p.v);
      derivs_.push_back(p.d);
    }
  }

  void prepend_panel(double x0) {
    // Build left-to-right from x0 with a provisional base value of zero,
    // then shift so the chain matches the existing front node.
    std::vector<Piece> pieces;
    const Cx d0 = g_(x0);
    build(x0, Cx{}, d0, nodes_.front(), 0, pieces);
    const Cx shift = values_.front() - pieces.back().v;
    std::vector<double> new_nodes{x0};
    std::vector<Cx> new_values{shift};
    std::vector<Cx> new_derivs{d0};
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
      new_nodes.push_back(pieces[i].x);
      new_values.push_back(pieces[i].v + shift);
      new_derivs.push_back(pieces[i].d);
    }
    nodes_.insert(nodes_.begin(), new_nodes.begin(), new_nodes.end());
    values_.insert(values_.begin(), new_values.begin(), new_values.end());
    derivs_.insert(derivs_.begin(), new_derivs.begin(), new_derivs.end());
  }
};

/// Grid construction matching the operation-level interface.
[[nodiscard]] inline AntiderivativeGrid antiderivative_grid(
    std::function<Cx(double)> g, double t0, std::span<const double> samples,
    QuadTol tol = {}) {
  return AntiderivativeGrid(std::move(g), t0, samples, tol);
}

/// Golden-section refinement of a bracketed interior maximum.
/// Returns {argmax, max}.
template <class Fn>
[[nodiscard]] std::pair<double, double> golden_section_max(const Fn& f, double a,
                                                           double b, double tol_t) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int iter = 0; iter < 200 && (b - a) > tol_t; ++iter) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double tm = 0.5 * (a + b);
  const double fm = f(tm);
  if (fc >= fd && fc >= fm) return {c, fc};
  if (fd > fm) return {d, fd};
  return {tm, fm};
}

}  // namespace ulamkit::calculus
