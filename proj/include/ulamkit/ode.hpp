#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ulamkit/errors.hpp"
#include "ulamkit/jordan.hpp"
#include "ulamkit/mat2.hpp"

namespace ulamkit::ode {

using MatFn = std::function<Mat2(double)>;

/// Right-hand side forcing f(t) = (f1(t), f2(t)).
struct Forcing {
  std::function<Cx(double)> f1;
  std::function<Cx(double)> f2;

  [[nodiscard]] static Forcing zero() {
    return {[](double) { return Cx{}; }, [](double) { return Cx{}; }};
  }
  [[nodiscard]] Vec2 at(double t) const { return {f1(t), f2(t)}; }
};

namespace detail {

[[nodiscard]] inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// A time-stamped solution curve with cubic Hermite dense output between
/// accepted steps (node derivatives are stored alongside the values).
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec2> x;
  std::vector<Vec2> xdot;
  NormKind norm{NormKind::MaxNorm};

  [[nodiscard]] double lo() const { return t.front(); }
  [[nodiscard]] double hi() const { return t.back(); }
  [[nodiscard]] bool covers(double time) const {
    return !t.empty() && time >= lo() && time <= hi();
  }

  [[nodiscard]] Vec2 sample(double time) const {
    if (!covers(time))
      throw GridCoverageError("trajectory does not cover t = " + std::to_string(time));
    const auto it = std::lower_bound(t.begin(), t.end(), time);
    std::size_t j = static_cast<std::size_t>(it - t.begin());
    if (j < t.size() && t[j] == time) return x[j];
    const std::size_t i = j - 1;
    const double h = t[i + 1] - t[i];
    const double th = (time - t[i]) / h;
    const double th2 = th * th, th3 = th2 * th;
    auto blend = [&](Cx v0, Cx d0, Cx v1, Cx d1) {
      return v0 * (2 * th3 - 3 * th2 + 1) + d0 * (h * (th3 - 2 * th2 + th)) +
             v1 * (-2 * th3 + 3 * th2) + d1 * (h * (th3 - th2));
    };
    return {blend(x[i].v1, xdot[i].v1, x[i + 1].v1, xdot[i + 1].v1),
            blend(x[i].v2, xdot[i].v2, x[i + 1].v2, xdot[i + 1].v2)};
  }

  /// CSV rows `t,re_x1,im_x1,re_x2,im_x2`, decimal floats with round-trip
  /// precision. With `step` given, rows are dense samples at that spacing;
  /// otherwise one row per accepted node.
  void write_csv(std::ostream& os, std::optional<double> step = {}) const {
    os << "t,re_x1,im_x1,re_x2,im_x2\n";
    auto row = [&](double time, const Vec2& v) {
      os << detail::fmt_double(time) << ',' << detail::fmt_double(v.v1.real()) << ','
         << detail::fmt_double(v.v1.imag()) << ',' << detail::fmt_double(v.v2.real())
         << ',' << detail::fmt_double(v.v2.imag()) << '\n';
    };
    if (!step) {
      for (std::size_t i = 0; i < t.size(); ++i) row(t[i], x[i]);
      return;
    }
    for (double time = lo(); time < hi(); time += *step) row(time, sample(time));
    row(hi(), x.back());
  }

  void save_csv(const std::string& path, std::optional<double> step = {}) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    write_csv(os, step);
  }

  [[nodiscard]] static Trajectory read_csv(std::istream& is) {
    Trajectory tr;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty trajectory CSV");
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::array<double, 5> vals{};
      std::size_t pos = 0;
      for (int k = 0; k < 5; ++k) {
        const std::size_t next = line.find(',', pos);
        const std::string cell = line.substr(pos, next - pos);
        try {
          vals[static_cast<std::size_t>(k)] = std::stod(cell);
        } catch (const std::exception&) {
          throw ConfigError("bad CSV cell '" + cell + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
      }
      tr.t.push_back(vals[0]);
      tr.x.push_back({Cx(vals[1], vals[2]), Cx(vals[3], vals[4])});
    }
    if (tr.t.size() < 4) throw ConfigError("trajectory CSV needs at least 4 rows");
    // Node slopes by quadratic fit through neighbours; good enough to
    // interpolate externally supplied curves.
    const std::size_t nrows = tr.t.size();
    tr.xdot.resize(nrows);
    for (std::size_t i = 0; i < nrows; ++i) {
      std::size_t a, m, b;
      if (i == 0) { a = 0; m = 1; b = 2; }
      else if (i + 1 == nrows) { a = nrows - 3; m = nrows - 2; b = nrows - 1; }
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
    return tr;
  }

  [[nodiscard]] static Trajectory load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    return read_csv(is);
  }
};

struct IntegrateOptions {
  double tol{1e-10};
  double initial_step_fraction{1e-3};
  std::size_t max_steps{10'000'000};
};

namespace detail {

struct State4 {
  std::array<double, 4> y{};

  [[nodiscard]] static State4 from(const Vec2& v) {
    return {{v.v1.real(), v.v1.imag(), v.v2.real(), v.v2.imag()}};
  }
  [[nodiscard]] Vec2 vec() const { return {Cx(y[0], y[1]), Cx(y[2], y[3])}; }
  [[nodiscard]] bool finite() const {
    for (double c : y)
      if (!std::isfinite(c)) return false;
    return true;
  }
  friend State4 operator+(State4 a, const State4& b) {
    for (int i = 0; i < 4; ++i) a.y[static_cast<std::size_t>(i)] += b.y[static_cast<std::size_t>(i)];
    return a;
  }
  friend State4 operator*(double s, State4 a) {
    for (auto& c : a.y) c *= s;
    return a;
  }
};

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) on the real-imaginary flattened 4-D
/// system x' = A(t) x + f(t). Supports backward ranges (t_end < t0).
[[nodiscard]] inline Trajectory integrate(const MatFn& A, const Forcing& f, Vec2 x0,
                                          double t0, double t_end,
                                          IntegrateOptions opt = {}) {
  using detail::State4;
  if (t_end == t0) throw ConfigError("integration range is empty");
  const double dir = t_end > t0 ? 1.0 : -1.0;

  auto rhs = [&](double t, const State4& s) {
    const Vec2 v = s.vec();
    const Vec2 r = A(t) * v + f.at(t);
    return State4::from(r);
  };

  // Dormand-Prince coefficients.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                   e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                   e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Trajectory tr;
  State4 y = State4::from(x0);
  double t = t0;
  double h = dir * std::max(1e-12, opt.initial_step_fraction * std::abs(t_end - t0));
  State4 k1 = rhs(t, y);
  tr.t.push_back(t);
  tr.x.push_back(y.vec());
  tr.xdot.push_back(k1.vec());

  const double atol = opt.tol, rtol = opt.tol;
  std::size_t steps = 0;
  while (dir * (t_end - t) > 0) {
    if (++steps > opt.max_steps)
      throw ToleranceError("integrator exceeded the step budget");
    if (dir * (t + h - t_end) > 0) h = t_end - t;
    const double min_h =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (std::abs(h) < min_h)
      throw StepUnderflowError("ODE step size underflow", t);

    const State4 k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const State4 k3 = rhs(t + c3 * h, y + h * (a31 * k1) + h * (a32 * k2));
    const State4 k4 = rhs(t + c4 * h, y + h * (a41 * k1) + h * (a42 * k2) + h * (a43 * k3));
    const State4 k5 = rhs(t + c5 * h, y + h * (a51 * k1) + h * (a52 * k2) +
                                          h * (a53 * k3) + h * (a54 * k4));
    const State4 k6 = rhs(t + h, y + h * (a61 * k1) + h * (a62 * k2) + h * (a63 * k3) +
                                     h * (a64 * k4) + h * (a65 * k5));
    const State4 y1 = y + h * (b1 * k1) + h * (b3 * k3) + h * (b4 * k4) +
                      h * (b5 * k5) + h * (b6 * k6);
    const State4 k7 = rhs(t + h, y1);

    double err = 0.0;
    bool ok = y1.finite() && k7.finite();
    if (ok) {
      for (int i = 0; i < 4; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double e = h * (e1 * k1.y[ui] + e3 * k3.y[ui] + e4 * k4.y[ui] +
                              e5 * k5.y[ui] + e6 * k6.y[ui] + e7 * k7.y[ui]);
        const double scale = atol + rtol * std::max(std::abs(y.y[ui]), std::abs(y1.y[ui]));
        err += (e / scale) * (e / scale);
      }
      err = std::sqrt(err / 4.0);
    } else {
      err = 1e6;  // NaN/Inf: reject and shrink
    }

    if (err <= 1.0) {
      t += h;
      y = y1;
      k1 = k7;  // FSAL
      tr.t.push_back(t);
      tr.x.push_back(y.vec());
      tr.xdot.push_back(k1.vec());
    }
    const double factor =
        err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
    h *= factor;
  }

  if (dir < 0) {
    std::reverse(tr.t.begin(), tr.t.end());
    std::reverse(tr.x.begin(), tr.x.end());
    std::reverse(tr.xdot.begin(), tr.xdot.end());
  }
  return tr;
}

[[nodiscard]] inline Trajectory integrate(const jordan::JordanSystem& sys, const Forcing& f,
                                          Vec2 x0, double t0, double t_end,
                                          IntegrateOptions opt = {}) {
  return integrate([&sys](double t) { return sys.coefficient_matrix(t); }, f, x0, t0,
                   t_end, opt);
}

/// phi resampled on a uniform n-point grid over [lo, hi].
[[nodiscard]] inline Trajectory resample(const Trajectory& tr, double lo, double hi,
                                         std::size_t n) {
  Trajectory out;
  out.norm = tr.norm;
  for (std::size_t i = 0; i < n; ++i) {
    const double time = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    out.t.push_back(time);
    out.x.push_back(tr.sample(time));
    out.xdot.push_back({});
  }
  return out;
}

}  // namespace ulamkit::ode
