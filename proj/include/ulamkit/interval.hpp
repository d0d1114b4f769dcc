#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ulamkit/errors.hpp"

namespace ulamkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// An interval (a,b), (a,b], [a,b) or [a,b] with extended-real endpoints.
/// Closedness flags are forced open at infinite endpoints.
struct Interval {
  double a{-kInf};
  double b{kInf};
  bool closed_left{false};
  bool closed_right{false};

  Interval() = default;
  Interval(double a_, double b_, bool cl = false, bool cr = false)
      : a(a_), b(b_), closed_left(cl && std::isfinite(a_)), closed_right(cr && std::isfinite(b_)) {
    if (!(a < b)) throw ConfigError("interval endpoints must satisfy a < b");
    if (std::isnan(a) || std::isnan(b)) throw ConfigError("interval endpoint is NaN");
  }

  [[nodiscard]] static Interval real_line() { return {-kInf, kInf}; }

  [[nodiscard]] bool finite_left() const { return std::isfinite(a); }
  [[nodiscard]] bool finite_right() const { return std::isfinite(b); }
  [[nodiscard]] bool contains_interior(double t) const { return a < t && t < b; }

  /// Span used to scale endpoint offsets; capped for infinite intervals.
  [[nodiscard]] double offset_scale() const {
    if (finite_left() && finite_right()) return b - a;
    return 1.0;
  }

  [[nodiscard]] std::string str() const {
    auto fmt = [](double x) {
      if (x == kInf) return std::string("inf");
      if (x == -kInf) return std::string("-inf");
      std::string s = std::to_string(x);
      return s;
    };
    return std::string(closed_left ? "[" : "(") + fmt(a) + "," + fmt(b) +
           (closed_right ? "]" : ")");
  }
};

/// Parses "(a,b)", "[a,b]", "(-inf,inf)", "(0,1]" and friends.
[[nodiscard]] inline Interval parse_interval(const std::string& text) {
  auto fail = [&](const char* why) {
    throw ConfigError("bad interval '" + text + "': " + why);
  };
  std::size_t i = 0, j = text.size();
  while (i < j && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  while (j > i && std::isspace(static_cast<unsigned char>(text[j - 1]))) --j;
  if (j - i < 5) fail("too short");
  const char open = text[i], close = text[j - 1];
  if (open != '(' && open != '[') fail("must start with '(' or '['");
  if (close != ')' && close != ']') fail("must end with ')' or ']'");
  const std::string body = text.substr(i + 1, j - i - 2);
  const std::size_t comma = body.find(',');
  if (comma == std::string::npos) fail("missing comma");
  auto parse_num = [&](std::string s) {
    std::size_t p = 0, q = s.size();
    while (p < q && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
    while (q > p && std::isspace(static_cast<unsigned char>(s[q - 1]))) --q;
    s = s.substr(p, q - p);
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail("endpoint is not a number");
    }
    return 0.0;  // unreachable
  };
  const double a = parse_num(body.substr(0, comma));
  const double b = parse_num(body.substr(comma + 1));
  return Interval(a, b, open == '[', close == ']');
}

}  // namespace ulamkit
