#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "ulamkit/expr.hpp"
#include "ulamkit/interval.hpp"
#include "ulamkit/jordan.hpp"
#include "ulamkit/kappa.hpp"

namespace ulamkit::config {

/// Line-oriented `key = value` files with `[section]` headers. Values may
/// be double-quoted (required when they contain '#'). Keys are returned
/// as "section.key"; the section before any header is "".
[[nodiscard]] inline std::map<std::string, std::string> parse_config_text(
    const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unclosed section");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    else {
      const auto hash = value.find('#');
      if (hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = value;
  }
  return kv;
}

[[nodiscard]] inline std::map<std::string, std::string> parse_config_file(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

/// Everything a CLI run needs to declare a system and what to do with it.
/// Config file values fill unset fields; command-line flags win.
struct RunConfig {
  std::string form;  // I | II | III | general
  std::string coef1, coef2;  // lambda1/lambda2, lambda/mu, alpha/beta
  std::string a11, a12, a21, a22;  // general matrix (transform command)
  std::string r11, r12, r21, r22;  // transform R entries
  std::string interval_text = "(-inf,inf)";
  std::optional<double> t0;
  std::string direction;  // forward | backward | hyperbolic
  std::string norm = "max";
  double eps = 0.2;
  double horizon = 8.0;
  std::string phi1, phi2;  // analytic approximate solution
  std::string phi_csv;

  void absorb(const std::map<std::string, std::string>& kv) {
    auto put = [&](const char* key, std::string& slot) {
      const auto it = kv.find(key);
      if (it != kv.end() && slot.empty()) slot = it->second;
    };
    put("system.form", form);
    put("system.lambda1", coef1);
    put("system.lambda2", coef2);
    put("system.lambda", coef1);
    put("system.mu", coef2);
    put("system.alpha", coef1);
    put("system.beta", coef2);
    put("system.a11", a11);
    put("system.a12", a12);
    put("system.a21", a21);
    put("system.a22", a22);
    put("transform.r11", r11);
    put("transform.r12", r12);
    put("transform.r21", r21);
    put("transform.r22", r22);
    if (auto it = kv.find("system.interval"); it != kv.end() && interval_text == "(-inf,inf)")
      interval_text = it->second;
    if (auto it = kv.find("system.t0"); it != kv.end() && !t0) t0 = std::stod(it->second);
    put("run.direction", direction);
    if (auto it = kv.find("run.norm"); it != kv.end() && norm == "max") norm = it->second;
    if (auto it = kv.find("run.eps"); it != kv.end()) eps = std::stod(it->second);
    if (auto it = kv.find("run.horizon"); it != kv.end()) horizon = std::stod(it->second);
    put("run.phi1", phi1);
    put("run.phi2", phi2);
    put("run.phi_csv", phi_csv);
  }

  [[nodiscard]] Interval interval() const { return parse_interval(interval_text); }

  [[nodiscard]] double base_point() const {
    if (t0) return *t0;
    const Interval iv = interval();
    if (iv.finite_left() && iv.finite_right()) return 0.5 * (iv.a + iv.b);
    if (iv.finite_left()) return iv.a + 1.0;
    if (iv.finite_right()) return iv.b - 1.0;
    return 0.0;
  }

  [[nodiscard]] NormKind norm_kind() const {
    if (norm == "max") return NormKind::MaxNorm;
    if (norm == "euclid" || norm == "euclidean") return NormKind::EuclidNorm;
    throw ConfigError("unknown norm '" + norm + "' (use max or euclid)");
  }

  [[nodiscard]] kappa::Direction direction_kind() const {
    if (direction == "forward") return kappa::Direction::Forward;
    if (direction == "backward") return kappa::Direction::Backward;
    if (direction == "hyperbolic") return kappa::Direction::Hyperbolic;
    throw ConfigError("direction must be forward, backward or hyperbolic");
  }

  [[nodiscard]] jordan::JordanSystem build_system() const {
    if (coef1.empty() || coef2.empty())
      throw ConfigError("both coefficient expressions are required for form " + form);
    const Interval iv = interval();
    const double base = base_point();
    const auto f1 = expr::Expr::parse(coef1).fn();
    const auto f2 = expr::Expr::parse(coef2).fn();
    if (form == "I") return jordan::JordanSystem::form_i(f1, f2, iv, base);
    if (form == "II") return jordan::JordanSystem::form_ii(f1, f2, iv, base);
    if (form == "III") return jordan::JordanSystem::form_iii(f1, f2, iv, base);
    throw ConfigError("form must be I, II or III (got '" + form + "')");
  }
};

}  // namespace ulamkit::config
