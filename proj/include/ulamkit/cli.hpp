#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ulamkit/config.hpp"
#include "ulamkit/extremal.hpp"
#include "ulamkit/registry.hpp"
#include "ulamkit/shadow.hpp"
#include "ulamkit/transform.hpp"

namespace ulamkit::cli {

namespace detail {

using nlohmann::ordered_json;

[[nodiscard]] inline ode::Trajectory merge_two_sided(const jordan::JordanSystem& sys,
                                                     const ode::Forcing& f, Vec2 x0,
                                                     double t0, double lo, double hi,
                                                     ode::IntegrateOptions opt = {}) {
  ode::Trajectory bwd = ode::integrate(sys, f, x0, t0, lo, opt);
  ode::Trajectory fwd = ode::integrate(sys, f, x0, t0, hi, opt);
  ode::Trajectory out;
  out.t.assign(bwd.t.begin(), bwd.t.end() - 1);
  out.x.assign(bwd.x.begin(), bwd.x.end() - 1);
  out.xdot.assign(bwd.xdot.begin(), bwd.xdot.end() - 1);
  out.t.insert(out.t.end(), fwd.t.begin(), fwd.t.end());
  out.x.insert(out.x.end(), fwd.x.begin(), fwd.x.end());
  out.xdot.insert(out.xdot.end(), fwd.xdot.begin(), fwd.xdot.end());
  return out;
}

struct PortraitPreset {
  std::string name;
  jordan::JordanSystem sys;
  kappa::Direction dir;
  NormKind norm;
  double K;
  double lo, hi;
};

[[nodiscard]] inline PortraitPreset make_preset(const std::string& name) {
  const Interval iv = Interval::real_line();
  if (name == "saddle") {
    auto sys = jordan::JordanSystem::form_i([](double) { return Cx(1.0, 0.0); },
                                            [](double) { return Cx(-1.0, 0.0); }, iv, 0.0);
    return {name, std::move(sys), kappa::Direction::Hyperbolic, NormKind::MaxNorm, 1.0,
            -3.0, 3.0};
  }
  if (name == "node") {
    auto sys = jordan::JordanSystem::form_ii([](double) { return Cx(-1.0, 0.0); },
                                             [](double) { return Cx(1.0, 0.0); }, iv, 0.0);
    return {name, std::move(sys), kappa::Direction::Backward, NormKind::MaxNorm, 2.0,
            -3.0, 6.0};
  }
  if (name == "focus") {
    auto sys = jordan::JordanSystem::form_iii([](double) { return Cx(-1.0, 0.0); },
                                              [](double) { return Cx(2.0, 0.0); }, iv, 0.0);
    return {name, std::move(sys), kappa::Direction::Backward, NormKind::EuclidNorm, 1.0,
            -3.0, 6.0};
  }
  throw ConfigError("unknown preset '" + name + "' (saddle, node or focus)");
}

/// The first-component pulse driving the phase portraits.
[[nodiscard]] inline ode::Forcing pulse_forcing(double eps) {
  ode::Forcing f;
  f.f1 = [eps](double t) { return Cx(eps * (1.0 - 2.0 * std::max(std::cos(t), 0.0)), 0.0); };
  f.f2 = [](double) { return Cx{}; };
  return f;
}

inline int cmd_constant(const config::RunConfig& rc, std::ostream& out,
                        const std::string& out_path) {
  const auto sys = rc.build_system();
  const auto profile = kappa::kappa_profile(sys, rc.direction_kind(), rc.norm_kind());
  const auto bc = kappa::best_constant(profile);
  ordered_json j;
  j["K"] = bc.K;
  j["t_star"] = bc.t_star;
  j["attained"] = bc.attained;
  j["direction"] = kappa::to_string(profile.dir);
  j["norm"] = to_string(profile.norm);
  j["conditions"] = {{"kappa_exists", profile.exists_everywhere},
                     {"sup_finite", true},
                     {"divergence", kappa::to_string(profile.condition.verdict)}};
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << text;
  }
  return 0;
}

inline int cmd_shadow(const config::RunConfig& rc, std::ostream& out,
                      const std::string& out_path, const std::string& dev_csv) {
  const auto sys = rc.build_system();
  shadow::ApproxSolution phi = [&] {
    if (!rc.phi_csv.empty())
      return shadow::ApproxSolution::sampled(ode::Trajectory::load_csv(rc.phi_csv));
    if (rc.phi1.empty() || rc.phi2.empty())
      throw ConfigError("shadow needs --phi1/--phi2 expressions or --phi-csv");
    return shadow::ApproxSolution::analytic(expr::Expr::parse(rc.phi1),
                                            expr::Expr::parse(rc.phi2));
  }();
  std::optional<std::pair<double, double>> range;
  if (!phi.is_sampled())
    range = std::pair{rc.base_point() - rc.horizon, rc.base_point() + rc.horizon};
  const auto rep = shadow::run_shadow(sys, phi, rc.direction_kind(), rc.norm_kind(), range);
  const std::string text = shadow::to_json(rep).dump(2) + "\n";
  out << text;
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << text;
  }
  if (!dev_csv.empty()) {
    const auto d = shadow::defect(phi, sys, rep.norm, range);
    const auto curve = shadow::deviation_curve(sys, phi, rep.anchor, d.t, rep.norm);
    std::ofstream os(dev_csv);
    os << "t,deviation\n";
    for (std::size_t i = 0; i < d.t.size(); ++i)
      os << ode::detail::fmt_double(d.t[i]) << ',' << ode::detail::fmt_double(curve[i])
         << '\n';
  }
  return 0;
}

inline int cmd_sharpness(const config::RunConfig& rc, std::ostream& out,
                         const std::string& out_path) {
  const auto sys = rc.build_system();
  const auto res = extremal::sharpness_experiment(sys, rc.direction_kind(), rc.eps,
                                                  rc.horizon, rc.norm_kind());
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    extremal::write_csv(res, os);
  }
  out << extremal::summary_json(res).dump(2) << "\n";
  return 0;
}

inline int cmd_transform(const config::RunConfig& rc, std::ostream& out,
                         const std::string& out_path) {
  if (rc.a11.empty() || rc.a12.empty() || rc.a21.empty() || rc.a22.empty())
    throw ConfigError("transform needs the matrix entries --a11..--a22");
  if (rc.r11.empty() || rc.r12.empty() || rc.r21.empty() || rc.r22.empty())
    throw ConfigError("transform needs the transform entries --r11..--r22");
  const Interval iv = rc.interval();
  const double t0 = rc.base_point();
  const auto e11 = expr::Expr::parse(rc.a11), e12 = expr::Expr::parse(rc.a12),
             e21 = expr::Expr::parse(rc.a21), e22 = expr::Expr::parse(rc.a22);
  ode::MatFn A = [=](double t) {
    return Mat2{e11.eval(t), e12.eval(t), e21.eval(t), e22.eval(t)};
  };
  const auto R = transform::TransformSpec::from_strings(rc.r11, rc.r12, rc.r21, rc.r22, iv,
                                                        rc.norm_kind(), t0);
  const auto J = transform::similarity(A, R);
  const auto cls = transform::classify(J, iv, t0);

  ordered_json j;
  j["classified_form"] =
      cls.form ? std::string(jordan::to_string(*cls.form)) : std::string("general");
  j["pattern_residual"] = cls.max_pattern_residual;
  j["sup_R"] = R.sup_R().sup;
  j["sup_Rinv"] = R.sup_Rinv().sup;
  j["bounded"] = R.bounded();
  if (cls.form && !rc.direction.empty()) {
    const auto sysJ = transform::as_jordan_system(J, *cls.form, iv, t0);
    const auto bc = kappa::best_ulam_constant(sysJ, rc.direction_kind(), rc.norm_kind());
    j["K_jordan"] = bc.K;
    j["t_star"] = bc.t_star;
    j["K_propagated"] = transform::propagate_constant(bc.K, R);
  }
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << text;
  }
  return 0;
}

inline int cmd_example(const std::string& id, bool as_json, std::ostream& out) {
  std::vector<registry::CaseReport> reports;
  if (id == "all") {
    for (const auto& cid : registry::case_ids()) reports.push_back(registry::run_case(cid));
  } else {
    reports.push_back(registry::run_case(id));
  }
  bool all_pass = true;
  for (const auto& rep : reports) {
    all_pass = all_pass && rep.pass();
    if (as_json) {
      out << registry::to_json(rep).dump(2) << "\n";
      continue;
    }
    out << rep.id << " [" << registry::to_string(rep.status) << "] "
        << (rep.pass() ? "PASS" : "FAIL") << "\n";
    if (!rep.note.empty()) out << "  note: " << rep.note << "\n";
    for (const auto& c : rep.checks) {
      out << "  " << (c.pass ? "[ok]  " : "[FAIL]") << " " << c.name
          << ": computed = " << c.computed << ", expected = " << c.expected;
      if (c.tolerance > 0.0) out << " (tol " << c.tolerance << ")";
      out << "  -- " << c.citation << "\n";
    }
  }
  return all_pass ? 0 : 1;
}

inline int cmd_portrait(const std::string& preset_name, double eps,
                        const std::string& out_dir, std::size_t n_orbits, double radius,
                        std::ostream& out) {
  const auto preset = make_preset(preset_name);
  const auto& sys = preset.sys;
  const ode::Forcing f = pulse_forcing(eps);
  std::filesystem::create_directories(out_dir);

  // Anchor extraction wants the forcing tail integrals well converged;
  // pre-cover once so every orbit reuses the same grids.
  sys.ensure_coverage(preset.lo - 60.0, preset.hi + 60.0);

  ordered_json summary;
  summary["preset"] = preset.name;
  summary["eps"] = eps;
  summary["K"] = preset.K;
  summary["tube_bound"] = preset.K * eps;
  summary["norm"] = to_string(preset.norm);
  summary["orbits"] = ordered_json::array();

  double overall = 0.0;
  const double dt = 0.02;
  for (std::size_t k = 0; k < n_orbits; ++k) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / n_orbits;
    const Vec2 x0{Cx(radius * std::cos(ang), 0.0), Cx(radius * std::sin(ang), 0.0)};
    const auto orbit = merge_two_sided(sys, f, x0, sys.t0(), preset.lo, preset.hi);
    const Vec2 anchor = shadow::anchor_from_forcing(sys, preset.dir, x0, f);

    std::vector<double> grid;
    for (double t = preset.lo; t < preset.hi; t += dt) grid.push_back(t);
    grid.push_back(preset.hi);
    const auto x = shadow::shadow_solution(anchor, sys, grid);

    char namebuf[32];
    std::snprintf(namebuf, sizeof namebuf, "orbit_%02zu.csv", k);
    const std::string orbit_file = std::string(out_dir) + "/" + namebuf;
    std::snprintf(namebuf, sizeof namebuf, "shadow_%02zu.csv", k);
    const std::string shadow_file = std::string(out_dir) + "/" + namebuf;
    orbit.save_csv(orbit_file, dt);
    x.save_csv(shadow_file);

    const auto phi = shadow::ApproxSolution::sampled(orbit);
    auto [dev, arg] = shadow::deviation(phi, x, preset.norm);
    overall = std::max(overall, dev);
    summary["orbits"].push_back({{"orbit", orbit_file},
                                 {"shadow", shadow_file},
                                 {"max_deviation", dev},
                                 {"argsup_t", arg}});
  }
  summary["max_deviation_overall"] = overall;
  summary["within_tube"] = overall <= preset.K * eps * (1.0 + 1e-3);

  const std::string text = summary.dump(2) + "\n";
  out << text;
  std::ofstream os(std::string(out_dir) + "/summary.json");
  os << text;
  return 0;
}

}  // namespace detail

/// Parses argv-style arguments and runs one subcommand.
/// Exit codes: 0 success, 1 usage/parse errors (and failed example
/// diffs), 2 stability hypotheses not satisfied.
inline int command_dispatch(const std::vector<std::string>& args, std::ostream& out,
                            std::ostream& err) {
  CLI::App app{"best Ulam constants, shadowing and sharpness for 2-D Jordan-form systems"};
  app.require_subcommand(1);

  config::RunConfig rc;
  std::string config_path, out_path, dev_csv, example_id = "all";
  std::string preset = "saddle";
  bool as_json = false;
  std::size_t n_orbits = 12;
  double radius = 2.0;

  auto add_system_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--form", rc.form, "Jordan form: I, II or III");
    cmd->add_option("--lambda1", rc.coef1, "form I first diagonal coefficient");
    cmd->add_option("--lambda2", rc.coef2, "form I second diagonal coefficient");
    cmd->add_option("--lambda", rc.coef1, "form II diagonal coefficient");
    cmd->add_option("--mu", rc.coef2, "form II off-diagonal coefficient");
    cmd->add_option("--alpha", rc.coef1, "form III diagonal coefficient");
    cmd->add_option("--beta", rc.coef2, "form III rotation coefficient");
    cmd->add_option("--interval", rc.interval_text, "interval, e.g. \"(0,1]\" or \"(-inf,inf)\"");
    cmd->add_option("--t0", rc.t0, "base point (default: interior midpoint)");
    cmd->add_option("--direction", rc.direction, "forward | backward | hyperbolic");
    cmd->add_option("--norm", rc.norm, "max | euclid");
    cmd->add_option("--out", out_path, "write the report/CSV here as well");
  };

  auto* constant = app.add_subcommand("constant", "best Ulam constant for a system");
  add_system_flags(constant);

  auto* shadow_cmd = app.add_subcommand("shadow", "shadow an approximate solution");
  add_system_flags(shadow_cmd);
  shadow_cmd->add_option("--phi1", rc.phi1, "first component of phi (expression)");
  shadow_cmd->add_option("--phi2", rc.phi2, "second component of phi (expression)");
  shadow_cmd->add_option("--phi-csv", rc.phi_csv, "sampled phi as trajectory CSV");
  shadow_cmd->add_option("--horizon", rc.horizon, "half-width of the analytic-phi window");
  shadow_cmd->add_option("--dev-csv", dev_csv, "write t,deviation rows here");

  auto* sharp = app.add_subcommand("sharpness", "extremal-forcing sharpness experiment");
  add_system_flags(sharp);
  sharp->add_option("--eps", rc.eps, "perturbation size");
  sharp->add_option("--horizon", rc.horizon, "experiment half-width");

  auto* trans = app.add_subcommand("transform", "similarity transform and constant propagation");
  add_system_flags(trans);
  trans->add_option("--a11", rc.a11, "A(t) entry");
  trans->add_option("--a12", rc.a12, "A(t) entry");
  trans->add_option("--a21", rc.a21, "A(t) entry");
  trans->add_option("--a22", rc.a22, "A(t) entry");
  trans->add_option("--r11", rc.r11, "R(t) entry");
  trans->add_option("--r12", rc.r12, "R(t) entry");
  trans->add_option("--r21", rc.r21, "R(t) entry");
  trans->add_option("--r22", rc.r22, "R(t) entry");

  auto* example = app.add_subcommand("example", "run a catalogued case (or 'all')");
  example->add_option("id", example_id, "case id, e.g. ex6.4");
  example->add_flag("--json", as_json, "emit JSON instead of text");

  auto* portrait = app.add_subcommand("portrait", "emit perturbed phase-portrait orbits");
  portrait->add_option("--preset", preset, "saddle | node | focus");
  portrait->add_option("--eps", rc.eps, "perturbation size");
  portrait->add_option("--out", out_path, "output directory");
  portrait->add_option("--orbits", n_orbits, "number of initial conditions");
  portrait->add_option("--radius", radius, "initial-condition circle radius");

  std::vector<const char*> argv;
  argv.push_back("ulamkit");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (!config_path.empty()) rc.absorb(config::parse_config_file(config_path));
    if (constant->parsed()) return detail::cmd_constant(rc, out, out_path);
    if (shadow_cmd->parsed()) return detail::cmd_shadow(rc, out, out_path, dev_csv);
    if (sharp->parsed()) return detail::cmd_sharpness(rc, out, out_path);
    if (trans->parsed()) return detail::cmd_transform(rc, out, out_path);
    if (example->parsed()) return detail::cmd_example(example_id, as_json, out);
    if (portrait->parsed())
      return detail::cmd_portrait(preset, rc.eps,
                                  out_path.empty() ? "portrait_out" : out_path, n_orbits,
                                  radius, out);
  } catch (const HypothesisError& e) {
    err << "stability hypotheses not satisfied: " << e.what() << "\n";
    return 2;
  } catch (const NoLimitError& e) {
    err << "stability hypotheses not satisfied: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "no subcommand given\n";
  return 1;
}

}  // namespace ulamkit::cli
