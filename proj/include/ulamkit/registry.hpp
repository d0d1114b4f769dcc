#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "ulamkit/extremal.hpp"
#include "ulamkit/kappa.hpp"
#include "ulamkit/shadow.hpp"
#include "ulamkit/transform.hpp"

namespace ulamkit::registry {

using jordan::JordanSystem;
using kappa::Direction;

enum class CaseStatus { Verified, SuspectedTypo, InstabilityDemo };

[[nodiscard]] constexpr const char* to_string(CaseStatus s) noexcept {
  switch (s) {
    case CaseStatus::Verified: return "verified";
    case CaseStatus::SuspectedTypo: return "suspected-typo";
    case CaseStatus::InstabilityDemo: return "instability-demo";
  }
  return "?";
}

struct Check {
  std::string name;
  double computed{0.0};
  double expected{0.0};
  double tolerance{0.0};
  bool pass{false};
  std::string citation;
};

struct CaseReport {
  std::string id;
  CaseStatus status{CaseStatus::Verified};
  std::string note;
  std::vector<Check> checks;

  [[nodiscard]] bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

[[nodiscard]] inline nlohmann::ordered_json to_json(const CaseReport& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["status"] = to_string(r.status);
  j["pass"] = r.pass();
  if (!r.note.empty()) j["note"] = r.note;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"computed", c.computed},
                           {"expected", c.expected},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass},
                           {"citation", c.citation}});
  }
  return j;
}

namespace detail {

inline void approx(CaseReport& rep, std::string name, double computed, double expected,
                   double tol, std::string citation) {
  Check c;
  c.name = std::move(name);
  c.computed = computed;
  c.expected = expected;
  c.tolerance = tol;
  c.pass = std::abs(computed - expected) <= tol;
  c.citation = std::move(citation);
  rep.checks.push_back(std::move(c));
}

inline void flag(CaseReport& rep, std::string name, bool ok, std::string citation,
                 double computed = 0.0, double expected = 1.0) {
  Check c;
  c.name = std::move(name);
  c.computed = computed;
  c.expected = expected;
  c.tolerance = 0.0;
  c.pass = ok;
  c.citation = std::move(citation);
  rep.checks.push_back(std::move(c));
}

[[nodiscard]] inline JordanSystem sys_from(const char* form, const char* c1, const char* c2,
                                           Interval iv, double t0) {
  const auto f1 = expr::Expr::parse(c1).fn();
  const auto f2 = expr::Expr::parse(c2).fn();
  const std::string f(form);
  if (f == "I") return JordanSystem::form_i(f1, f2, iv, t0);
  if (f == "II") return JordanSystem::form_ii(f1, f2, iv, t0);
  return JordanSystem::form_iii(f1, f2, iv, t0);
}

inline CaseReport case_ex61() {
  CaseReport rep;
  rep.id = "ex6.1";
  const auto sys = sys_from("I", "1/(1-t)", "-1/t", Interval(0.0, 1.0), 0.5);
  const auto bc = kappa::best_ulam_constant(sys, Direction::Hyperbolic, NormKind::MaxNorm);
  approx(rep, "K13", bc.K, 0.5, 1e-4, "blow-up system on (0,1); K13 = 1/2");
  flag(rep, "supremum not attained (boundary)", !bc.attained,
       "kappa13 = (|t-1/2|+1/2)/2 rises toward both endpoints", bc.attained ? 1 : 0, 0);
  for (double t : {0.1, 0.25, 0.5, 0.9}) {
    const double want = 0.5 * (std::abs(t - 0.5) + 0.5);
    const double got = kappa::kappa_at(sys, Direction::Hyperbolic, t).value;
    approx(rep, "kappa13(" + std::to_string(t) + ")", got, want, 1e-6,
           "closed form (|t-1/2|+1/2)/2");
  }
  const auto cond = kappa::check_condition(sys, Direction::Hyperbolic);
  flag(rep, "divergence condition holds", cond.verdict == kappa::Verdict::Holds,
       "log(1-t0)/(1-t) and log(t0/t) both diverge",
       cond.verdict == kappa::Verdict::Holds ? 1 : 0);
  return rep;
}

inline CaseReport case_ex62() {
  CaseReport rep;
  rep.id = "ex6.2";
  rep.note = "beta(t) is an arbitrary continuous phase; fixed to beta = t here and the "
             "constant is asserted to be invariant under beta = 0.";
  const Interval iv = Interval::real_line();
  const auto sys = sys_from("II", "1+i*t", "2/sqrt(pi)*exp(-t^2)", iv, 0.0);
  const auto bc = kappa::best_ulam_constant(sys, Direction::Forward, NormKind::MaxNorm);
  approx(rep, "K21", bc.K, 1.78395, 1e-3, "printed value 1.78395");
  approx(rep, "t*", bc.t_star, -0.603489, 1e-3, "printed argmax -0.603489");
  const double k0 = kappa::kappa_at(sys, Direction::Forward, 0.0).value;
  approx(rep, "kappa21(0)", k0, 1.0 + std::exp(0.25) * std::erfc(0.5), 1e-6,
         "closed form 1 + e^{1/4+t} erfc(1/2+t) at t = 0");
  const auto sys0 = sys_from("II", "1", "2/sqrt(pi)*exp(-t^2)", iv, 0.0);
  const auto bc0 = kappa::best_ulam_constant(sys0, Direction::Forward, NormKind::MaxNorm);
  approx(rep, "K21 with beta = 0", bc0.K, bc.K, 1e-9,
         "kappa21 depends on Re(lambda) only");
  const auto sysm = sys_from("II", "-1+i*t", "2/sqrt(pi)*exp(-t^2)", iv, 0.0);
  const auto bcm = kappa::best_ulam_constant(sysm, Direction::Backward, NormKind::MaxNorm);
  approx(rep, "K22 (mirror)", bcm.K, bc.K, 1e-6, "kappa22(t) = kappa21(-t)");
  approx(rep, "t* (mirror)", bcm.t_star, -bc.t_star, 1e-4, "printed argmax +0.603489");
  return rep;
}

inline CaseReport case_ex63() {
  CaseReport rep;
  rep.id = "ex6.3";
  rep.status = CaseStatus::InstabilityDemo;
  rep.note = "kappa21/kappa22 diverge for every t: the system is not Ulam stable; the "
             "growth of X(t) is only quadratic, too slow to absorb the defect.";
  const auto sys = sys_from("II", "2*t/(1+t^2)", "1", Interval::real_line(), 0.0);
  const auto p_fwd = kappa::kappa_profile(sys, Direction::Forward, NormKind::MaxNorm);
  flag(rep, "kappa21 nonexistent", !p_fwd.exists_everywhere,
       "truncated integrals grow like log T", p_fwd.exists_everywhere ? 1 : 0, 0);
  const auto p_bwd = kappa::kappa_profile(sys, Direction::Backward, NormKind::MaxNorm);
  flag(rep, "kappa22 nonexistent", !p_bwd.exists_everywhere,
       "both one-sided conditions are sharp", p_bwd.exists_everywhere ? 1 : 0, 0);

  // Deviation of phi(t) = X(t) (eps atan t, 0)^T from every candidate
  // X(t) x0 on a 21x21 anchor grid exceeds 10 eps somewhere on |t| <= 50.
  const double eps = 0.2;
  sys.ensure_coverage(-50.0, 50.0);
  double min_sup = kInf;
  for (int iy = 0; iy <= 20; ++iy) {
    for (int ix = 0; ix <= 20; ++ix) {
      const Vec2 x0{Cx(-2.0 * eps + 0.2 * eps * ix, 0.0),
                    Cx(-2.0 * eps + 0.2 * eps * iy, 0.0)};
      double sup = 0.0;
      for (int k = 0; k <= 2000 && sup <= 10.0 * eps; ++k) {
        const double t = -50.0 + 0.05 * k;
        const Vec2 diff{Cx(eps * std::atan(t), 0.0) - x0.v1, -x0.v2};
        sup = std::max(sup, sys.propagator(t, 0.0).apply_norm(diff, NormKind::MaxNorm));
      }
      min_sup = std::min(min_sup, sup);
    }
  }
  flag(rep, "every candidate misses by more than 10 eps", min_sup > 10.0 * eps,
       "unbounded deviation for every x0", min_sup, 10.0 * eps);
  return rep;
}

inline CaseReport case_ex64() {
  CaseReport rep;
  rep.id = "ex6.4";
  const Interval iv = Interval::real_line();
  const auto sys = sys_from("III", "1-2*t/(1+t^2)", "t", iv, 0.0);
  const auto bc = kappa::best_ulam_constant(sys, Direction::Forward, NormKind::EuclidNorm);
  approx(rep, "K31", bc.K, 2.0 + std::numbers::sqrt2, 1e-6,
         "kappa31 = (t^2+2t+3)/(t^2+1), sup = 2+sqrt(2)");
  approx(rep, "t*", bc.t_star, std::numbers::sqrt2 - 1.0, 1e-4, "argmax sqrt(2)-1");
  const auto sysm = sys_from("III", "-1-2*t/(1+t^2)", "t", iv, 0.0);
  const auto bcm = kappa::best_ulam_constant(sysm, Direction::Backward, NormKind::EuclidNorm);
  approx(rep, "K32 (mirror)", bcm.K, 2.0 + std::numbers::sqrt2, 1e-6,
         "kappa32 = (t^2-2t+3)/(t^2+1)");
  approx(rep, "t* (mirror)", bcm.t_star, 1.0 - std::numbers::sqrt2, 1e-4,
         "argmax 1-sqrt(2)");
  const auto cond = kappa::check_condition(sys, Direction::Forward);
  flag(rep, "divergence condition holds", cond.verdict == kappa::Verdict::Holds,
       "int alpha -> +inf", cond.verdict == kappa::Verdict::Holds ? 1 : 0);
  return rep;
}

inline CaseReport case_ex65() {
  CaseReport rep;
  rep.id = "ex6.5";
  rep.note = "t0 fixed to pi/4; the constants are t0-independent (checked for pi/6 and "
             "pi/3).";
  const double half_pi = std::numbers::pi / 2.0;
  const Interval iv(0.0, half_pi);
  const double t0 = std::numbers::pi / 4.0;

  auto mk = [](const char* s) { return expr::Expr::parse(s); };
  const auto a11 = mk("2*cot(t)"), a12 = mk("i"), a21 = mk("-3*i"), a22 = mk("-2*cot(t)");
  ode::MatFn A = [=](double t) {
    return Mat2{a11.eval(t), a12.eval(t), a21.eval(t), a22.eval(t)};
  };
  const auto R = transform::TransformSpec::from_strings(
      "cos(t)", "i*sin(t)", "i*sin(t)", "cos(t)", iv, NormKind::MaxNorm, t0);
  const auto J = transform::similarity(A, R);

  const auto cls = transform::classify(J, iv, t0);
  flag(rep, "J classified as form I",
       cls.form.has_value() && *cls.form == jordan::JordanForm::I,
       "J = diag(csc sec, -csc sec)", cls.max_pattern_residual, 0.0);

  double j_residual = 0.0;
  for (int k = 1; k <= 15; ++k) {
    const double t = half_pi * k / 16.0;
    const double want = 1.0 / (std::sin(t) * std::cos(t));
    const Mat2 m = J(t);
    j_residual = std::max(j_residual, std::abs(m.m11 - Cx(want, 0.0)));
    j_residual = std::max(j_residual, std::abs(m.m22 - Cx(-want, 0.0)));
  }
  flag(rep, "J entries match +/- csc(t) sec(t) to 1e-8", j_residual <= 1e-8,
       "diagonal entries of the transformed system", j_residual, 1e-8);

  const auto sysJ = transform::as_jordan_system(J, jordan::JordanForm::I, iv, t0);
  const auto bc = kappa::best_ulam_constant(sysJ, Direction::Hyperbolic, NormKind::MaxNorm);
  approx(rep, "K13 for J", bc.K, 0.4023711, 1e-5,
         "sup of max(-tan t ln sin t, -cot t ln cos t)");

  approx(rep, "sup ||R||_inf", R.sup_R().sup, std::numbers::sqrt2, 1e-9,
         "sup of cos t + sin t");
  approx(rep, "sup ||R^-1||_inf", R.sup_Rinv().sup, std::numbers::sqrt2, 1e-9,
         "R^{-1} has the same entry moduli");
  const double propagated = transform::propagate_constant(bc.K, R);
  approx(rep, "propagated constant", propagated, 0.8047422, 1e-4, "2 K13");

  for (double alt : {std::numbers::pi / 6.0, std::numbers::pi / 3.0}) {
    const auto sys_alt = transform::as_jordan_system(J, jordan::JordanForm::I, iv, alt);
    const auto bc_alt =
        kappa::best_ulam_constant(sys_alt, Direction::Hyperbolic, NormKind::MaxNorm);
    approx(rep, "K13 with t0 = " + std::to_string(alt), bc_alt.K, bc.K, 1e-7,
           "constant is t0-independent");
  }
  return rep;
}

inline CaseReport case_ex66() {
  CaseReport rep;
  rep.id = "ex6.6";
  rep.status = CaseStatus::InstabilityDemo;
  rep.note = "center case alpha = 0: rotations preserve norms, kappa31/kappa32 diverge "
             "and no shadowing constant exists.";
  const auto sys = sys_from("III", "0", "1", Interval::real_line(), 0.0);
  const auto p_fwd = kappa::kappa_profile(sys, Direction::Forward, NormKind::EuclidNorm);
  flag(rep, "kappa31 nonexistent", !p_fwd.exists_everywhere, "integrand stays at 1",
       p_fwd.exists_everywhere ? 1 : 0, 0);
  const auto p_bwd = kappa::kappa_profile(sys, Direction::Backward, NormKind::EuclidNorm);
  flag(rep, "kappa32 nonexistent", !p_bwd.exists_everywhere, "integrand stays at 1",
       p_bwd.exists_everywhere ? 1 : 0, 0);
  const auto probe = shadow::uniqueness_probe(sys, Direction::Forward, Vec2{1.0, 0.0},
                                              NormKind::EuclidNorm, 10.0);
  flag(rep, "||X(t) delta|| does not diverge", probe.verdict == shadow::ProbeVerdict::NoDivergence,
       "rotations are Euclidean isometries",
       probe.verdict == shadow::ProbeVerdict::NoDivergence ? 1 : 0);
  return rep;
}

inline CaseReport case_ex67() {
  CaseReport rep;
  rep.id = "ex6.7";
  const auto sys = sys_from("I", "1", "-1", Interval::real_line(), 0.0);
  const double kc = kappa::closed_form_constant(sys, NormKind::MaxNorm);
  approx(rep, "K_c1", kc, 1.0, 0.0, "max(1/|Re l1|, 1/|Re l2|) with l = +/-1");
  const auto bc = kappa::best_ulam_constant(sys, Direction::Hyperbolic, NormKind::MaxNorm);
  approx(rep, "numeric sup", bc.K, 1.0, 1e-6, "saddle tube constant");
  return rep;
}

inline CaseReport case_ex68() {
  CaseReport rep;
  rep.id = "ex6.8";
  rep.status = CaseStatus::SuspectedTypo;
  rep.note = "printed constant 1 and the cited forward case disagree with the closed "
             "form: Re(lambda) = -1 < 0 selects the backward case, whose constant is "
             "(|Re l|+1)/(Re l)^2 = 2. The catalog asserts 2 (printed: 1).";
  const auto sys = sys_from("II", "-1", "1", Interval::real_line(), 0.0);
  const double kc = kappa::closed_form_constant(sys, NormKind::MaxNorm);
  approx(rep, "K_c2 (corrected)", kc, 2.0, 0.0, "(|Re l|+1)/(Re l)^2 at l = -1");
  const auto bc = kappa::best_ulam_constant(sys, Direction::Backward, NormKind::MaxNorm);
  approx(rep, "numeric sup (backward)", bc.K, 2.0, 1e-6, "kappa22 = 2 for l = -1");
  return rep;
}

inline CaseReport case_ex69() {
  CaseReport rep;
  rep.id = "ex6.9";
  rep.status = CaseStatus::SuspectedTypo;
  rep.note = "the cited forward case requires int alpha -> +inf, but alpha = -1 < 0; "
             "the backward case applies instead. The constant 1/|alpha| = 1 is "
             "unaffected.";
  const auto sys = sys_from("III", "-1", "2", Interval::real_line(), 0.0);
  const double kc = kappa::closed_form_constant(sys, NormKind::EuclidNorm);
  approx(rep, "K_c3", kc, 1.0, 0.0, "1/|alpha| at alpha = -1");
  const auto bc = kappa::best_ulam_constant(sys, Direction::Backward, NormKind::EuclidNorm);
  approx(rep, "numeric sup (backward)", bc.K, 1.0, 1e-6, "kappa32 = 1 for alpha = -1");
  const auto fwd = kappa::kappa_profile(sys, Direction::Forward, NormKind::EuclidNorm);
  flag(rep, "kappa31 nonexistent (cited direction)", !fwd.exists_everywhere,
       "e^{+(s-t)} tail diverges", fwd.exists_everywhere ? 1 : 0, 0);
  return rep;
}

inline CaseReport case_cor34() {
  CaseReport rep;
  rep.id = "cor3.4";
  {
    const auto sys = sys_from("I", "1", "-1", Interval::real_line(), 0.0);
    approx(rep, "K_c1 (1, -1)", kappa::closed_form_constant(sys, NormKind::MaxNorm), 1.0,
           0.0, "max(1, 1)");
    const auto bc = kappa::best_ulam_constant(sys, Direction::Hyperbolic, NormKind::MaxNorm);
    approx(rep, "numeric (1, -1)", bc.K, 1.0, 1e-6, "hyperbolic case");
  }
  {
    const auto sys = sys_from("I", "2+i", "3", Interval::real_line(), 0.0);
    approx(rep, "K_c1 (2+i, 3)", kappa::closed_form_constant(sys, NormKind::MaxNorm), 0.5,
           0.0, "max(1/2, 1/3)");
    const auto bc = kappa::best_ulam_constant(sys, Direction::Forward, NormKind::MaxNorm);
    approx(rep, "numeric (2+i, 3)", bc.K, 0.5, 0.5e-6, "forward case");
  }
  return rep;
}

inline CaseReport case_cor44() {
  CaseReport rep;
  rep.id = "cor4.4";
  {
    const auto sys = sys_from("II", "-1", "1", Interval::real_line(), 0.0);
    approx(rep, "K_c2 (-1)", kappa::closed_form_constant(sys, NormKind::MaxNorm), 2.0, 0.0,
           "(1+1)/1");
    const auto bc = kappa::best_ulam_constant(sys, Direction::Backward, NormKind::MaxNorm);
    approx(rep, "numeric (-1)", bc.K, 2.0, 2e-6, "backward case");
  }
  {
    const auto sys = sys_from("II", "2", "1", Interval::real_line(), 0.0);
    approx(rep, "K_c2 (2)", kappa::closed_form_constant(sys, NormKind::MaxNorm), 0.75, 0.0,
           "(2+1)/4");
    const auto bc = kappa::best_ulam_constant(sys, Direction::Forward, NormKind::MaxNorm);
    approx(rep, "numeric (2)", bc.K, 0.75, 0.75e-6, "forward case");
  }
  return rep;
}

inline CaseReport case_cor54() {
  CaseReport rep;
  rep.id = "cor5.4";
  {
    const auto sys = sys_from("III", "1", "1", Interval::real_line(), 0.0);
    approx(rep, "K_c3 (1)", kappa::closed_form_constant(sys, NormKind::EuclidNorm), 1.0,
           0.0, "1/|alpha|");
    const auto bc = kappa::best_ulam_constant(sys, Direction::Forward, NormKind::EuclidNorm);
    approx(rep, "numeric (1)", bc.K, 1.0, 1e-6, "forward case");
  }
  {
    const auto sys = sys_from("III", "-1", "1", Interval::real_line(), 0.0);
    approx(rep, "K_c3 (-1)", kappa::closed_form_constant(sys, NormKind::EuclidNorm), 1.0,
           0.0, "1/|alpha|");
    const auto bc = kappa::best_ulam_constant(sys, Direction::Backward, NormKind::EuclidNorm);
    approx(rep, "numeric (-1)", bc.K, 1.0, 1e-6, "backward case");
  }
  return rep;
}

inline CaseReport case_thm55() {
  CaseReport rep;
  rep.id = "thm5.5";
  const auto sys = sys_from("III", "-1", "2", Interval::real_line(), 0.0);
  approx(rep, "K_c4", kappa::closed_form_constant(sys, NormKind::MaxNorm),
         std::numbers::sqrt2, 0.0, "sqrt(2)/|alpha|");
  const auto bc = kappa::best_ulam_constant(sys, Direction::Backward, NormKind::MaxNorm);
  approx(rep, "numeric sup (max norm)", bc.K, std::numbers::sqrt2, 1.5e-6,
         "sqrt(2) kappa32 supremum");
  return rep;
}

}  // namespace detail

[[nodiscard]] inline const std::vector<std::string>& case_ids() {
  static const std::vector<std::string> ids = {
      "ex6.1", "ex6.2", "ex6.3", "ex6.4", "ex6.5", "ex6.6", "ex6.7",
      "ex6.8", "ex6.9", "cor3.4", "cor4.4", "cor5.4", "thm5.5"};
  return ids;
}

/// Runs the full pipeline for one catalogued case and diffs computed
/// values against the expectations.
[[nodiscard]] inline CaseReport run_case(const std::string& id) {
  using Fn = CaseReport (*)();
  static const std::map<std::string, Fn> table = {
      {"ex6.1", &detail::case_ex61},   {"ex6.2", &detail::case_ex62},
      {"ex6.3", &detail::case_ex63},   {"ex6.4", &detail::case_ex64},
      {"ex6.5", &detail::case_ex65},   {"ex6.6", &detail::case_ex66},
      {"ex6.7", &detail::case_ex67},   {"ex6.8", &detail::case_ex68},
      {"ex6.9", &detail::case_ex69},   {"cor3.4", &detail::case_cor34},
      {"cor4.4", &detail::case_cor44}, {"cor5.4", &detail::case_cor54},
      {"thm5.5", &detail::case_thm55}};
  const auto it = table.find(id);
  if (it == table.end()) throw ConfigError("unknown case id '" + id + "'");
  return it->second();
}

}  // namespace ulamkit::registry
