#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>

#include "ulamkit/errors.hpp"
#include "ulamkit/mat2.hpp"
#include "ulamkit/special.hpp"

namespace ulamkit::expr {

enum class NodeKind {
  Number, Pi, ImagUnit, Var,
  Add, Sub, Mul, Div, Pow, Neg,
  Call,
};

enum class Func {
  Sin, Cos, Tan, Cot, Sec, Csc,
  Exp, Ln, Sqrt, Atan, Erf, Erfc,
  Abs, Re, Im,
};

[[nodiscard]] constexpr const char* func_name(Func f) noexcept {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tan: return "tan";
    case Func::Cot: return "cot";
    case Func::Sec: return "sec";
    case Func::Csc: return "csc";
    case Func::Exp: return "exp";
    case Func::Ln: return "ln";
    case Func::Sqrt: return "sqrt";
    case Func::Atan: return "atan";
    case Func::Erf: return "erf";
    case Func::Erfc: return "erfc";
    case Func::Abs: return "abs";
    case Func::Re: return "re";
    case Func::Im: return "im";
  }
  return "?";
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double number{0.0};  // Number
  Func func{Func::Sin};  // Call
  NodePtr lhs;  // binary lhs / unary operand / call argument
  NodePtr rhs;  // binary rhs
};

namespace detail {

[[nodiscard]] inline NodePtr make(NodeKind k, NodePtr l = nullptr, NodePtr r = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

[[nodiscard]] inline NodePtr num(double v);

[[nodiscard]] inline NodePtr neg(NodePtr u) {
  if (u->kind == NodeKind::Neg) return u->lhs;
  if (u->kind == NodeKind::Number && u->number == 0.0) return u;
  return make(NodeKind::Neg, std::move(u));
}

inline NodePtr num(double v) {
  if (std::signbit(v) && v == 0.0) v = 0.0;
  if (v < 0.0) return neg(num(-v));
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Number;
  n->number = v;
  return n;
}

[[nodiscard]] inline bool is_num(const NodePtr& n, double v) {
  return n->kind == NodeKind::Number && n->number == v;
}

// Smart constructors with light simplification, used when building
// derivatives so that d/dt t^2 comes out as 2*t rather than 2*t^1*1.
[[nodiscard]] inline NodePtr add(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  if (a->kind == NodeKind::Number && b->kind == NodeKind::Number) {
    const double v = a->number + b->number;
    if (std::isfinite(v)) return num(v);
  }
  return make(NodeKind::Add, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr sub(NodePtr a, NodePtr b) {
  if (is_num(b, 0.0)) return a;
  if (is_num(a, 0.0)) return neg(std::move(b));
  if (a->kind == NodeKind::Number && b->kind == NodeKind::Number) {
    const double v = a->number - b->number;
    if (std::isfinite(v)) return num(v);
  }
  return make(NodeKind::Sub, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr mul(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  if (a->kind == NodeKind::Number && b->kind == NodeKind::Number) {
    const double v = a->number * b->number;
    if (std::isfinite(v)) return num(v);
  }
  return make(NodeKind::Mul, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr div(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0) && !is_num(b, 0.0)) return num(0.0);
  if (is_num(b, 1.0)) return a;
  if (a->kind == NodeKind::Number && b->kind == NodeKind::Number && b->number != 0.0) {
    const double v = a->number / b->number;
    if (std::isfinite(v)) return num(v);
  }
  return make(NodeKind::Div, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr pow(NodePtr a, NodePtr b) {
  if (is_num(b, 1.0)) return a;
  if (is_num(b, 0.0)) return num(1.0);
  return make(NodeKind::Pow, std::move(a), std::move(b));
}

[[nodiscard]] inline NodePtr call(Func f, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

[[nodiscard]] inline std::string print(const NodePtr& n, int min_level = 0);

[[nodiscard]] inline int level(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::Add: case NodeKind::Sub: return 1;
    case NodeKind::Mul: case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

[[nodiscard]] inline std::string print_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string print(const NodePtr& n, int min_level) {
  std::string body;
  switch (n->kind) {
    case NodeKind::Number: body = print_number(n->number); break;
    case NodeKind::Pi: body = "pi"; break;
    case NodeKind::ImagUnit: body = "i"; break;
    case NodeKind::Var: body = "t"; break;
    case NodeKind::Add: body = print(n->lhs, 1) + " + " + print(n->rhs, 2); break;
    case NodeKind::Sub: body = print(n->lhs, 1) + " - " + print(n->rhs, 2); break;
    case NodeKind::Mul: body = print(n->lhs, 2) + "*" + print(n->rhs, 3); break;
    case NodeKind::Div: body = print(n->lhs, 2) + "/" + print(n->rhs, 3); break;
    case NodeKind::Neg: body = "-" + print(n->lhs, 3); break;
    case NodeKind::Pow: body = print(n->lhs, 5) + "^" + print(n->rhs, 3); break;
    case NodeKind::Call:
      body = std::string(func_name(n->func)) + "(" + print(n->lhs, 0) + ")";
      break;
  }
  if (level(n) < min_level) return "(" + body + ")";
  return body;
}

[[nodiscard]] inline Cx eval(const NodePtr& n, double t) {
  auto domain_fail = [&](const char* what) -> Cx {
    throw EvalDomainError(what, print(n));
  };
  auto finite_or_fail = [&](Cx v) -> Cx {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      return domain_fail("non-finite value");
    return v;
  };
  switch (n->kind) {
    case NodeKind::Number: return Cx(n->number, 0.0);
    case NodeKind::Pi: return Cx(std::numbers::pi, 0.0);
    case NodeKind::ImagUnit: return Cx(0.0, 1.0);
    case NodeKind::Var: return Cx(t, 0.0);
    case NodeKind::Add: return eval(n->lhs, t) + eval(n->rhs, t);
    case NodeKind::Sub: return eval(n->lhs, t) - eval(n->rhs, t);
    case NodeKind::Mul: return eval(n->lhs, t) * eval(n->rhs, t);
    case NodeKind::Neg: return -eval(n->lhs, t);
    case NodeKind::Div: {
      const Cx a = eval(n->lhs, t);
      const Cx b = eval(n->rhs, t);
      if (b == Cx(0.0, 0.0)) return domain_fail("division by zero");
      return finite_or_fail(a / b);
    }
    case NodeKind::Pow: {
      const Cx a = eval(n->lhs, t);
      // Integer powers by repeated multiplication keep real bases real.
      if (n->rhs->kind == NodeKind::Number) {
        const double e = n->rhs->number;
        if (e == std::floor(e) && std::abs(e) <= 16.0) {
          Cx acc(1.0, 0.0);
          for (int k = 0; k < static_cast<int>(std::abs(e)); ++k) acc *= a;
          if (e < 0.0) {
            if (acc == Cx(0.0, 0.0)) return domain_fail("zero to a negative power");
            acc = 1.0 / acc;
          }
          return finite_or_fail(acc);
        }
      }
      const Cx b = eval(n->rhs, t);
      if (a == Cx(0.0, 0.0) && b.real() <= 0.0) return domain_fail("zero base");
      return finite_or_fail(std::pow(a, b));
    }
    case NodeKind::Call: {
      const Cx u = eval(n->lhs, t);
      switch (n->func) {
        case Func::Sin: return finite_or_fail(std::sin(u));
        case Func::Cos: return finite_or_fail(std::cos(u));
        case Func::Tan: return finite_or_fail(std::tan(u));
        case Func::Cot: {
          const Cx s = std::sin(u);
          if (s == Cx(0.0, 0.0)) return domain_fail("cot pole");
          return finite_or_fail(std::cos(u) / s);
        }
        case Func::Sec: {
          const Cx c = std::cos(u);
          if (c == Cx(0.0, 0.0)) return domain_fail("sec pole");
          return finite_or_fail(1.0 / c);
        }
        case Func::Csc: {
          const Cx s = std::sin(u);
          if (s == Cx(0.0, 0.0)) return domain_fail("csc pole");
          return finite_or_fail(1.0 / s);
        }
        case Func::Exp: return finite_or_fail(std::exp(u));
        case Func::Ln:
          if (u == Cx(0.0, 0.0)) return domain_fail("ln(0)");
          return finite_or_fail(std::log(u));
        case Func::Sqrt: return finite_or_fail(std::sqrt(u));
        case Func::Atan: return finite_or_fail(std::atan(u));
        case Func::Erf:
          if (u.imag() != 0.0) return domain_fail("erf of non-real argument");
          return Cx(special::erf(u.real()), 0.0);
        case Func::Erfc:
          if (u.imag() != 0.0) return domain_fail("erfc of non-real argument");
          return Cx(special::erfc(u.real()), 0.0);
        case Func::Abs: return Cx(std::abs(u), 0.0);
        case Func::Re: return Cx(u.real(), 0.0);
        case Func::Im: return Cx(u.imag(), 0.0);
      }
      return domain_fail("unknown function");
    }
  }
  return domain_fail("corrupt node");
}

[[nodiscard]] inline NodePtr diff(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::Number: case NodeKind::Pi: case NodeKind::ImagUnit:
      return num(0.0);
    case NodeKind::Var: return num(1.0);
    case NodeKind::Add: return add(diff(n->lhs), diff(n->rhs));
    case NodeKind::Sub: return sub(diff(n->lhs), diff(n->rhs));
    case NodeKind::Neg: return neg(diff(n->lhs));
    case NodeKind::Mul:
      return add(mul(diff(n->lhs), n->rhs), mul(n->lhs, diff(n->rhs)));
    case NodeKind::Div:
      return div(sub(mul(diff(n->lhs), n->rhs), mul(n->lhs, diff(n->rhs))),
                 pow(n->rhs, num(2.0)));
    case NodeKind::Pow: {
      const NodePtr& u = n->lhs;
      const NodePtr& v = n->rhs;
      const NodePtr du = diff(u);
      const NodePtr dv = diff(v);
      if (is_num(dv, 0.0)) {
        // u^c -> c*u^(c-1)*u'
        NodePtr expo = (v->kind == NodeKind::Number) ? num(v->number - 1.0)
                                                     : sub(v, num(1.0));
        return mul(mul(v, pow(u, std::move(expo))), du);
      }
      if (is_num(du, 0.0)) {
        // a^v -> a^v * ln(a) * v'
        return mul(mul(pow(u, v), call(Func::Ln, u)), dv);
      }
      return mul(pow(u, v), add(mul(dv, call(Func::Ln, u)), div(mul(v, du), u)));
    }
    case NodeKind::Call: {
      const NodePtr& u = n->lhs;
      const NodePtr du = diff(u);
      switch (n->func) {
        case Func::Sin: return mul(call(Func::Cos, u), du);
        case Func::Cos: return neg(mul(call(Func::Sin, u), du));
        case Func::Tan: return div(du, pow(call(Func::Cos, u), num(2.0)));
        case Func::Cot: return neg(div(du, pow(call(Func::Sin, u), num(2.0))));
        case Func::Sec: return mul(mul(call(Func::Sec, u), call(Func::Tan, u)), du);
        case Func::Csc: return neg(mul(mul(call(Func::Csc, u), call(Func::Cot, u)), du));
        case Func::Exp: return mul(call(Func::Exp, u), du);
        case Func::Ln: return div(du, u);
        case Func::Sqrt: return div(du, mul(num(2.0), call(Func::Sqrt, u)));
        case Func::Atan: return div(du, add(num(1.0), pow(u, num(2.0))));
        case Func::Erf:
          return mul(mul(div(num(2.0), call(Func::Sqrt, make(NodeKind::Pi))),
                         call(Func::Exp, neg(pow(u, num(2.0))))),
                     du);
        case Func::Erfc:
          return neg(mul(mul(div(num(2.0), call(Func::Sqrt, make(NodeKind::Pi))),
                             call(Func::Exp, neg(pow(u, num(2.0))))),
                         du));
        case Func::Abs: case Func::Re: case Func::Im:
          throw NonDifferentiableError(print(n));
      }
      throw NonDifferentiableError(print(n));
    }
  }
  throw NonDifferentiableError(print(n));
}

[[nodiscard]] inline bool identical(const NodePtr& a, const NodePtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Number: return a->number == b->number;
    case NodeKind::Pi: case NodeKind::ImagUnit: case NodeKind::Var: return true;
    case NodeKind::Neg: return identical(a->lhs, b->lhs);
    case NodeKind::Call: return a->func == b->func && identical(a->lhs, b->lhs);
    default: return identical(a->lhs, b->lhs) && identical(a->rhs, b->rhs);
  }
}

[[nodiscard]] inline bool has_nonanalytic(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::Call:
      if (n->func == Func::Abs || n->func == Func::Re || n->func == Func::Im) return true;
      return has_nonanalytic(n->lhs);
    case NodeKind::Neg: return has_nonanalytic(n->lhs);
    case NodeKind::Add: case NodeKind::Sub: case NodeKind::Mul:
    case NodeKind::Div: case NodeKind::Pow:
      return has_nonanalytic(n->lhs) || has_nonanalytic(n->rhs);
    default: return false;
  }
}

// Recursive-descent parser over the grammar
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := primary ('^' factor)?
//   primary:= number | 'pi' | 'i' | 't' | ident '(' expr ')' | '(' expr ')'
// with '^' binding tighter than unary minus and right-associative.
class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) {}

  [[nodiscard]] NodePtr run() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", 0, "expression");
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size())
      throw ParseError("trailing input", pos_, "end of expression");
    return e;
  }

private:
  std::string_view src_;
  std::size_t pos_{0};

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  [[nodiscard]] bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr e = parse_term();
    for (;;) {
      if (eat('+')) e = detail::make(NodeKind::Add, e, parse_term());
      else if (eat('-')) e = detail::make(NodeKind::Sub, e, parse_term());
      else return e;
    }
  }

  NodePtr parse_term() {
    NodePtr e = parse_factor();
    for (;;) {
      if (eat('*')) e = detail::make(NodeKind::Mul, e, parse_factor());
      else if (eat('/')) e = detail::make(NodeKind::Div, e, parse_factor());
      else return e;
    }
  }

  NodePtr parse_factor() {
    if (eat('-')) return detail::make(NodeKind::Neg, parse_factor());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (eat('^')) return detail::make(NodeKind::Pow, base, parse_factor());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of input", pos_, "number, name or '('");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!eat(')')) throw ParseError("unbalanced parenthesis", pos_, "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_,
                     "number, name or '('");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc{} || res.ptr != src_.data() + pos_)
      throw ParseError("malformed number", start, "decimal literal");
    return detail::num(value);
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "pi") return detail::make(NodeKind::Pi);
    if (name == "i") return detail::make(NodeKind::ImagUnit);
    if (name == "t") return detail::make(NodeKind::Var);
    static constexpr std::pair<std::string_view, Func> table[] = {
        {"sin", Func::Sin}, {"cos", Func::Cos}, {"tan", Func::Tan},
        {"cot", Func::Cot}, {"sec", Func::Sec}, {"csc", Func::Csc},
        {"exp", Func::Exp}, {"ln", Func::Ln},   {"sqrt", Func::Sqrt},
        {"atan", Func::Atan}, {"erf", Func::Erf}, {"erfc", Func::Erfc},
        {"abs", Func::Abs}, {"re", Func::Re},   {"im", Func::Im},
    };
    for (const auto& [fname, f] : table) {
      if (name == fname) {
        if (!eat('(')) throw ParseError("function call needs '('", pos_, "'('");
        NodePtr arg = parse_expr();
        if (!eat(')')) throw ParseError("unbalanced parenthesis", pos_, "')'");
        return detail::call(f, std::move(arg));
      }
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start,
                     "t, pi, i or a function name");
  }
};

}  // namespace detail

/// An immutable expression over the time variable t with complex scalar
/// values. Cheap to copy (shared tree); safe for concurrent evaluation.
class Expr {
public:
  Expr() : root_(detail::num(0.0)) {}
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  [[nodiscard]] static Expr parse(std::string_view source) {
    return Expr(detail::Parser(source).run());
  }

  [[nodiscard]] static Expr number(double v) { return Expr(detail::num(v)); }

  [[nodiscard]] Cx eval(double t) const { return detail::eval(root_, t); }
  [[nodiscard]] Cx operator()(double t) const { return eval(t); }

  [[nodiscard]] Expr derivative() const { return Expr(detail::diff(root_)); }

  [[nodiscard]] std::string str() const { return detail::print(root_); }

  [[nodiscard]] bool identical(const Expr& other) const {
    return detail::identical(root_, other.root_);
  }

  [[nodiscard]] bool has_nonanalytic() const { return detail::has_nonanalytic(root_); }

  /// Bridges into the std::function-based coefficient interfaces.
  [[nodiscard]] std::function<Cx(double)> fn() const {
    return [root = root_](double t) { return detail::eval(root, t); };
  }

  [[nodiscard]] const NodePtr& root() const { return root_; }

private:
  NodePtr root_;
};

}  // namespace ulamkit::expr
