#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fmorph/error.hpp"
#include "fmorph/jet.hpp"

namespace fmorph {

// Small mathematical-expression language. Grammar:
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?
//   atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
// '^' is right-associative and binds tighter than unary minus.

enum class NodeKind : std::uint8_t { Number, Pi, Variable, Neg, Binary, Call };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double number = 0.0;      // Number
  std::string name;         // Variable name or Call function name
  char op = 0;              // Binary: one of + - * / ^
  std::vector<NodePtr> args;
  std::size_t offset = Error::npos;  // byte offset in the source text
};

class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr n) : node_(std::move(n)) {}
  const Node& node() const {
    if (!node_) throw Error(ErrorCode::Internal, "empty expression");
    return *node_;
  }
  bool empty() const { return node_ == nullptr; }

 private:
  NodePtr node_;
};

// --- AST builders (trivial identities folded to keep derivatives small) ---

inline Expr num(double v) {
  if (v < 0.0) {
    auto inner = std::make_shared<Node>(Node{NodeKind::Number, -v, "", 0, {}, Error::npos});
    return Expr(std::make_shared<Node>(
        Node{NodeKind::Neg, 0.0, "", 0, {std::move(inner)}, Error::npos}));
  }
  return Expr(std::make_shared<Node>(Node{NodeKind::Number, v, "", 0, {}, Error::npos}));
}
inline Expr var(std::string name) {
  return Expr(std::make_shared<Node>(Node{NodeKind::Variable, 0.0, std::move(name), 0, {}, Error::npos}));
}

inline bool is_num(const Expr& e, double v) {
  return !e.empty() && e.node().kind == NodeKind::Number && e.node().number == v;
}

inline Expr binary(char op, Expr a, Expr b) {
  return Expr(std::make_shared<Node>(
      Node{NodeKind::Binary, 0.0, "", op, {std::make_shared<Node>(a.node()), std::make_shared<Node>(b.node())}, Error::npos}));
}

inline Expr add(Expr a, Expr b) {
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  return binary('+', std::move(a), std::move(b));
}
inline Expr sub(Expr a, Expr b) {
  if (is_num(b, 0.0)) return a;
  return binary('-', std::move(a), std::move(b));
}
inline Expr neg(Expr a) {
  if (is_num(a, 0.0)) return a;
  return Expr(std::make_shared<Node>(
      Node{NodeKind::Neg, 0.0, "", 0, {std::make_shared<Node>(a.node())}, Error::npos}));
}
inline Expr mul(Expr a, Expr b) {
  if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  return binary('*', std::move(a), std::move(b));
}
inline Expr divide(Expr a, Expr b) {
  if (is_num(a, 0.0)) return a;
  if (is_num(b, 1.0)) return a;
  return binary('/', std::move(a), std::move(b));
}
inline Expr powx(Expr a, Expr b) {
  if (is_num(b, 1.0)) return a;
  if (is_num(b, 0.0)) return num(1.0);
  return binary('^', std::move(a), std::move(b));
}
inline Expr call(std::string fn, std::vector<Expr> args) {
  std::vector<NodePtr> nodes;
  nodes.reserve(args.size());
  for (auto& a : args) nodes.push_back(std::make_shared<Node>(a.node()));
  return Expr(std::make_shared<Node>(
      Node{NodeKind::Call, 0.0, std::move(fn), 0, std::move(nodes), Error::npos}));
}

// --- Parser -----------------------------------------------------------------

namespace detail {

inline int function_arity(std::string_view fn) {
  if (fn == "sin" || fn == "cos" || fn == "tan" || fn == "exp" || fn == "log" ||
      fn == "sqrt" || fn == "abs" || fn == "tanh")
    return 1;
  if (fn == "atan2" || fn == "pow" || fn == "min" || fn == "max") return 2;
  return -1;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) {
      if (src_[pos_] == ')') throw Error(ErrorCode::UnbalancedParen, "unmatched ')'", pos_);
      throw Error(ErrorCode::UnexpectedToken, "trailing input", pos_);
    }
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r'))
      ++pos_;
  }
  bool peek_is(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      std::size_t at = pos_;
      if (consume('+'))
        e = with_offset(binary('+', e, parse_term()), at);
      else if (consume('-'))
        e = with_offset(binary('-', e, parse_term()), at);
      else
        return e;
    }
  }
  Expr parse_term() {
    Expr e = parse_unary();
    for (;;) {
      std::size_t at = pos_;
      if (consume('*'))
        e = with_offset(binary('*', e, parse_unary()), at);
      else if (consume('/'))
        e = with_offset(binary('/', e, parse_unary()), at);
      else
        return e;
    }
  }
  Expr parse_unary() {
    std::size_t at = pos_;
    if (consume('-')) return with_offset(neg(parse_unary()), at);
    return parse_power();
  }
  Expr parse_power() {
    Expr base = parse_atom();
    std::size_t at = pos_;
    if (consume('^')) return with_offset(binary('^', base, parse_unary()), at);
    return base;
  }
  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw Error(ErrorCode::UnexpectedToken, "unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      std::size_t open = pos_++;
      Expr e = parse_expr();
      if (!consume(')')) throw Error(ErrorCode::UnbalancedParen, "missing ')'", open);
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return parse_ident();
    throw Error(ErrorCode::UnexpectedToken, std::string("unexpected character '") + c + "'", pos_);
  }
  Expr parse_number() {
    std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), value);
    if (ec != std::errc{}) throw Error(ErrorCode::UnexpectedToken, "malformed number", start);
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    return with_offset(num(value), start);
  }
  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           ((src_[pos_] >= 'a' && src_[pos_] <= 'z') || (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
            (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
      ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    if (peek_is('(')) {
      const int arity = function_arity(name);
      if (arity < 0) throw Error(ErrorCode::UnknownFunction, "unknown function '" + name + "'", start);
      ++pos_;  // '('
      std::vector<Expr> args;
      args.push_back(parse_expr());
      while (consume(',')) args.push_back(parse_expr());
      if (!consume(')')) throw Error(ErrorCode::UnbalancedParen, "missing ')' in call", start);
      if (static_cast<int>(args.size()) != arity)
        throw Error(ErrorCode::UnexpectedToken,
                    "'" + name + "' expects " + std::to_string(arity) + " argument(s)", start);
      return with_offset(call(std::move(name), std::move(args)), start);
    }
    if (name == "pi")
      return Expr(std::make_shared<Node>(Node{NodeKind::Pi, 0.0, "", 0, {}, start}));
    return with_offset(var(std::move(name)), start);
  }

  static Expr with_offset(Expr e, std::size_t at) {
    Node n = e.node();
    n.offset = at;
    return Expr(std::make_shared<Node>(std::move(n)));
  }
};

}  // namespace detail

inline Expr parse(std::string_view src) { return detail::Parser(src).parse(); }

// --- Printing ---------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline bool is_atom_like(const Node& n) {
  return n.kind == NodeKind::Number || n.kind == NodeKind::Pi || n.kind == NodeKind::Variable ||
         n.kind == NodeKind::Call;
}

inline void print_node(const Node& n, std::string& out) {
  auto child = [&](const NodePtr& c) {
    if (is_atom_like(*c)) {
      print_node(*c, out);
    } else {
      out += '(';
      print_node(*c, out);
      out += ')';
    }
  };
  switch (n.kind) {
    case NodeKind::Number: out += format_double(n.number); return;
    case NodeKind::Pi: out += "pi"; return;
    case NodeKind::Variable: out += n.name; return;
    case NodeKind::Neg:
      out += '-';
      child(n.args[0]);
      return;
    case NodeKind::Binary:
      child(n.args[0]);
      out += n.op;
      child(n.args[1]);
      return;
    case NodeKind::Call:
      out += n.name;
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ',';
        print_node(*n.args[i], out);
      }
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_node(e.node(), out);
  return out;
}

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.number != b.number || a.name != b.name || a.op != b.op ||
      a.args.size() != b.args.size())
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}
inline bool structurally_equal(const Expr& a, const Expr& b) {
  return structurally_equal(a.node(), b.node());
}

// --- Free variables / binding check ----------------------------------------

inline void collect_free_vars(const Node& n, std::set<std::string>& out) {
  if (n.kind == NodeKind::Variable) out.insert(n.name);
  for (const auto& a : n.args) collect_free_vars(*a, out);
}
inline std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_free_vars(e.node(), out);
  return out;
}

/// Bind-time check: every variable of `e` must be declared in `names`.
template <class Env>
void check_bound(const Expr& e, const Env& env) {
  std::set<std::string> vars = free_vars(e);
  for (const auto& v : vars)
    if (env.find(v) == env.end())
      throw Error(ErrorCode::UnboundVariable, "variable '" + v + "' is not bound");
}

// --- Evaluation (shared between real and jet paths) -------------------------

namespace detail {

// Scalar operations for double, mirrored exactly by the Jet2 overloads so
// that eval_real agrees with eval_jet(...).val bit-for-bit.
struct RealOps {
  using Scalar = double;
  static double constant(double c) { return c; }
  static double add(double a, double b) { return a + b; }
  static double sub(double a, double b) { return a - b; }
  static double neg(double a) { return -a; }
  static double mul(double a, double b) { return a * b; }
  static double div(double a, double b, std::size_t at) {
    if (b == 0.0) throw Error(ErrorCode::DomainError, "division by zero", at);
    return a / b;
  }
  static double pow(double a, double b, std::size_t at) {
    if (!(a > 0.0)) {
      const bool int_exp = is_integer(b);
      const bool ok = (b == 0.0) || (b == 1.0) ||
                      (int_exp && (a != 0.0 || b >= 2.0));
      if (!ok)
        throw Error(ErrorCode::DomainError, "pow: base must be positive here", at);
    }
    return std::pow(a, b);
  }
  static double fn1(std::string_view f, double x, std::size_t at) {
    if (f == "sin") return std::sin(x);
    if (f == "cos") return std::cos(x);
    if (f == "tan") return std::tan(x);
    if (f == "exp") return std::exp(x);
    if (f == "tanh") return std::tanh(x);
    if (f == "log") {
      if (x <= 0.0) throw Error(ErrorCode::DomainError, "log of non-positive value", at);
      return std::log(x);
    }
    if (f == "sqrt") {
      if (x <= 0.0) throw Error(ErrorCode::DomainError, "sqrt of non-positive value", at);
      return std::sqrt(x);
    }
    if (f == "abs") {
      if (x == 0.0) throw Error(ErrorCode::DomainError, "abs is not differentiable at 0", at);
      return std::abs(x);
    }
    throw Error(ErrorCode::UnknownFunction, std::string(f), at);
  }
  static double fn2(std::string_view f, double a, double b, std::size_t at) {
    if (f == "atan2") {
      if (a == 0.0 && b == 0.0) throw Error(ErrorCode::DomainError, "atan2(0, 0)", at);
      return std::atan2(a, b);
    }
    if (f == "pow") return pow(a, b, at);
    if (f == "min") return a <= b ? a : b;
    if (f == "max") return a >= b ? a : b;
    throw Error(ErrorCode::UnknownFunction, std::string(f), at);
  }
};

struct JetCtx {
  int k;
};

struct JetOps {
  using Scalar = Jet2;
  const JetCtx& ctx;
  Jet2 constant(double c) const { return Jet2::constant(c, ctx.k); }
  static Jet2 add(const Jet2& a, const Jet2& b) { return a + b; }
  static Jet2 sub(const Jet2& a, const Jet2& b) { return a - b; }
  static Jet2 neg(const Jet2& a) { return -a; }
  static Jet2 mul(const Jet2& a, const Jet2& b) { return a * b; }
  static Jet2 div(const Jet2& a, const Jet2& b, std::size_t at) {
    try {
      return a / b;
    } catch (const Error& e) {
      throw Error(e.code(), "division by zero", at);
    }
  }
  static Jet2 pow(const Jet2& a, const Jet2& b, std::size_t at) {
    try {
      return fmorph::pow(a, b);
    } catch (const Error& e) {
      throw Error(e.code(), "pow domain error", at);
    }
  }
  static Jet2 fn1(std::string_view f, const Jet2& x, std::size_t at) {
    try {
      if (f == "sin") return fmorph::sin(x);
      if (f == "cos") return fmorph::cos(x);
      if (f == "tan") return fmorph::tan(x);
      if (f == "exp") return fmorph::exp(x);
      if (f == "tanh") return fmorph::tanh(x);
      if (f == "log") return fmorph::log(x);
      if (f == "sqrt") return fmorph::sqrt(x);
      if (f == "abs") return fmorph::abs(x);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(f) + " domain error", at);
    }
    throw Error(ErrorCode::UnknownFunction, std::string(f), at);
  }
  static Jet2 fn2(std::string_view f, const Jet2& a, const Jet2& b, std::size_t at) {
    try {
      if (f == "atan2") return fmorph::atan2(a, b);
      if (f == "pow") return fmorph::pow(a, b);
      if (f == "min") return fmorph::min(a, b);
      if (f == "max") return fmorph::max(a, b);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(f) + " domain error", at);
    }
    throw Error(ErrorCode::UnknownFunction, std::string(f), at);
  }
};

template <class Ops, class Env>
typename Ops::Scalar eval_node(const Ops& ops, const Node& n, const Env& env) {
  switch (n.kind) {
    case NodeKind::Number: return ops.constant(n.number);
    case NodeKind::Pi: return ops.constant(3.14159265358979323846);
    case NodeKind::Variable: {
      auto it = env.find(n.name);
      if (it == env.end())
        throw Error(ErrorCode::UnboundVariable, "variable '" + n.name + "' is not bound", n.offset);
      return it->second;
    }
    case NodeKind::Neg: return Ops::neg(eval_node(ops, *n.args[0], env));
    case NodeKind::Binary: {
      auto a = eval_node(ops, *n.args[0], env);
      auto b = eval_node(ops, *n.args[1], env);
      switch (n.op) {
        case '+': return Ops::add(a, b);
        case '-': return Ops::sub(a, b);
        case '*': return Ops::mul(a, b);
        case '/': return Ops::div(a, b, n.offset);
        case '^': return Ops::pow(a, b, n.offset);
      }
      throw Error(ErrorCode::Internal, "bad binary op");
    }
    case NodeKind::Call: {
      if (n.args.size() == 1) return Ops::fn1(n.name, eval_node(ops, *n.args[0], env), n.offset);
      return Ops::fn2(n.name, eval_node(ops, *n.args[0], env), eval_node(ops, *n.args[1], env),
                      n.offset);
    }
  }
  throw Error(ErrorCode::Internal, "bad node kind");
}

}  // namespace detail

inline double eval_real(const Expr& e, const std::map<std::string, double>& env) {
  check_bound(e, env);
  return detail::eval_node(detail::RealOps{}, e.node(), env);
}

/// Degree-2 Taylor evaluation. All env jets must share the same dimension k.
inline Jet2 eval_jet(const Expr& e, const std::map<std::string, Jet2>& env) {
  check_bound(e, env);
  if (env.empty()) throw Error(ErrorCode::Internal, "jet environment is empty");
  const int k = env.begin()->second.dim();
  for (const auto& [name, j] : env)
    if (j.dim() != k)
      throw Error(ErrorCode::Internal, "jet environment mixes dimensions at '" + name + "'");
  detail::JetCtx ctx{k};
  return detail::eval_node(detail::JetOps{ctx}, e.node(), env);
}

// --- Substitution and symbolic differentiation ------------------------------

/// Replace every variable listed in `subs` by its expression.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& subs) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Pi: return e;
    case NodeKind::Variable: {
      auto it = subs.find(n.name);
      return it == subs.end() ? e : it->second;
    }
    default: {
      Node copy = n;
      for (auto& a : copy.args)
        a = std::make_shared<Node>(substitute(Expr(a), subs).node());
      return Expr(std::make_shared<Node>(std::move(copy)));
    }
  }
}

/// Symbolic partial derivative d e / d v. Used internally to obtain exprs for
/// first derivatives of map components so jet evaluation can reach third
/// order where dilation jets need it.
inline Expr differentiate(const Expr& e, const std::string& v) {
  const Node& n = e.node();
  auto wrap = [](const NodePtr& p) { return Expr(p); };
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Pi: return num(0.0);
    case NodeKind::Variable: return num(n.name == v ? 1.0 : 0.0);
    case NodeKind::Neg: return neg(differentiate(wrap(n.args[0]), v));
    case NodeKind::Binary: {
      Expr a = wrap(n.args[0]), b = wrap(n.args[1]);
      Expr da = differentiate(a, v), db = differentiate(b, v);
      switch (n.op) {
        case '+': return add(da, db);
        case '-': return sub(da, db);
        case '*': return add(mul(da, b), mul(a, db));
        case '/': return divide(sub(mul(da, b), mul(a, db)), mul(b, b));
        case '^': {
          if (b.node().kind == NodeKind::Number) {
            const double c = b.node().number;
            return mul(mul(num(c), powx(a, num(c - 1.0))), da);
          }
          // a^b = exp(b log a)
          return mul(powx(a, b), add(mul(db, call("log", {a})), divide(mul(b, da), a)));
        }
      }
      throw Error(ErrorCode::Internal, "bad binary op");
    }
    case NodeKind::Call: {
      Expr u = wrap(n.args[0]);
      Expr du = differentiate(u, v);
      if (n.name == "sin") return mul(call("cos", {u}), du);
      if (n.name == "cos") return neg(mul(call("sin", {u}), du));
      if (n.name == "tan")
        return mul(add(num(1.0), powx(call("tan", {u}), num(2.0))), du);
      if (n.name == "tanh")
        return mul(sub(num(1.0), powx(call("tanh", {u}), num(2.0))), du);
      if (n.name == "exp") return mul(call("exp", {u}), du);
      if (n.name == "log") return divide(du, u);
      if (n.name == "sqrt") return divide(du, mul(num(2.0), call("sqrt", {u})));
      if (n.name == "abs") return mul(divide(u, call("abs", {u})), du);
      if (n.name == "pow") {
        Expr b = wrap(n.args[1]);
        return differentiate(powx(u, b), v);
      }
      if (n.name == "atan2") {
        Expr x = wrap(n.args[1]);
        Expr dx = differentiate(x, v);
        return divide(sub(mul(x, du), mul(u, dx)), add(mul(x, x), mul(u, u)));
      }
      throw Error(ErrorCode::DomainError, "'" + n.name + "' is not differentiable symbolically",
                  n.offset);
    }
  }
  throw Error(ErrorCode::Internal, "bad node kind");
}

}  // namespace fmorph
