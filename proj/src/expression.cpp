#include "mts/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mts {

enum class Op { constant, variable, neg, add, sub, mul, div, pow, func };
enum class Func { sin, cos, sinh, cosh, exp, log, sqrt };

struct Expression::Node {
  Op op = Op::constant;
  double value = 0.0;
  Variable var = Variable::x;
  Func func = Func::sin;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

NodePtr make_var(Variable v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::variable;
  n->var = v;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

double apply(Func f, double x) {
  switch (f) {
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::sinh: return std::sinh(x);
    case Func::cosh: return std::cosh(x);
    case Func::exp: return std::exp(x);
    case Func::log: return std::log(x);
    case Func::sqrt: return std::sqrt(x);
  }
  return 0.0;
}

const char* func_name(Func f) {
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::sinh: return "sinh";
    case Func::cosh: return "cosh";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
  }
  return "?";
}

double eval(const Expression::Node& n, double x, double y, double t) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return n.var == Variable::x ? x : (n.var == Variable::y ? y : t);
    case Op::neg: return -eval(*n.a, x, y, t);
    case Op::add: return eval(*n.a, x, y, t) + eval(*n.b, x, y, t);
    case Op::sub: return eval(*n.a, x, y, t) - eval(*n.b, x, y, t);
    case Op::mul: return eval(*n.a, x, y, t) * eval(*n.b, x, y, t);
    case Op::div: return eval(*n.a, x, y, t) / eval(*n.b, x, y, t);
    case Op::pow: return std::pow(eval(*n.a, x, y, t), eval(*n.b, x, y, t));
    case Op::func: return apply(n.func, eval(*n.a, x, y, t));
  }
  return 0.0;
}

// Builders with light constant folding so derivatives stay readable.
NodePtr binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::constant && b->op == Op::constant) {
    Expression::Node tmp;
    tmp.op = op;
    tmp.a = a;
    tmp.b = b;
    return make_const(eval(tmp, 0, 0, 0));
  }
  switch (op) {
    case Op::add:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0)) return a;
      break;
    case Op::mul:
      if (is_const(a, 0) || is_const(b, 0)) return make_const(0.0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      break;
    case Op::div:
      if (is_const(a, 0)) return make_const(0.0);
      if (is_const(b, 1)) return a;
      break;
    case Op::pow:
      if (is_const(b, 1)) return a;
      if (is_const(b, 0)) return make_const(1.0);
      break;
    default: break;
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr negate(NodePtr a) {
  if (a->op == Op::constant) return make_const(-a->value);
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::neg;
  n->a = std::move(a);
  return n;
}

NodePtr call(Func f, NodePtr a) {
  if (a->op == Op::constant) return make_const(apply(f, a->value));
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::func;
  n->func = f;
  n->a = std::move(a);
  return n;
}

NodePtr differentiate(const NodePtr& n, Variable v) {
  switch (n->op) {
    case Op::constant: return make_const(0.0);
    case Op::variable: return make_const(n->var == v ? 1.0 : 0.0);
    case Op::neg: return negate(differentiate(n->a, v));
    case Op::add: return binary(Op::add, differentiate(n->a, v), differentiate(n->b, v));
    case Op::sub: return binary(Op::sub, differentiate(n->a, v), differentiate(n->b, v));
    case Op::mul:
      return binary(Op::add, binary(Op::mul, differentiate(n->a, v), n->b),
                    binary(Op::mul, n->a, differentiate(n->b, v)));
    case Op::div: {
      auto num = binary(Op::sub, binary(Op::mul, differentiate(n->a, v), n->b),
                        binary(Op::mul, n->a, differentiate(n->b, v)));
      return binary(Op::div, num, binary(Op::mul, n->b, n->b));
    }
    case Op::pow: {
      auto da = differentiate(n->a, v);
      if (n->b->op == Op::constant) {
        double k = n->b->value;
        return binary(Op::mul, binary(Op::mul, make_const(k), binary(Op::pow, n->a, make_const(k - 1.0))), da);
      }
      // d(a^b) = a^b (b' ln a + b a'/a)
      auto db = differentiate(n->b, v);
      auto inner = binary(Op::add, binary(Op::mul, db, call(Func::log, n->a)),
                          binary(Op::div, binary(Op::mul, n->b, da), n->a));
      return binary(Op::mul, n, inner);
    }
    case Op::func: {
      auto da = differentiate(n->a, v);
      NodePtr outer;
      switch (n->func) {
        case Func::sin: outer = call(Func::cos, n->a); break;
        case Func::cos: outer = negate(call(Func::sin, n->a)); break;
        case Func::sinh: outer = call(Func::cosh, n->a); break;
        case Func::cosh: outer = call(Func::sinh, n->a); break;
        case Func::exp: outer = n; break;
        case Func::log: outer = binary(Op::div, make_const(1.0), n->a); break;
        case Func::sqrt: outer = binary(Op::div, make_const(0.5), n); break;
      }
      return binary(Op::mul, outer, da);
    }
  }
  return make_const(0.0);
}

bool depends(const NodePtr& n, Variable v) {
  if (!n) return false;
  if (n->op == Op::variable) return n->var == v;
  return depends(n->a, v) || depends(n->b, v);
}

void print(const NodePtr& n, std::ostringstream& out) {
  switch (n->op) {
    case Op::constant: out << n->value; return;
    case Op::variable: out << (n->var == Variable::x ? "x" : (n->var == Variable::y ? "y" : "t")); return;
    case Op::neg: out << "(-"; print(n->a, out); out << ")"; return;
    case Op::func: out << func_name(n->func) << "("; print(n->a, out); out << ")"; return;
    default: break;
  }
  const char* sym = n->op == Op::add ? "+" : n->op == Op::sub ? "-" : n->op == Op::mul ? "*" : n->op == Op::div ? "/" : "^";
  out << "(";
  print(n->a, out);
  out << sym;
  print(n->b, out);
  out << ")";
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression '" + std::string(text_) + "': " + what + " at column " + std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto n = term();
    while (true) {
      if (accept('+')) n = binary(Op::add, n, term());
      else if (accept('-')) n = binary(Op::sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    auto n = unary();
    while (true) {
      if (accept('*')) n = binary(Op::mul, n, unary());
      else if (accept('/')) n = binary(Op::div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return negate(unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return binary(Op::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    std::string token(text_.substr(start, pos_ - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      pos_ = start;
      fail("malformed number '" + token + "'");
    }
    return make_const(value);
  }

  NodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name == "x") return make_var(Variable::x);
    if (name == "y") return make_var(Variable::y);
    if (name == "t") return make_var(Variable::t);
    if (name == "pi") return make_const(std::numbers::pi);
    static const std::pair<const char*, Func> funcs[] = {{"sin", Func::sin},   {"cos", Func::cos}, {"sinh", Func::sinh},
                                                         {"cosh", Func::cosh}, {"exp", Func::exp}, {"log", Func::log},
                                                         {"sqrt", Func::sqrt}};
    for (const auto& [fname, f] : funcs) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after " + name);
        auto arg = expr();
        if (!accept(')')) fail("expected ')'");
        return call(f, arg);
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make_const(0.0)) {}
Expression::Expression(double value) : root_(make_const(value)) {}
Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expression Expression::parse(std::string_view text) { return Expression(Parser(text).parse()); }

double Expression::evaluate(double x, double y, double t) const { return eval(*root_, x, y, t); }

Expression Expression::derivative(Variable v) const { return Expression(differentiate(root_, v)); }

bool Expression::depends_on(Variable v) const { return depends(root_, v); }

bool Expression::is_constant() const { return root_->op == Op::constant; }

std::string Expression::to_string() const {
  std::ostringstream out;
  out.precision(17);
  print(root_, out);
  return out.str();
}

}  // namespace mts
