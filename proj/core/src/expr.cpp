#include "viflow/expr.hpp"

#include <cmath>
#include <functional>


namespace viflow {

struct Expr::Node {
  enum class Op { Const, VarX, VarY, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt, Abs };
  Op op = Op::Const;
  double value = 0;
  std::shared_ptr<const Node> a, b;

  double eval(double x, double y) const {
    switch (op) {
      case Op::Const: return value;
      case Op::VarX: return x;
      case Op::VarY: return y;
      case Op::Add: return a->eval(x, y) + b->eval(x, y);
      case Op::Sub: return a->eval(x, y) - b->eval(x, y);
      case Op::Mul: return a->eval(x, y) * b->eval(x, y);
      case Op::Div: return a->eval(x, y) / b->eval(x, y);
      case Op::Pow: return std::pow(a->eval(x, y), b->eval(x, y));
      case Op::Neg: return -a->eval(x, y);
      case Op::Sin: return std::sin(a->eval(x, y));
      case Op::Cos: return std::cos(a->eval(x, y));
      case Op::Exp: return std::exp(a->eval(x, y));
      case Op::Sqrt: return std::sqrt(a->eval(x, y));
      case Op::Abs: return std::abs(a->eval(x, y));
    }
    return 0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& src) : s(src) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("expression '" + s + "': " + msg + " at position " + std::to_string(pos));
  }

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }

  NodePtr make(Expr::Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->value = v;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+'))
        n = make(Expr::Node::Op::Add, n, term());
      else if (eat('-'))
        n = make(Expr::Node::Op::Sub, n, term());
      else
        return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*'))
        n = make(Expr::Node::Op::Mul, n, unary());
      else if (eat('/'))
        n = make(Expr::Node::Op::Div, n, unary());
      else
        return n;
    }
  }

  // A leading sign binds looser than '^', so -x^2 is -(x^2).
  NodePtr unary() {
    if (eat('-')) return make(Expr::Node::Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Expr::Node::Op::Pow, base, unary());  // right associative
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos >= s.size()) fail("unexpected end");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s.substr(pos), &used);
      } catch (...) {
        fail("bad number");
      }
      pos += used;
      return make(Expr::Node::Op::Const, nullptr, nullptr, v);
    }
    if (c == '(') {
      ++pos;
      NodePtr n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
      std::string name = s.substr(start, pos - start);
      if (name == "x") return make(Expr::Node::Op::VarX);
      if (name == "y") return make(Expr::Node::Op::VarY);
      if (name == "pi") return make(Expr::Node::Op::Const, nullptr, nullptr, M_PI);
      if (name == "e") return make(Expr::Node::Op::Const, nullptr, nullptr, M_E);
      Expr::Node::Op op;
      if (name == "sin")
        op = Expr::Node::Op::Sin;
      else if (name == "cos")
        op = Expr::Node::Op::Cos;
      else if (name == "exp")
        op = Expr::Node::Op::Exp;
      else if (name == "sqrt")
        op = Expr::Node::Op::Sqrt;
      else if (name == "abs")
        op = Expr::Node::Op::Abs;
      else
        fail("unknown identifier '" + name + "'");
      if (!eat('(')) fail("expected '(' after function name");
      NodePtr arg = expr();
      if (!eat(')')) fail("missing ')'");
      return make(op, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Expr Expr::parse(const std::string& src) {
  Parser p(src);
  Expr e;
  e.node_ = p.expr();
  p.skip();
  if (p.pos != src.size()) p.fail("trailing input");
  e.src_ = src;
  return e;
}

double Expr::operator()(double x, double y) const {
  if (!node_) throw Error("evaluating empty expression");
  return node_->eval(x, y);
}

ScalarField Expr::field() const {
  Expr copy = *this;
  return [copy](const Vec2& p) { return copy(p.x(), p.y()); };
}

}  // namespace viflow
