#pragma once

// Closed-form coefficient fields.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'y' | 'pi' | 'e' | fn '(' expr ')' | '(' expr ')'
//   fn      := 'sin' | 'cos' | 'exp'
//
// Anything else is a SpecError.  Expressions can be differentiated symbolically,
// which is how div b enters the positivity condition.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

#include "fracorder/errors.hpp"

namespace fracorder {

class Expression {
 public:
  enum class Op { Const, X, Y, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

  /// Constant zero.
  Expression() : Expression(constant(0.0)) {}

  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    NodePtr root = p.expr();
    p.skip_space();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    return Expression(std::move(root), std::string(text));
  }

  static Expression constant(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return Expression(make_const(v), os.str());
  }

  double operator()(double x, double y = 0.0) const { return eval(*root_, x, y); }

  /// d/dx (axis 0) or d/dy (axis 1).
  Expression derivative(int axis) const {
    if (axis != 0 && axis != 1) throw Error(ErrorKind::DomainError, "derivative axis must be 0 or 1");
    const std::string name = axis == 0 ? "x" : "y";
    return Expression(diff(root_, axis == 0 ? Op::X : Op::Y), "d/d" + name + "(" + text_ + ")");
  }

  bool is_constant() const { return root_->op == Op::Const; }
  bool depends_on(int axis) const { return uses(*root_, axis == 0 ? Op::X : Op::Y); }
  const std::string& text() const noexcept { return text_; }

 private:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  struct Node {
    Op op;
    double value = 0.0;
    NodePtr lhs;
    NodePtr rhs;
  };

  Expression(NodePtr root, std::string text) : root_(std::move(root)), text_(std::move(text)) {}

  static NodePtr make_const(double v) { return std::make_shared<const Node>(Node{Op::Const, v, nullptr, nullptr}); }

  static NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
    const bool ca = a && a->op == Op::Const;
    const bool cb = b && b->op == Op::Const;
    // Constant folding and the identities that keep derivatives small.
    switch (op) {
      case Op::Add:
        if (ca && cb) return make_const(a->value + b->value);
        if (ca && a->value == 0.0) return b;
        if (cb && b->value == 0.0) return a;
        break;
      case Op::Sub:
        if (ca && cb) return make_const(a->value - b->value);
        if (cb && b->value == 0.0) return a;
        if (ca && a->value == 0.0) return make(Op::Neg, b);
        break;
      case Op::Mul:
        if (ca && cb) return make_const(a->value * b->value);
        if ((ca && a->value == 0.0) || (cb && b->value == 0.0)) return make_const(0.0);
        if (ca && a->value == 1.0) return b;
        if (cb && b->value == 1.0) return a;
        break;
      case Op::Div:
        if (ca && cb) return make_const(a->value / b->value);
        if (ca && a->value == 0.0) return make_const(0.0);
        if (cb && b->value == 1.0) return a;
        break;
      case Op::Pow:
        if (ca && cb) return make_const(std::pow(a->value, b->value));
        if (cb && b->value == 1.0) return a;
        if (cb && b->value == 0.0) return make_const(1.0);
        break;
      case Op::Neg:
        if (ca) return make_const(-a->value);
        break;
      case Op::Sin:
        if (ca) return make_const(std::sin(a->value));
        break;
      case Op::Cos:
        if (ca) return make_const(std::cos(a->value));
        break;
      case Op::Exp:
        if (ca) return make_const(std::exp(a->value));
        break;
      default:
        break;
    }
    return std::make_shared<const Node>(Node{op, 0.0, std::move(a), std::move(b)});
  }

  static double eval(const Node& n, double x, double y) {
    switch (n.op) {
      case Op::Const: return n.value;
      case Op::X: return x;
      case Op::Y: return y;
      case Op::Add: return eval(*n.lhs, x, y) + eval(*n.rhs, x, y);
      case Op::Sub: return eval(*n.lhs, x, y) - eval(*n.rhs, x, y);
      case Op::Mul: return eval(*n.lhs, x, y) * eval(*n.rhs, x, y);
      case Op::Div: return eval(*n.lhs, x, y) / eval(*n.rhs, x, y);
      case Op::Pow: return std::pow(eval(*n.lhs, x, y), eval(*n.rhs, x, y));
      case Op::Neg: return -eval(*n.lhs, x, y);
      case Op::Sin: return std::sin(eval(*n.lhs, x, y));
      case Op::Cos: return std::cos(eval(*n.lhs, x, y));
      case Op::Exp: return std::exp(eval(*n.lhs, x, y));
    }
    return 0.0;
  }

  static bool uses(const Node& n, Op var) {
    if (n.op == var) return true;
    return (n.lhs && uses(*n.lhs, var)) || (n.rhs && uses(*n.rhs, var));
  }

  static NodePtr diff(const NodePtr& n, Op var) {
    switch (n->op) {
      case Op::Const: return make_const(0.0);
      case Op::X:
      case Op::Y: return make_const(n->op == var ? 1.0 : 0.0);
      case Op::Add: return make(Op::Add, diff(n->lhs, var), diff(n->rhs, var));
      case Op::Sub: return make(Op::Sub, diff(n->lhs, var), diff(n->rhs, var));
      case Op::Neg: return make(Op::Neg, diff(n->lhs, var));
      case Op::Mul:
        return make(Op::Add, make(Op::Mul, diff(n->lhs, var), n->rhs), make(Op::Mul, n->lhs, diff(n->rhs, var)));
      case Op::Div:
        return make(Op::Div,
                    make(Op::Sub, make(Op::Mul, diff(n->lhs, var), n->rhs), make(Op::Mul, n->lhs, diff(n->rhs, var))),
                    make(Op::Mul, n->rhs, n->rhs));
      case Op::Pow: {
        const NodePtr& f = n->lhs;
        const NodePtr& g = n->rhs;
        if (!uses(*g, var)) {
          // g f^(g-1) f'
          return make(Op::Mul, make(Op::Mul, g, make(Op::Pow, f, make(Op::Sub, g, make_const(1.0)))), diff(f, var));
        }
        // Variable exponent: the language has no log, so only c^g with constant c > 0.
        if (f->op != Op::Const || !(f->value > 0.0))
          throw Error(ErrorKind::SpecError, "cannot differentiate a power with variable base and exponent");
        return make(Op::Mul, make(Op::Mul, n, make_const(std::log(f->value))), diff(g, var));
      }
      case Op::Sin: return make(Op::Mul, make(Op::Cos, n->lhs), diff(n->lhs, var));
      case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, n->lhs), diff(n->lhs, var)));
      case Op::Exp: return make(Op::Mul, n, diff(n->lhs, var));
    }
    return make_const(0.0);
  }

  struct Parser {
    std::string_view s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      std::ostringstream os;
      os << "expression \"" << s << "\": " << what << " at offset " << pos;
      throw Error(ErrorKind::SpecError, os.str());
    }

    void skip_space() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool accept(char c) {
      skip_space();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    NodePtr expr() {
      NodePtr lhs = term();
      for (;;) {
        if (accept('+')) lhs = make(Op::Add, lhs, term());
        else if (accept('-')) lhs = make(Op::Sub, lhs, term());
        else return lhs;
      }
    }

    NodePtr term() {
      NodePtr lhs = unary();
      for (;;) {
        if (accept('*')) lhs = make(Op::Mul, lhs, unary());
        else if (accept('/')) lhs = make(Op::Div, lhs, unary());
        else return lhs;
      }
    }

    NodePtr unary() {
      if (accept('-')) return make(Op::Neg, unary());
      if (accept('+')) return unary();
      return power();
    }

    NodePtr power() {
      NodePtr base = primary();
      if (accept('^')) return make(Op::Pow, base, unary());
      return base;
    }

    NodePtr primary() {
      skip_space();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        NodePtr inner = expr();
        if (!accept(')')) fail("expected ')'");
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string_view name = s.substr(start, pos - start);
        if (name == "x") return std::make_shared<const Node>(Node{Op::X, 0.0, nullptr, nullptr});
        if (name == "y") return std::make_shared<const Node>(Node{Op::Y, 0.0, nullptr, nullptr});
        if (name == "pi") return make_const(std::numbers::pi);
        if (name == "e") return make_const(std::numbers::e);
        Op fn;
        if (name == "sin") fn = Op::Sin;
        else if (name == "cos") fn = Op::Cos;
        else if (name == "exp") fn = Op::Exp;
        else {
          pos = start;
          fail("unknown identifier '" + std::string(name) + "'");
        }
        if (!accept('(')) fail("expected '(' after " + std::string(name));
        NodePtr arg = expr();
        if (!accept(')')) fail("expected ')'");
        return make(fn, arg);
      }
      fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
      const std::size_t start = pos;
      while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
      if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        std::size_t q = pos + 1;
        if (q < s.size() && (s[q] == '+' || s[q] == '-')) ++q;
        if (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q]))) {
          pos = q;
          while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
      }
      const std::string token(s.substr(start, pos - start));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        pos = start;
        fail("malformed number '" + token + "'");
      }
      if (used != token.size()) {
        pos = start;
        fail("malformed number '" + token + "'");
      }
      return make_const(v);
    }
  };

  NodePtr root_;
  std::string text_;
};

}  // namespace fracorder
