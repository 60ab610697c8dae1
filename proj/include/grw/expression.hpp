#pragma once

// Closed-form height expressions.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'pi' | 'x' | 'y' | 'z' | func '(' expr ')' | '(' expr ')'
//   func    := 'sin' | 'cos' | 'exp' | 'sqrt'
//
// x, y, z name fiber coordinates 0, 1, 2 (theta/phi on sphere bands, r/phi on
// hyperbolic patches). Expressions compile to a postfix program.

#include <cctype>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "grw/errors.hpp"

namespace grw {

class Expression {
 public:
  static Expression parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    Parser p{text, 0, e.program_};
    p.skip();
    if (p.pos == text.size()) p.fail("empty expression");
    p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    return e;
  }

  /// Evaluate at coordinates (missing coordinates read as 0).
  template <class V>
  double operator()(const V& x) const {
    double stack[64];
    int top = 0;
    for (const auto& ins : program_) {
      switch (ins.op) {
        case Op::Const: stack[top++] = ins.value; break;
        case Op::Var: stack[top++] = ins.var < x.size() ? x[ins.var] : 0.0; break;
        case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
        case Op::Add: --top; stack[top - 1] += stack[top]; break;
        case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::Div: --top; stack[top - 1] /= stack[top]; break;
        case Op::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
        case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
        case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
        case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
        case Op::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
      }
    }
    return stack[0];
  }

  const std::string& text() const { return text_; }

 private:
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt };
  struct Instr {
    Op op;
    double value = 0.0;
    int var = 0;
  };

  struct Parser {
    const std::string& s;
    std::size_t pos;
    std::vector<Instr>& out;
    int depth = 0;

    [[noreturn]] void fail(const std::string& why) const {
      throw Error(ErrorKind::ParseError, "expression column " + std::to_string(pos + 1) + ": " + why);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    void expr() {
      if (++depth > 24) fail("expression nested too deeply");
      term();
      for (;;) {
        if (accept('+')) term(), out.push_back({Op::Add});
        else if (accept('-')) term(), out.push_back({Op::Sub});
        else break;
      }
      --depth;
    }
    void term() {
      unary();
      for (;;) {
        if (accept('*')) unary(), out.push_back({Op::Mul});
        else if (accept('/')) unary(), out.push_back({Op::Div});
        else break;
      }
    }
    void unary() {
      if (++depth > 24) fail("expression nested too deeply");
      if (accept('-')) {
        unary();
        out.push_back({Op::Neg});
      } else if (accept('+')) {
        unary();
      } else {
        power();
      }
      --depth;
    }
    void power() {
      primary();
      if (accept('^')) {
        unary();
        out.push_back({Op::Pow});
      }
    }
    void primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        out.push_back({Op::Const, v});
        return;
      }
      if (accept('(')) {
        expr();
        expect(')');
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "x" || id == "y" || id == "z") {
          out.push_back({Op::Var, 0.0, id[0] - 'x'});
          return;
        }
        if (id == "pi") {
          out.push_back({Op::Const, std::numbers::pi});
          return;
        }
        Op f;
        if (id == "sin") f = Op::Sin;
        else if (id == "cos") f = Op::Cos;
        else if (id == "exp") f = Op::Exp;
        else if (id == "sqrt") f = Op::Sqrt;
        else {
          pos = start;
          fail("unknown identifier '" + id + "'");
        }
        expect('(');
        expr();
        expect(')');
        out.push_back({f});
        return;
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  std::string text_;
  std::vector<Instr> program_;
};

}  // namespace grw
