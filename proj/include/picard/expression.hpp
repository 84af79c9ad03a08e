#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "picard/errors.hpp"
#include "picard/functional.hpp"

namespace picard {

/// Compiled arithmetic expression over t, x (= x(t)), y (= y(t)) and
/// supy (= sup_{s<=t} |y(s)|).
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | 't' | 'pi' | 'x' ['(' 't' ')'] | 'y' ['(' 't' ')'] | 'supy'
///            | func '(' expr [',' expr] ')' | '(' expr ')'
///   func    := sin cos tan exp log sqrt abs tanh min max
class Expression {
 public:
  struct Vars {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double supy = 0.0;
  };

  [[nodiscard]] static Expression parse(std::string_view text) {
    Parser p{text};
    Expression e;
    p.out = &e.code_;
    p.skip();
    p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    e.source_ = std::string(text);
    return e;
  }

  [[nodiscard]] double evaluate(const Vars& v) const {
    // Stack depth is bounded by the code length.
    double stack[64] = {};
    std::vector<double> heap;
    double* s = stack;
    if (code_.size() > 64) {
      heap.resize(code_.size());
      s = heap.data();
    }
    std::size_t top = 0;
    for (const Op& op : code_) {
      switch (op.code) {
        case Code::Const: s[top++] = op.value; break;
        case Code::T: s[top++] = v.t; break;
        case Code::X: s[top++] = v.x; break;
        case Code::Y: s[top++] = v.y; break;
        case Code::SupY: s[top++] = v.supy; break;
        case Code::Neg: s[top - 1] = -s[top - 1]; break;
        case Code::Add: --top; s[top - 1] += s[top]; break;
        case Code::Sub: --top; s[top - 1] -= s[top]; break;
        case Code::Mul: --top; s[top - 1] *= s[top]; break;
        case Code::Div: --top; s[top - 1] /= s[top]; break;
        case Code::Pow: --top; s[top - 1] = std::pow(s[top - 1], s[top]); break;
        case Code::Min: --top; s[top - 1] = std::min(s[top - 1], s[top]); break;
        case Code::Max: --top; s[top - 1] = std::max(s[top - 1], s[top]); break;
        case Code::Sin: s[top - 1] = std::sin(s[top - 1]); break;
        case Code::Cos: s[top - 1] = std::cos(s[top - 1]); break;
        case Code::Tan: s[top - 1] = std::tan(s[top - 1]); break;
        case Code::Exp: s[top - 1] = std::exp(s[top - 1]); break;
        case Code::Log: s[top - 1] = std::log(s[top - 1]); break;
        case Code::Sqrt: s[top - 1] = std::sqrt(s[top - 1]); break;
        case Code::Abs: s[top - 1] = std::abs(s[top - 1]); break;
        case Code::Tanh: s[top - 1] = std::tanh(s[top - 1]); break;
      }
    }
    return s[0];
  }

  [[nodiscard]] const std::string& source() const noexcept { return source_; }

 private:
  enum class Code {
    Const, T, X, Y, SupY, Neg, Add, Sub, Mul, Div, Pow, Min, Max,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh
  };
  struct Op {
    Code code;
    double value = 0.0;
  };

  struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    std::vector<Op>* out = nullptr;

    [[noreturn]] void fail(const std::string& why) const {
      throw ConfigError("drift expression, column " + std::to_string(pos + 1) + ": " + why, "drift");
    }
    void skip() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!eat(c)) fail(std::string("expected '") + c + "'");
    }
    void emit(Code c, double v = 0.0) { out->push_back({c, v}); }

    void expr() {
      term();
      for (;;) {
        if (eat('+')) {
          term();
          emit(Code::Add);
        } else if (eat('-')) {
          term();
          emit(Code::Sub);
        } else {
          return;
        }
      }
    }
    void term() {
      unary();
      for (;;) {
        if (eat('*')) {
          unary();
          emit(Code::Mul);
        } else if (eat('/')) {
          unary();
          emit(Code::Div);
        } else {
          return;
        }
      }
    }
    void unary() {
      if (eat('-')) {
        unary();
        emit(Code::Neg);
        return;
      }
      if (eat('+')) {
        unary();
        return;
      }
      primary();
      if (eat('^')) {
        unary();
        emit(Code::Pow);
      }
    }
    void primary() {
      skip();
      if (pos >= src.size()) fail("unexpected end of expression");
      const char c = src[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        number();
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        identifier();
        return;
      }
      if (eat('(')) {
        expr();
        expect(')');
        return;
      }
      fail(std::string("unexpected '") + c + "'");
    }
    void number() {
      const std::size_t start = pos;
      while (pos < src.size() && (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.')) ++pos;
      if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
        ++pos;
        if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      }
      const std::string token(src.substr(start, pos - start));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) fail("malformed number '" + token + "'");
      emit(Code::Const, v);
    }
    void identifier() {
      const std::size_t start = pos;
      while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) ++pos;
      const std::string name(src.substr(start, pos - start));

      if (name == "t") return emit(Code::T);
      if (name == "pi") return emit(Code::Const, std::numbers::pi);
      if (name == "supy" || name == "sup_y") return emit(Code::SupY);
      if (name == "x" || name == "y") {
        // Optional "(t)" suffix: x(t), y(t).
        const std::size_t save = pos;
        if (eat('(')) {
          skip();
          if (pos < src.size() && src[pos] == 't') {
            ++pos;
            expect(')');
          } else {
            pos = save;
            fail("only " + name + "(t) is allowed; paths are read at the current time");
          }
        }
        return emit(name == "x" ? Code::X : Code::Y);
      }

      static constexpr std::pair<std::string_view, Code> kUnary[] = {
          {"sin", Code::Sin}, {"cos", Code::Cos},   {"tan", Code::Tan}, {"exp", Code::Exp},
          {"log", Code::Log}, {"sqrt", Code::Sqrt}, {"abs", Code::Abs}, {"tanh", Code::Tanh}};
      for (const auto& [fname, code] : kUnary) {
        if (name == fname) {
          expect('(');
          expr();
          expect(')');
          return emit(code);
        }
      }
      if (name == "min" || name == "max") {
        expect('(');
        expr();
        expect(',');
        expr();
        expect(')');
        return emit(name == "min" ? Code::Min : Code::Max);
      }
      pos = start;
      fail("unknown identifier '" + name + "'");
    }
  };

  std::vector<Op> code_;
  std::string source_;
};

namespace detail {

class ExpressionKernel final : public DriftKernel {
 public:
  explicit ExpressionKernel(Expression e) : expr_(std::move(e)) {}

  [[nodiscard]] std::unique_ptr<DriftCursor> open(const TimeGrid& grid) const override {
    return std::make_unique<Cursor>(expr_, grid);
  }

 private:
  class Cursor final : public DriftCursor {
   public:
    Cursor(const Expression& e, const TimeGrid& grid) : expr_(e), grid_(grid) {}
    void reset() override { supy_ = 0.0; }
    double next(std::size_t i, std::span<const double> x, std::span<const double> y) override {
      supy_ = std::max(supy_, std::abs(y[i]));
      return expr_.evaluate({grid_.time(i), x.empty() ? 0.0 : x[i], y[i], supy_});
    }

   private:
    const Expression& expr_;
    TimeGrid grid_;
    double supy_ = 0.0;
  };

  Expression expr_;
};

}  // namespace detail

/// Drift defined by an inline expression with user-declared constants.
[[nodiscard]] inline DriftFunctional expression_drift(std::string_view text, Constants constants) {
  Expression e = Expression::parse(text);
  std::string label = e.source();
  return {std::make_shared<detail::ExpressionKernel>(std::move(e)), constants, std::move(label)};
}

}  // namespace picard
