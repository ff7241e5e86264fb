#pragma once

// Minimal arithmetic expressions for metric, Q-field and mapping descriptors.
//
// Grammar (whitespace insignificant):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?            right associative
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//   func    := log | exp | sqrt | abs
//   name    := a declared variable (x1 .. xn by default) | pi | e
//
// `-x^2` parses as `-(x^2)`; `2^-1` is accepted. Evaluation follows IEEE
// semantics, so `1/0` yields +inf and `log(0)` yields -inf.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ringmod {

class Expression {
 public:
  /// Parses `text` over the given variable names. Throws ParseError.
  static Expression parse(std::string_view text, std::vector<std::string> variables);

  /// Convenience: variables x1 .. x`dim`.
  static Expression parse_chart(std::string_view text, int dim);

  double evaluate(std::span<const double> values) const;

  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& variables() const noexcept { return variables_; }

 private:
  enum class Op : unsigned char { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kLog, kExp, kSqrt, kAbs };
  struct Instr {
    Op op;
    double value = 0.0;
    int index = 0;
  };

  friend class ExpressionParser;

  std::string text_;
  std::vector<std::string> variables_;
  std::vector<Instr> code_;  // postfix
  int max_depth_ = 0;
};

}  // namespace ringmod
