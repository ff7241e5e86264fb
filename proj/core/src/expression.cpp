#include "ringmod/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "ringmod/error.hpp"

namespace ringmod {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const std::vector<std::string>& variables, Expression& out)
      : text_(text), variables_(variables), out_(out) {}

  void run() {
    parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    if (out_.code_.empty()) fail("empty expression");
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Op op, double value = 0.0, int index = 0) {
    out_.code_.push_back({op, value, index});
    switch (op) {
      case Op::kConst:
      case Op::kVar:
        ++depth_;
        break;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv:
      case Op::kPow:
        --depth_;
        break;
      default:
        break;
    }
    out_.max_depth_ = std::max(out_.max_depth_, depth_);
  }

  void parse_expr() {
    parse_term();
    for (;;) {
      if (accept('+')) {
        parse_term();
        emit(Op::kAdd);
      } else if (accept('-')) {
        parse_term();
        emit(Op::kSub);
      } else {
        return;
      }
    }
  }

  void parse_term() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::kMul);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::kDiv);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::kNeg);
      return;
    }
    if (accept('+')) {
      parse_unary();
      return;
    }
    parse_power();
  }

  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();
      emit(Op::kPow);
    }
  }

  void parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      parse_expr();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      parse_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(text_.substr(start, pos_ - start));
      parse_name(name, start);
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string literal(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double value = std::strtod(literal.c_str(), &end);
    if (end != literal.c_str() + literal.size()) {
      pos_ = start;
      fail("malformed number '" + literal + "'");
    }
    emit(Op::kConst, value);
  }

  void parse_name(const std::string& name, std::size_t start) {
    static constexpr struct {
      const char* name;
      Op op;
    } kFunctions[] = {{"log", Op::kLog}, {"exp", Op::kExp}, {"sqrt", Op::kSqrt}, {"abs", Op::kAbs}};
    for (const auto& f : kFunctions) {
      if (name == f.name) {
        if (!accept('(')) fail("expected '(' after function " + name);
        parse_expr();
        if (!accept(')')) fail("expected ')' closing " + name);
        emit(f.op);
        return;
      }
    }
    const auto it = std::find(variables_.begin(), variables_.end(), name);
    if (it != variables_.end()) {
      emit(Op::kVar, 0.0, static_cast<int>(it - variables_.begin()));
      return;
    }
    if (name == "pi") {
      emit(Op::kConst, std::numbers::pi);
      return;
    }
    if (name == "e") {
      emit(Op::kConst, std::numbers::e);
      return;
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& variables_;
  Expression& out_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

Expression Expression::parse(std::string_view text, std::vector<std::string> variables) {
  Expression e;
  e.text_ = std::string(text);
  e.variables_ = std::move(variables);
  ExpressionParser(e.text_, e.variables_, e).run();
  return e;
}

Expression Expression::parse_chart(std::string_view text, int dim) {
  std::vector<std::string> names;
  for (int i = 1; i <= dim; ++i) names.push_back("x" + std::to_string(i));
  return parse(text, std::move(names));
}

double Expression::evaluate(std::span<const double> values) const {
  // Small fixed stack covers every realistic expression; fall back to heap otherwise.
  double local[32] = {};
  std::vector<double> heap;
  double* stack = local;
  if (max_depth_ > 32) {
    heap.resize(static_cast<std::size_t>(max_depth_));
    stack = heap.data();
  }
  int top = -1;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::kConst:
        stack[++top] = in.value;
        break;
      case Op::kVar:
        stack[++top] = values[static_cast<std::size_t>(in.index)];
        break;
      case Op::kAdd:
        stack[top - 1] += stack[top];
        --top;
        break;
      case Op::kSub:
        stack[top - 1] -= stack[top];
        --top;
        break;
      case Op::kMul:
        stack[top - 1] *= stack[top];
        --top;
        break;
      case Op::kDiv:
        stack[top - 1] /= stack[top];
        --top;
        break;
      case Op::kPow:
        stack[top - 1] = std::pow(stack[top - 1], stack[top]);
        --top;
        break;
      case Op::kNeg:
        stack[top] = -stack[top];
        break;
      case Op::kLog:
        stack[top] = std::log(stack[top]);
        break;
      case Op::kExp:
        stack[top] = std::exp(stack[top]);
        break;
      case Op::kSqrt:
        stack[top] = std::sqrt(stack[top]);
        break;
      case Op::kAbs:
        stack[top] = std::abs(stack[top]);
        break;
    }
  }
  return stack[0];
}

}  // namespace ringmod
