#include "archipelago/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <utility>
#include <variant>
#include <vector>

namespace archipelago {

namespace {

enum class Op { add, sub, mul, div, neg, relu, abs, min, max };

}  // namespace

struct Expression::Node {
  // Leaf payloads: constant value or 0-based feature index. Interior nodes
  // apply `op` to the children.
  std::variant<double, int, Op> what;
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  return std::make_shared<Expression::Node>(Expression::Node{v, {}});
}

NodePtr make_var(int index) {
  return std::make_shared<Expression::Node>(Expression::Node{index, {}});
}

NodePtr make_op(Op op, std::vector<NodePtr> children) {
  return std::make_shared<Expression::Node>(
      Expression::Node{op, std::move(children)});
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr run() {
    auto node = expression();
    skip_ws();
    if (pos_ != src_.size()) {
      fail("unexpected trailing input");
    }
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParameterError("expression error at position " + std::to_string(pos_) +
                         ": " + why);
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  // Operands are bound before the child vectors are formed: building them
  // inside a braced list would leak the left operand on a parse error under
  // GCC 11 (initializer_list elements are not unwound there).
  NodePtr expression() {
    auto node = term();
    while (true) {
      if (eat('+')) {
        auto rhs = term();
        node = make_op(Op::add, {std::move(node), std::move(rhs)});
      } else if (eat('-')) {
        auto rhs = term();
        node = make_op(Op::sub, {std::move(node), std::move(rhs)});
      } else {
        return node;
      }
    }
  }

  NodePtr term() {
    auto node = unary();
    while (true) {
      if (eat('*')) {
        auto rhs = unary();
        node = make_op(Op::mul, {std::move(node), std::move(rhs)});
      } else if (eat('/')) {
        auto rhs = unary();
        node = make_op(Op::div, {std::move(node), std::move(rhs)});
      } else {
        return node;
      }
    }
  }

  NodePtr unary() {
    if (eat('-')) {
      auto operand = unary();
      return make_op(Op::neg, {std::move(operand)});
    }
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) {
      fail("expected a value");
    }
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto node = expression();
      if (!eat(')')) fail("expected ')'");
      return node;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return identifier();
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) {
      fail("malformed number");
    }
    pos_ += static_cast<std::size_t>(end - begin);
    return make_const(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) {
          return std::isdigit(static_cast<unsigned char>(ch));
        })) {
      int index = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (index < 1) {
        fail("feature names start at x1");
      }
      return make_var(index - 1);
    }

    Op op;
    std::size_t min_args = 1, max_args = 1;
    if (name == "relu") {
      op = Op::relu;
    } else if (name == "abs") {
      op = Op::abs;
    } else if (name == "min") {
      op = Op::min;
      min_args = 2;
      max_args = 64;
    } else if (name == "max") {
      op = Op::max;
      min_args = 2;
      max_args = 64;
    } else {
      fail("unknown identifier '" + std::string(name) + "'");
    }

    if (!eat('(')) fail("expected '(' after function name");
    std::vector<NodePtr> args;
    args.push_back(expression());
    while (eat(',')) {
      args.push_back(expression());
    }
    if (!eat(')')) fail("expected ')'");
    if (args.size() < min_args || args.size() > max_args) {
      fail("wrong argument count for '" + std::string(name) + "'");
    }
    return make_op(op, std::move(args));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double eval_node(const Expression::Node& node, std::span<const double> x) {
  if (std::holds_alternative<double>(node.what)) {
    return std::get<double>(node.what);
  }
  if (std::holds_alternative<int>(node.what)) {
    const int index = std::get<int>(node.what);
    if (index >= static_cast<int>(x.size())) {
      throw DimensionError("expression references x" + std::to_string(index + 1) +
                           " but only " + std::to_string(x.size()) +
                           " features were provided");
    }
    return x[static_cast<std::size_t>(index)];
  }
  const Op op = std::get<Op>(node.what);
  auto arg = [&](std::size_t k) { return eval_node(*node.children[k], x); };
  switch (op) {
    case Op::add: return arg(0) + arg(1);
    case Op::sub: return arg(0) - arg(1);
    case Op::mul: return arg(0) * arg(1);
    case Op::div: return arg(0) / arg(1);
    case Op::neg: return -arg(0);
    case Op::relu: return std::max(0.0, arg(0));
    case Op::abs: return std::abs(arg(0));
    case Op::min: {
      double v = arg(0);
      for (std::size_t k = 1; k < node.children.size(); ++k) v = std::min(v, arg(k));
      return v;
    }
    case Op::max: {
      double v = arg(0);
      for (std::size_t k = 1; k < node.children.size(); ++k) v = std::max(v, arg(k));
      return v;
    }
  }
  return 0.0;
}

int max_feature_of(const Expression::Node& node) {
  int best = std::holds_alternative<int>(node.what) ? std::get<int>(node.what) + 1 : 0;
  for (const auto& child : node.children) {
    best = std::max(best, max_feature_of(*child));
  }
  return best;
}

}  // namespace

Expression Expression::parse(std::string_view source) {
  Expression e;
  e.root_ = Parser(source).run();
  e.max_feature_ = max_feature_of(*e.root_);
  e.source_ = std::string(source);
  return e;
}

double Expression::eval(std::span<const double> x) const {
  return eval_node(*root_, x);
}

}  // namespace archipelago
