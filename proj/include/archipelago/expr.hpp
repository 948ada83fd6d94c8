#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "archipelago/errors.hpp"

namespace archipelago {

// Arithmetic expressions over features x1..xp (1-based in the source text):
// numbers, + - * /, unary minus, parentheses, and the functions relu, abs
// (one argument) and min, max (two or more arguments).
class Expression {
 public:
  static Expression parse(std::string_view source);

  double eval(std::span<const double> x) const;
  // Highest feature referenced, as a count: "x3 + x1" -> 3.
  int max_feature() const { return max_feature_; }
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  int max_feature_ = 0;
  std::string source_;
};

}  // namespace archipelago
