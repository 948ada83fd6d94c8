#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "archipelago/expr.hpp"

using namespace archipelago;

namespace {

double eval(const char* src, std::vector<double> x = {}) {
  return Expression::parse(src).eval(x);
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(eval("1+2*3") == 7.0);
  CHECK(eval("(1+2)*3") == 9.0);
  CHECK(eval("8/4/2") == 1.0);
  CHECK(eval("2-3-4") == -5.0);
  CHECK(eval("-2*3") == -6.0);
  CHECK(eval("--2") == 2.0);
  CHECK(eval("0.5 + .25") == 0.75);
}

TEST_CASE("feature references are 1-based") {
  CHECK(eval("x1*x2 + x3", {2.0, 3.0, -1.0}) == 5.0);
  CHECK(eval("x3", {0.0, 0.0, 42.0}) == 42.0);
  CHECK(Expression::parse("x3 + x1").max_feature() == 3);
  CHECK(Expression::parse("1 + 2").max_feature() == 0);
  CHECK_THROWS_AS(eval("x4", {1.0, 2.0}), DimensionError);
  CHECK_THROWS_AS(Expression::parse("x0"), ParameterError);
}

TEST_CASE("functions") {
  CHECK(eval("relu(-3)") == 0.0);
  CHECK(eval("relu(3)") == 3.0);
  CHECK(eval("abs(-2.5)") == 2.5);
  CHECK(eval("min(3, 1, 2)") == 1.0);
  CHECK(eval("max(3, 1, 2)") == 3.0);
  CHECK(eval("max(x1, 0) - max(-x1, 0)", {-4.0}) == -4.0);
  CHECK(eval("relu(x1+x3+1)+relu(x2)+1", {1.0, 1.0, 1.0}) == 5.0);
  CHECK(eval("relu(x1+x3+1)+relu(x2)+1", {-1.0, -1.0, -1.0}) == 1.0);
}

TEST_CASE("parse errors carry a position") {
  CHECK_THROWS_AS(Expression::parse(""), ParameterError);
  CHECK_THROWS_AS(Expression::parse("1 +"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("(1"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("1) "), ParameterError);
  CHECK_THROWS_AS(Expression::parse("foo(1)"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("relu(1, 2)"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("min(1)"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("x"), ParameterError);
}

TEST_CASE("source is retained") {
  const auto e = Expression::parse("x1 + 1");
  CHECK(e.source() == "x1 + 1");
}
