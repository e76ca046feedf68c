#include <doctest.h>

#include <cmath>
#include <random>

#include "supergeo/error.hpp"
#include "supergeo/scalar_expr.hpp"

using namespace supergeo;

TEST_CASE("parse and evaluate") {
  const std::vector<double> x = {0.5, -2.0};
  CHECK(eval(parse_expr("1 + 2*x1 - x2^2", 2), x) == doctest::Approx(-2.0));
  CHECK(eval(parse_expr("-x1^2", 2), x) == doctest::Approx(-0.25));
  CHECK(eval(parse_expr("2^3^2", 2), x) == doctest::Approx(512.0));
  CHECK(eval(parse_expr("sin(x1)*cos(x2) + exp(x1) / sqrt(4)", 2), x) ==
        doctest::Approx(std::sin(0.5) * std::cos(-2.0) + std::exp(0.5) / 2.0));
  CHECK(eval(parse_expr("log(1 + x1) - 1e-3", 2), x) ==
        doctest::Approx(std::log(1.5) - 1e-3));
  CHECK(eval(parse_expr("x1 - x2 - 1", 2), x) == doctest::Approx(1.5));
  CHECK(eval(parse_expr("8 / x2 / 2", 2), x) == doctest::Approx(-2.0));
}

TEST_CASE("parse errors carry a position") {
  CHECK_THROWS_AS(parse_expr("x3", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("x0", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("1 +", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("tan(x1)", 2), ParseError);
  CHECK_THROWS_AS(parse_expr("(x1", 2), ParseError);
  try {
    parse_expr("x1 + * 2", 2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
}

TEST_CASE("evaluation domain errors name the term") {
  const std::vector<double> x = {-1.0};
  CHECK_THROWS_AS(eval(parse_expr("log(x1)", 1), x), EvalError);
  CHECK_THROWS_AS(eval(parse_expr("sqrt(x1)", 1), x), EvalError);
  CHECK_THROWS_AS(eval(parse_expr("1/(1 + x1)", 1), x), EvalError);
  try {
    eval(parse_expr("2 + log(x1)", 1), x);
  } catch (const EvalError& e) {
    CHECK(e.subexpression() == "log(x1)");
  }
  CHECK_THROWS_AS(eval(parse_expr("x2", 2), x), DimensionError);
}

TEST_CASE("render round trip is structural") {
  for (const char* text : {"1 + 2*x1 - x2^2", "-(x1 - x2)", "x1/(x2*x1)", "sin(x1)^3",
                           "2 - (3 - x1)", "exp(-x2)*0.125", "(x1^2)^2", "-x1^2"}) {
    const Expr e = parse_expr(text, 2);
    CHECK(parse_expr(render(e), 2) == e);
  }
}

TEST_CASE("builders simplify identities") {
  const Expr x = variable(1);
  CHECK((x + constant(0)) == x);
  CHECK((constant(1) * x) == x);
  CHECK((constant(0) * x).is_zero());
  CHECK((constant(2) + constant(3)).is_constant(5.0));
  CHECK(pow(x, 0).is_constant(1.0));
  CHECK(pow(x, 1) == x);
}

TEST_CASE("derivatives agree with central differences") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (const char* text :
       {"x1^3*x2 - 2*x2", "sin(x1*x2) + cos(x2)^2", "exp(x1)/(2 + x2^2)",
        "sqrt(3 + x1) * log(2 + x2)", "(1 + x1*x2)^4 - x1/(3 - x2)"}) {
    const Expr e = parse_expr(text, 2);
    for (int i = 1; i <= 2; ++i) {
      const Expr d = diff(e, i);
      for (int k = 0; k < 10; ++k) {
        std::vector<double> x = {u(rng), u(rng)};
        std::vector<double> xp = x;
        std::vector<double> xm = x;
        const double h = 1e-5;
        xp[i - 1] += h;
        xm[i - 1] -= h;
        const double fd = (eval(e, xp) - eval(e, xm)) / (2 * h);
        CHECK(eval(d, x) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
  }
  CHECK(diff(parse_expr("x1^2", 2), 2).is_zero());
}
