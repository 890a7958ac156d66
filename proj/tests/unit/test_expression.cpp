#include "mts/expression.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mts;

namespace {

double eval(const char* text, double x = 0.0, double y = 0.0, double t = 0.0) {
  return Expression::parse(text).evaluate(x, y, t);
}

}  // namespace

TEST_CASE("expression: arithmetic and precedence") {
  CHECK(eval("1 + 2 * 3") == 7.0);
  CHECK(eval("(1 + 2) * 3") == 9.0);
  CHECK(eval("2 ^ 3 ^ 2") == 512.0);
  CHECK(eval("-2 ^ 2") == -4.0);
  CHECK(eval("8 / 4 / 2") == 1.0);
  CHECK(eval("1 - 2 - 3") == -4.0);
  CHECK(eval("1.5e2") == 150.0);
  CHECK(eval("x * y + t", 2.0, 3.0, 4.0) == 10.0);
  CHECK(eval("pi") == doctest::Approx(std::numbers::pi));
}

TEST_CASE("expression: functions") {
  CHECK(eval("sin(pi / 2)") == doctest::Approx(1.0));
  CHECK(eval("cos(0)") == 1.0);
  CHECK(eval("cosh(0) + sinh(0)") == 1.0);
  CHECK(eval("exp(1)") == doctest::Approx(std::exp(1.0)));
  CHECK(eval("log(exp(2))") == doctest::Approx(2.0));
  CHECK(eval("sqrt(16)") == 4.0);
}

TEST_CASE("expression: syntax errors") {
  for (const char* bad : {"", "1 +", "(1", "sin 1", "foo(1)", "1 2", "x $ y", "z"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(Expression::parse(bad), ParseError);
  }
}

TEST_CASE("expression: symbolic derivatives agree with central differences") {
  const char* cases[] = {"x^3 * y - 2 * x", "sin(pi * x) * exp(-t)", "cosh(2 * y) / (1 + x^2)",
                         "-y - 0.08 * cos(4 * pi * x / 4 - pi / 2) * sin(pi * y)", "sqrt(1 + x * x) * log(2 + y)"};
  const double h = 1e-6;
  for (const char* text : cases) {
    CAPTURE(text);
    Expression e = Expression::parse(text);
    for (double x : {0.3, 1.7}) {
      for (double y : {0.2, 0.9}) {
        const double t = 0.4;
        double fd_x = (e.evaluate(x + h, y, t) - e.evaluate(x - h, y, t)) / (2 * h);
        double fd_y = (e.evaluate(x, y + h, t) - e.evaluate(x, y - h, t)) / (2 * h);
        double fd_t = (e.evaluate(x, y, t + h) - e.evaluate(x, y, t - h)) / (2 * h);
        CHECK(e.derivative(Variable::x).evaluate(x, y, t) == doctest::Approx(fd_x).epsilon(1e-6));
        CHECK(e.derivative(Variable::y).evaluate(x, y, t) == doctest::Approx(fd_y).epsilon(1e-6));
        CHECK(e.derivative(Variable::t).evaluate(x, y, t) == doctest::Approx(fd_t).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("expression: dependency queries") {
  Expression e = Expression::parse("x + 2 * t");
  CHECK(e.depends_on(Variable::x));
  CHECK_FALSE(e.depends_on(Variable::y));
  CHECK(e.depends_on(Variable::t));
  CHECK_FALSE(e.is_constant());
  CHECK(Expression::parse("2 * pi").is_constant());
  CHECK(e.derivative(Variable::y).is_constant());
  CHECK(Expression().evaluate(1, 2, 3) == 0.0);
}

TEST_CASE("expression: printed form parses back to the same function") {
  for (const char* text : {"x^2 - 3 * y / (1 + t)", "-sin(x) * cos(-y)", "2 ^ -x", "(x - y) - (t - 1)"}) {
    CAPTURE(text);
    Expression e = Expression::parse(text);
    Expression back = Expression::parse(e.to_string());
    for (double x : {-0.5, 0.7}) CHECK(back.evaluate(x, 0.3, 0.2) == doctest::Approx(e.evaluate(x, 0.3, 0.2)));
  }
}
