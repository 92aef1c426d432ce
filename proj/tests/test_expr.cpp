#include "pnr/expr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using pnr::Expr;

namespace {

double eval(const char* src, std::vector<double> x, const pnr::ConstantTable& c = {}) {
  return Expr::parse(src, static_cast<int>(x.size()), c).evaluate(x);
}

}  // namespace

TEST(Expr, Precedence) {
  EXPECT_DOUBLE_EQ(eval("1 + 2*3", {}), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2)*3", {}), 9.0);
  EXPECT_DOUBLE_EQ(eval("2*x1^3", {2.0}), 16.0);
  EXPECT_DOUBLE_EQ(eval("-x1^2", {3.0}), -9.0);
  EXPECT_DOUBLE_EQ(eval("8/4/2", {}), 1.0);
  EXPECT_DOUBLE_EQ(eval("1 - 2 - 3", {}), -4.0);
  EXPECT_DOUBLE_EQ(eval("x1*x2 - x3/x1", {2.0, 5.0, 4.0}), 8.0);
}

TEST(Expr, NumbersAndConstants) {
  EXPECT_DOUBLE_EQ(eval("1.5e2 + .5", {}), 150.5);
  EXPECT_DOUBLE_EQ(eval("2.5E-1", {}), 0.25);
  EXPECT_DOUBLE_EQ(eval("w*x1", {3.0}, {{"w", 2.0}}), 6.0);
  EXPECT_TRUE(Expr::parse("lam", 1, {{"lam", 4.0}}).is_constant());
}

TEST(Expr, UnknownIdentifiersReportOffset) {
  try {
    Expr::parse("x1 + x3", 2);
    FAIL();
  } catch (const pnr::UnknownIdentifierError& e) {
    EXPECT_EQ(e.name(), "x3");
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(Expr::parse("y + 1", 2), pnr::UnknownIdentifierError);
  EXPECT_THROW(Expr::parse("x0", 2), pnr::UnknownIdentifierError);
}

TEST(Expr, SyntaxErrorsCarryExpectedTokens) {
  try {
    Expr::parse("(x1 + 2", 1);
    FAIL();
  } catch (const pnr::ParseError& e) {
    EXPECT_EQ(e.offset(), 7u);
    ASSERT_FALSE(e.expected().empty());
    EXPECT_EQ(e.expected().front(), "')'");
  }
  EXPECT_THROW(Expr::parse("", 1), pnr::ParseError);
  EXPECT_THROW(Expr::parse("x1 +", 1), pnr::ParseError);
  EXPECT_THROW(Expr::parse("x1 ^ ", 1), pnr::ParseError);
  EXPECT_THROW(Expr::parse("1e", 1), pnr::ParseError);
  EXPECT_THROW(Expr::parse("x1 $ 2", 1), pnr::ParseError);
}

TEST(Expr, DivisionByZeroIsDomainError) {
  const Expr e = Expr::parse("1/x1", 1);
  const std::vector<double> zero = {0.0};
  EXPECT_THROW(e.jet(zero, 1), pnr::DomainError);
}

TEST(Expr, JetMatchesFiniteDifferences) {
  const Expr e = Expr::parse("x1^3*x2/(1 + x3^2) - 2*x2*x3 + x1/x2", 3);
  const std::vector<double> x = {0.7, 1.3, -0.4};
  const pnr::Jet2 j = pnr::eval_jet2(e, x);
  EXPECT_NEAR(j.value, e.evaluate(x), 1e-15);
  const double h = 1e-4;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> p = x, q = x;
    p[a] += h;
    q[a] -= h;
    EXPECT_NEAR(j.gradient(a), (e.evaluate(p) - e.evaluate(q)) / (2 * h), 1e-7);
    for (int b = 0; b < 3; ++b) {
      auto shifted = [&](double sa, double sb) {
        std::vector<double> r = x;
        r[a] += sa;
        r[b] += sb;
        return e.evaluate(r);
      };
      const double fd = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4 * h * h);
      EXPECT_NEAR(j.hessian(a, b), fd, 1e-5);
    }
  }
  EXPECT_EQ(j.hessian, j.hessian.transpose());
}

TEST(Expr, JetOfPolynomialIsExact) {
  // f = x1^2 x2: ∇f = (2 x1 x2, x1^2), H = ((2 x2, 2 x1), (2 x1, 0))
  const Expr e = Expr::parse("x1^2*x2", 2);
  const std::vector<double> x = {3.0, -2.0};
  const pnr::Jet2 j = pnr::eval_jet2(e, x);
  EXPECT_EQ(j.value, -18.0);
  EXPECT_EQ(j.gradient(0), -12.0);
  EXPECT_EQ(j.gradient(1), 9.0);
  EXPECT_EQ(j.hessian(0, 0), -4.0);
  EXPECT_EQ(j.hessian(0, 1), 6.0);
  EXPECT_EQ(j.hessian(1, 1), 0.0);
}

TEST(Expr, PrintParseRoundTrip) {
  std::mt19937_64 rng(7);
  const char* sources[] = {"x1*x2 - x3/(x1 + 2)", "-(x1 - x2)^3", "0.1*x1 + 1e-3/x2", "x1/(x2*x3) - -x1",
                           "(x1 + x2)*(x1 - x2)^2/3"};
  for (const char* s : sources) {
    const Expr e = Expr::parse(s, 3);
    const Expr back = Expr::parse(e.to_string(), 3);
    for (int t = 0; t < 5; ++t) {
      std::vector<double> x = {0.5 + (rng() % 100) / 100.0, 0.5 + (rng() % 100) / 100.0, 0.5 + (rng() % 100) / 100.0};
      EXPECT_EQ(e.evaluate(x), back.evaluate(x)) << s << " -> " << e.to_string();
    }
  }
}

TEST(Expr, Builders) {
  const Expr x = Expr::variable(0);
  const Expr e = pow(x, 2) * Expr::constant(3.0) - x / Expr::constant(2.0);
  const std::vector<double> v = {2.0};
  EXPECT_DOUBLE_EQ(e.evaluate(v), 11.0);
  EXPECT_TRUE(Expr().is_zero());
  EXPECT_EQ(e.max_variable(), 0);
}
