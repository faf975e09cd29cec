#include "expression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using mcre::cli::Expression;
using mcre::cli::ExpressionError;

namespace {

double eval(const std::string& src, std::vector<double> x = {}, std::vector<double> y = {}) {
    return Expression::parse(src)(x, y);
}

}  // namespace

TEST(Expression, ArithmeticAndPrecedence) {
    EXPECT_DOUBLE_EQ(eval("1 + 2 * 3"), 7.0);
    EXPECT_DOUBLE_EQ(eval("(1 + 2) * 3"), 9.0);
    EXPECT_DOUBLE_EQ(eval("2 ^ 3 ^ 2"), 512.0);
    EXPECT_DOUBLE_EQ(eval("-2 ^ 2"), -4.0);
    EXPECT_DOUBLE_EQ(eval("8 / 4 / 2"), 1.0);
    EXPECT_DOUBLE_EQ(eval("1.5e2 - 50"), 100.0);
}

TEST(Expression, VariablesAndArity) {
    const auto e = Expression::parse("x1 * y2 + x");
    EXPECT_EQ(e.x_arity(), 1u);
    EXPECT_EQ(e.y_arity(), 2u);
    const std::vector<double> x{3.0}, y{10.0, 2.0};
    EXPECT_DOUBLE_EQ(e(x, y), 9.0);
    EXPECT_EQ(Expression::parse("x3").x_arity(), 3u);
}

TEST(Expression, Functions) {
    EXPECT_DOUBLE_EQ(eval("exp(log(5))"), 5.0);
    EXPECT_DOUBLE_EQ(eval("abs(-3) + sqrt(16)"), 7.0);
    EXPECT_DOUBLE_EQ(eval("min(4, 2, 8) + max(1, 9)"), 11.0);
    EXPECT_DOUBLE_EQ(eval("pow(2, 10)"), 1024.0);
    EXPECT_NEAR(eval("tanh(0.5)"), std::tanh(0.5), 1e-15);
    EXPECT_NEAR(eval("sin(pi / 2) + cos(0)"), 2.0, 1e-15);
    EXPECT_NEAR(eval("e"), std::exp(1.0), 1e-15);
}

TEST(Expression, ComparisonsAndIndicator) {
    EXPECT_DOUBLE_EQ(eval("indicator(abs(y) <= 1)", {}, {0.5}), 1.0);
    EXPECT_DOUBLE_EQ(eval("indicator(abs(y) <= 1)", {}, {-1.5}), 0.0);
    EXPECT_DOUBLE_EQ(eval("ind(x > 0) * 2 + (x == 0)", {0.0}), 1.0);
    EXPECT_DOUBLE_EQ(eval("1 != 2"), 1.0);
}

TEST(Expression, ParseErrorsCarryPosition) {
    for (const char* bad : {"", "1 +", "(1", "foo(1)", "1 2", "x0", "pow(1)", "z", "1 $ 2"}) {
        EXPECT_THROW(Expression::parse(bad), ExpressionError) << bad;
    }
    try {
        Expression::parse("1 + * 2");
        FAIL();
    } catch (const ExpressionError& e) {
        EXPECT_EQ(e.position(), 4u);
    }
}

TEST(Expression, MissingCoordinateIsAnError) {
    const auto e = Expression::parse("x2");
    const std::vector<double> x{1.0};
    EXPECT_THROW(e(x), ExpressionError);
}
