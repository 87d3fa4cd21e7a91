#include "thickjunction/expression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using tj::Expression;
using tj::ParseError;

TEST(Expression, ConstantEverywhere) {
    const auto e = Expression::parse("1");
    EXPECT_EQ(e(0.0, 0.0), 1.0);
    EXPECT_EQ(e(-3.5, 17.0), 1.0);
    EXPECT_TRUE(e.is_constant());
}

TEST(Expression, ObstacleProfile) {
    EXPECT_DOUBLE_EQ(Expression::parse("x2*(x2+1)")(0.3, -0.5), -0.25);
}

TEST(Expression, SineOfPi) {
    EXPECT_NEAR(Expression::parse("sin(pi*x1)")(0.5, 0.0), 1.0, 1e-15);
}

TEST(Expression, Precedence) {
    EXPECT_DOUBLE_EQ(Expression::parse("1+2*3")(0, 0), 7.0);
    EXPECT_DOUBLE_EQ(Expression::parse("(1+2)*3")(0, 0), 9.0);
    EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0, 0), 512.0);
    EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0, 0), -4.0);
    EXPECT_DOUBLE_EQ(Expression::parse("8/4/2")(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("5-3-1")(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("2*-3")(0, 0), -6.0);
    EXPECT_DOUBLE_EQ(Expression::parse("1.5e2")(0, 0), 150.0);
}

TEST(Expression, Functions) {
    EXPECT_DOUBLE_EQ(Expression::parse("cos(0)")(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("exp(x1)")(1.0, 0), std::exp(1.0));
    EXPECT_DOUBLE_EQ(Expression::parse("abs(x2)")(0, -2.5), 2.5);
    EXPECT_DOUBLE_EQ(Expression::parse("pi")(0, 0), std::numbers::pi);
}

TEST(Expression, Dependencies) {
    const auto e = Expression::parse("x2*(x2+1)");
    EXPECT_FALSE(e.depends_on_x1());
    EXPECT_TRUE(e.depends_on_x2());
    EXPECT_TRUE(Expression::parse("sin(x1)").depends_on_x1());
}

TEST(Expression, SyntaxErrorsCarryPosition) {
    try {
        Expression::parse("1 + * 2");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 4u);
        EXPECT_NE(std::string(e.what()).find("position 4"), std::string::npos);
    }
    EXPECT_THROW(Expression::parse(""), ParseError);
    EXPECT_THROW(Expression::parse("(1+2"), ParseError);
    EXPECT_THROW(Expression::parse("1+2)"), ParseError);
    EXPECT_THROW(Expression::parse("sin 1"), ParseError);
    EXPECT_THROW(Expression::parse("3 4"), ParseError);
}

TEST(Expression, UnknownIdentifier) {
    try {
        Expression::parse("x1 + y");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 5u);
    }
    EXPECT_THROW(Expression::parse("tan(x1)"), ParseError);
}

TEST(Expression, GradientMatchesHandDerivative) {
    const auto e = Expression::parse("sin(pi*x1)*(x2+1) + x1^2*x2");
    const double x1 = 0.3, x2 = -0.7;
    const auto g = e.gradient(x1, x2);
    const double pi = std::numbers::pi;
    EXPECT_NEAR(g.v, std::sin(pi * x1) * (x2 + 1) + x1 * x1 * x2, 1e-15);
    EXPECT_NEAR(g.d1, pi * std::cos(pi * x1) * (x2 + 1) + 2 * x1 * x2, 1e-14);
    EXPECT_NEAR(g.d2, std::sin(pi * x1) + x1 * x1, 1e-14);
}

TEST(Expression, CentralDifferenceAgreesWithExact) {
    const auto e = Expression::parse("exp(x1)*cos(x2) / (1 + x1^2)");
    for (double x1 : {-1.0, 0.0, 0.4, 2.0}) {
        EXPECT_NEAR(e.d_dx1_central(x1, 0.3), e.gradient(x1, 0.3).d1, 1e-8);
    }
}

TEST(Expression, PowDerivativeWithVariableExponent) {
    const auto e = Expression::parse("x1^x2");
    const auto g = e.gradient(2.0, 3.0);
    EXPECT_NEAR(g.v, 8.0, 1e-14);
    EXPECT_NEAR(g.d1, 12.0, 1e-13);
    EXPECT_NEAR(g.d2, 8.0 * std::log(2.0), 1e-13);
}

// Property: unparse(parse(t)) agrees with t at random points.
TEST(ExpressionProperty, RoundTrip) {
    const char* corpus[] = {
        "1",
        "-x1",
        "x2*(x2+1)",
        "0.25*(x2+1)",
        "sin(pi*x1)*(x2+1)",
        "cos(pi*x2/(2*1))",
        "2^-x1",
        "-(x1-x2)^2/3",
        "abs(x1-0.5)+exp(-x2)",
        "1/(1+x1*x1) - 0.1*x2^3",
        "1e-3*x1 - -x2",
        "0.1+0.2",
    };
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (const char* text : corpus) {
        const auto e = Expression::parse(text);
        const auto back = Expression::parse(e.unparse());
        for (int k = 0; k < 100; ++k) {
            const double x1 = U(rng), x2 = U(rng);
            const double a = e(x1, x2), b = back(x1, x2);
            EXPECT_NEAR(a, b, 1e-15 * (1.0 + std::abs(a))) << text << " -> " << e.unparse();
        }
    }
}

TEST(ExpressionProperty, RandomTreesRoundTrip) {
    std::mt19937_64 rng(5);
    const char* leaves[] = {"x1", "x2", "pi", "2", "0.5", "1e-2"};
    const char* ops[] = {"+", "-", "*", "/"};
    const char* fns[] = {"sin", "cos", "abs"};
    std::function<std::string(int)> gen = [&](int depth) -> std::string {
        if (depth == 0) return leaves[rng() % 6];
        switch (rng() % 4) {
            case 0: return "(" + gen(depth - 1) + ops[rng() % 4] + gen(depth - 1) + ")";
            case 1: return std::string(fns[rng() % 3]) + "(" + gen(depth - 1) + ")";
            case 2: return "-" + gen(depth - 1);
            default: return gen(depth - 1) + ops[rng() % 4] + gen(depth - 1);
        }
    };
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const std::string text = gen(4);
        const auto e = Expression::parse(text);
        const auto back = Expression::parse(e.unparse());
        for (int k = 0; k < 20; ++k) {
            const double x1 = U(rng), x2 = U(rng);
            const double a = e(x1, x2), b = back(x1, x2);
            if (std::isfinite(a)) EXPECT_NEAR(a, b, 1e-15 * (1.0 + std::abs(a))) << text;
        }
    }
}
