#include "msdecomp/rational.hpp"

#include <gtest/gtest.h>

using namespace msdecomp;

TEST(Rational, ParsesFractionsIntegersAndDecimalsExactly) {
    EXPECT_EQ(parse_rational("3/2"), Rational(3, 2));
    EXPECT_EQ(parse_rational(" -6/4 "), Rational(-3, 2));
    EXPECT_EQ(parse_rational("7"), Rational(7));
    EXPECT_EQ(parse_rational("0.1"), Rational(1, 10));
    EXPECT_EQ(parse_rational("-1.25e-2"), Rational(-1, 80));
    EXPECT_EQ(parse_rational("2E3"), Rational(2000));
}

TEST(Rational, RejectsMalformedInput) {
    EXPECT_THROW(parse_rational(""), std::invalid_argument);
    EXPECT_THROW(parse_rational("abc"), std::invalid_argument);
    EXPECT_THROW(parse_rational("1/0"), std::invalid_argument);
    EXPECT_THROW(parse_rational("1.2.3"), std::invalid_argument);
    EXPECT_THROW(parse_rational("1e"), std::invalid_argument);
}

TEST(Rational, PowerHandlesNegativeExponents) {
    EXPECT_EQ(rpow(Rational(2), 5), Rational(32));
    EXPECT_EQ(rpow(Rational(2, 3), -2), Rational(9, 4));
    EXPECT_EQ(rpow(Rational(-3), 3), Rational(-27));
    EXPECT_EQ(rpow(Rational(5), 0), Rational(1));
    EXPECT_THROW(rpow(Rational(0), -1), std::domain_error);
}

TEST(Rational, ExactSqrt) {
    EXPECT_EQ(*exact_sqrt(Rational(9, 16)), Rational(3, 4));
    EXPECT_FALSE(exact_sqrt(Rational(2)).has_value());
    EXPECT_FALSE(exact_sqrt(Rational(-4)).has_value());
}

TEST(Surd, FoldsPerfectSquaresAndMultipliesExactly) {
    const Surd a = Surd::sqrt_of(Rational(8));   // 2 sqrt 2 stays irrational
    const Surd b = Surd::sqrt_of(Rational(2));
    EXPECT_FALSE(a.as_rational().has_value());
    EXPECT_EQ(*(a * b).as_rational(), Rational(4));
    EXPECT_EQ(*(a / b).as_rational(), Rational(2));
    EXPECT_EQ(*Surd::sqrt_of(Rational(25, 4)).as_rational(), Rational(5, 2));
}

TEST(Surd, OrdersBySignedSquare) {
    const Surd r2 = Surd::sqrt_of(Rational(2));
    EXPECT_LT(Surd(Rational(1)), r2);
    EXPECT_LT(r2, Surd(Rational(3, 2)));
    EXPECT_LT(-r2, Surd(Rational(-1)));
    EXPECT_EQ(Surd(Rational(3), Rational(4)), Surd(Rational(6)));
    EXPECT_TRUE(Surd().is_zero());
    EXPECT_NEAR(r2.to_double(), std::sqrt(2.0), 1e-15);
}
