#include <gtest/gtest.h>

#include <cmath>

#include "gwpen/scalar.hpp"

using namespace gwpen;

TEST(Rational, ParsesFractionsIntegersAndDecimals)
{
    EXPECT_EQ(parse_rational("1/4"), Rational(1) / 4);
    EXPECT_EQ(parse_rational(" 3 "), Rational(3));
    EXPECT_EQ(parse_rational("0.25"), Rational(1) / 4);
    EXPECT_EQ(parse_rational("-1.5"), Rational(-3) / 2);
    EXPECT_EQ(parse_rational("2/6"), Rational(1) / 3);
    EXPECT_EQ(parse_rational("010"), Rational(10));
    EXPECT_EQ(parse_rational("0.0625"), Rational(1) / 16);
    EXPECT_THROW(parse_rational("0x10"), DomainError);
    EXPECT_THROW(parse_rational("1.2.3"), DomainError);
    EXPECT_THROW(parse_rational("1/0"), DomainError);
    EXPECT_THROW(parse_rational("abc"), DomainError);
    EXPECT_THROW(parse_rational(""), DomainError);
}

TEST(Rational, FromDoubleIsExact)
{
    EXPECT_EQ(from_double<Rational>(0.375), Rational(3) / 8);
    EXPECT_EQ(from_double<Rational>(-2.0), Rational(-2));
    const Rational tenth = from_double<Rational>(0.1);
    EXPECT_NE(tenth, Rational(1) / 10);
    EXPECT_EQ(to_double(tenth), 0.1);
}

TEST(Rational, LogAbsOfHugeValues)
{
    Rational big = Rational(BigInt(1) << 3000) / 3;
    EXPECT_NEAR(log_abs(big), 3000 * std::log(2.0) - std::log(3.0), 1e-9);
    EXPECT_EQ(bit_size(big), 3001U);
    EXPECT_THROW(check_size(big, 1000), ResourceError);
    EXPECT_NO_THROW(check_size(big, 4000));
}

TEST(Helpers, BinomialFactorialPower)
{
    EXPECT_EQ(binomial<Rational>(10, 3), Rational(120));
    EXPECT_EQ(binomial<double>(10, 3), 120.0);
    EXPECT_EQ(binomial<Rational>(3, 5), Rational(0));
    EXPECT_EQ(factorial<Rational>(6), Rational(720));
    EXPECT_EQ(ipow(Rational(2) / 3, 5), Rational(32) / 243);
    EXPECT_DOUBLE_EQ(ipow(1.5, 3), 3.375);
}

TEST(LogReal, ArithmeticMatchesDoubles)
{
    const double xs[] = {3.5, -2.25, 0.0, 1e-3, -7.0};
    for (double a : xs) {
        for (double b : xs) {
            const LogReal la(a), lb(b);
            EXPECT_NEAR((la + lb).to_double(), a + b, 1e-12 * (1 + std::abs(a) + std::abs(b)));
            EXPECT_NEAR((la - lb).to_double(), a - b, 1e-12 * (1 + std::abs(a) + std::abs(b)));
            EXPECT_NEAR((la * lb).to_double(), a * b, 1e-12 * (1 + std::abs(a * b)));
            if (b != 0.0) {
                EXPECT_NEAR((la / lb).to_double(), a / b, 1e-12 * (1 + std::abs(a / b)));
            }
            EXPECT_EQ(la < lb, a < b);
        }
    }
    EXPECT_TRUE((LogReal(2.0) - LogReal(2.0)).is_zero());
    EXPECT_THROW(LogReal(1.0) / LogReal(0.0), DomainError);
}

TEST(LogReal, SurvivesBeyondDoubleRange)
{
    LogReal x = LogReal::from_log(1, -5000.0);
    LogReal y = x * x;
    EXPECT_DOUBLE_EQ(y.log_abs(), -10000.0);
    EXPECT_EQ(y.to_double(), 0.0);
    EXPECT_DOUBLE_EQ((y / x).log_abs(), -5000.0);
    EXPECT_NE(format_scalar(y).find("exp("), std::string::npos);
}

TEST(Format, DoublesRoundTrip)
{
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_scalar(x)), x);
    EXPECT_EQ(format_scalar(Rational(3) / 4), "3/4");
}
