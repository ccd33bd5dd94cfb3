#include <gtest/gtest.h>

#include <set>

#include "gwpen/combinatorics.hpp"

using namespace gwpen;

TEST(Hilbert, MatchesBinomialOnIntegers)
{
    for (unsigned p = 0; p <= 6; ++p)
        for (long long x = 0; x <= 10; ++x) EXPECT_EQ(hilbert(p, Rational(x)), binomial<Rational>(x, p)) << p << " " << x;
    EXPECT_EQ(hilbert(2, Rational(-1)), Rational(1));
    EXPECT_EQ(hilbert(3, Rational(1) / 2), Rational(1) / 16);
    EXPECT_NEAR(hilbert(3, 0.5), 0.0625, 1e-15);
}

TEST(Compositions, CountsAndOrder)
{
    for (unsigned p = 1; p <= 8; ++p) {
        for (unsigned i = 1; i <= p; ++i) {
            const auto c = compositions(i, p);
            EXPECT_EQ(Rational(static_cast<long long>(c.size())), binomial<Rational>(p - 1, i - 1));
            for (std::size_t j = 0; j < c.size(); ++j) {
                EXPECT_EQ(c[j].total(), p);
                EXPECT_EQ(c[j].size(), i);
                if (j > 0) {
                    EXPECT_LT(c[j - 1], c[j]);
                }
            }
        }
    }
    EXPECT_TRUE(compositions(0, 3).empty());
    EXPECT_TRUE(compositions(4, 3).empty());
    const auto c = compositions(2, 4);
    ASSERT_EQ(c.size(), 3U);
    EXPECT_EQ(c[0].parts, (std::vector<unsigned>{1, 3}));
    EXPECT_EQ(c[2].parts, (std::vector<unsigned>{3, 1}));
}

TEST(IncreasingTuples, Enumerates)
{
    const auto t = increasing_tuples(4, 2);
    ASSERT_EQ(t.size(), 6U);
    EXPECT_EQ(t.front(), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(t.back(), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(increasing_tuples(3, 0).size(), 1U);
    EXPECT_TRUE(increasing_tuples(2, 3).empty());
}

TEST(SommeHk, SmallCasesByHand)
{
    // H_2(3) = 3 = H_2(1) + H_2(2) + H_1(1) H_1(2) = 0 + 1 + 2.
    auto r = check_somme_Hk(2, {1, 2});
    EXPECT_EQ(r.lhs, Rational(3));
    EXPECT_TRUE(r.equal);
    EXPECT_THROW(check_somme_Hk(0, {1, 2}), DomainError);
}

TEST(SommeHk, NegativeEntries)
{
    for (long long a = -3; a <= 3; ++a)
        for (long long b = -3; b <= 3; ++b) EXPECT_TRUE(check_somme_Hk(3, {a, b, 1}).equal);
}

TEST(CoefficientIdentity, PowerSeriesCoefficients)
{
    // a_s^{(l)} = [X^l] P(X)^s for P(X) = X + X^2/2 + X^3/6 + ... (e^X - 1).
    const unsigned p = 5;
    std::vector<Rational> P(p + 1, Rational(0));
    for (unsigned k = 1; k <= p; ++k) P[k] = Rational(1) / factorial<Rational>(k);
    CoefficientTable<Rational> table(p + 1, std::vector<Rational>(p + 1, Rational(0)));
    std::vector<Rational> power(p + 1, Rational(0));
    power[0] = 1;
    for (unsigned s = 1; s <= p; ++s) {
        std::vector<Rational> next(p + 1, Rational(0));
        for (unsigned i = 0; i <= p; ++i)
            for (unsigned j = 1; i + j <= p; ++j) next[i + j] += power[i] * P[j];
        power = next;
        for (unsigned l = s; l <= p; ++l) table[l][s] = power[l];
    }
    for (unsigned w = 1; w <= p; ++w)
        for (unsigned i = 1; i <= w; ++i)
            for (const auto& c : compositions(i, w)) EXPECT_TRUE(coefficient_identity(table, p, c.parts).equal);
    EXPECT_EQ(table_entry(table, 4, 2), Rational(0));
}
