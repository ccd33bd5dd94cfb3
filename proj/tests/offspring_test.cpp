#include <gtest/gtest.h>

#include "gwpen/offspring.hpp"
#include "gwpen/trees.hpp"

using namespace gwpen;

namespace {
OffspringDistribution<Rational> law(std::vector<std::string> p) { return exact_law(p); }
} // namespace

TEST(Offspring, Validation)
{
    EXPECT_THROW(law({"1/2", "1/4"}), DomainError);
    EXPECT_THROW(law({"1"}), DomainError);
    EXPECT_THROW(law({"-1/4", "1/4", "1"}), DomainError);
    EXPECT_THROW(law({"0", "1"}), DomainError);
    EXPECT_TRUE(exact_law({"0", "1"}, true).degenerate());
    EXPECT_THROW(OffspringDistribution<double>({0.5, 0.5 + 1e-9}), DomainError);
    EXPECT_NO_THROW(OffspringDistribution<double>({0.5, 0.5 + 1e-13}));
    EXPECT_EQ(law({"1/2", "1/2", "0", "0"}).max_offspring(), 1U);
}

TEST(Offspring, PgfAndDerivatives)
{
    const auto q = law({"1/4", "1/4", "1/2"});
    EXPECT_EQ(q.pgf(Rational(1)), Rational(1));
    EXPECT_EQ(q.pgf(Rational(1, 2)), Rational(1, 2));
    EXPECT_EQ(q.derivative(1, Rational(1)), Rational(5, 4));
    EXPECT_EQ(q.derivative(2, Rational(7)), Rational(1));
    EXPECT_EQ(q.derivative(3, Rational(7)), Rational(0));
    EXPECT_NEAR(q.pgf(0.3), 0.25 + 0.075 + 0.045, 1e-15);
    EXPECT_NEAR(q.pgf(LogReal(0.3)).to_double(), 0.37, 1e-14);
    // 1 - f(1 - u) = (5/4) u - (1/2) u^2.
    const auto g = q.complement_coefficients<Rational>();
    ASSERT_EQ(g.size(), 3U);
    EXPECT_EQ(g[0], Rational(0));
    EXPECT_EQ(g[1], Rational(5, 4));
    EXPECT_EQ(g[2], Rational(-1, 2));
}

TEST(Characterize, Fixtures)
{
    auto c = characterize(law({"1/4", "1/4", "1/2"}));
    EXPECT_EQ(c.regime, Regime::supercritical_schroeder);
    EXPECT_EQ(c.kappa, Rational(1, 2));
    EXPECT_TRUE(c.kappa_exact);
    EXPECT_EQ(c.gamma, Rational(3, 4));
    EXPECT_EQ(c.mu, Rational(5, 4));
    EXPECT_EQ(c.a_min, 0U);

    c = characterize(law({"1/2", "0", "1/2"}));
    EXPECT_EQ(c.regime, Regime::critical);
    EXPECT_EQ(c.kappa, Rational(1));

    c = characterize(law({"0", "1/2", "1/2"}));
    EXPECT_EQ(c.regime, Regime::supercritical_schroeder);
    EXPECT_EQ(c.kappa, Rational(0));
    EXPECT_EQ(c.gamma, Rational(1, 2));
    EXPECT_EQ(c.a_min, 1U);

    c = characterize(law({"0", "0", "1/2", "1/2"}));
    EXPECT_EQ(c.regime, Regime::supercritical_boettcher);
    EXPECT_EQ(c.kappa, Rational(0));
    EXPECT_EQ(c.gamma, Rational(0));
    EXPECT_EQ(c.mu, Rational(5, 2));

    c = characterize(law({"1/2", "1/4", "1/4"}));
    EXPECT_EQ(c.regime, Regime::subcritical);
    EXPECT_EQ(c.kappa, Rational(1));
    EXPECT_EQ(to_string(c.regime), "subcritical");
}

TEST(Characterize, IrrationalKappa)
{
    // f(s) = 1/3 + 2/3 s^3: f(s) = s has root (sqrt(3) - 1) / 2.
    const auto q = law({"1/3", "0", "0", "2/3"});
    const auto c = characterize(q);
    EXPECT_FALSE(c.kappa_exact);
    EXPECT_NEAR(to_double(c.kappa), (std::sqrt(3.0) - 1) / 2, 1e-14);
    const auto f = characterize(q.to_float());
    EXPECT_NEAR(f.kappa, (std::sqrt(3.0) - 1) / 2, 1e-15);
    EXPECT_THROW(conjugate(q), DomainError);
    EXPECT_NO_THROW(conjugate(q.to_float()));
}

TEST(GenerationLaw, AgreesWithTreeEnumeration)
{
    const auto q = law({"1/4", "1/4", "1/2"});
    for (unsigned n = 0; n <= 3; ++n) {
        const auto g = generation_law(q, n);
        std::vector<Rational> by_trees(g.size(), Rational(0));
        for (const auto& t : enumerate_trees(n, 2)) {
            const std::size_t z = t.generation_size(n);
            ASSERT_LT(z, by_trees.size());
            by_trees[z] += gw_probability(q, t, n);
        }
        EXPECT_EQ(g, by_trees) << "n = " << n;
    }
}

TEST(GenerationLaw, PgfCompositionAndCap)
{
    const auto q = law({"1/2", "1/4", "1/4"});
    const auto g = generation_law(q, 3);
    const Rational s(2, 7);
    EXPECT_EQ(poly_eval(g, s), q.pgf(q.pgf(q.pgf(s))));
    EXPECT_THROW(generation_law(q, 30), ResourceError);
    const auto c = convolution_power(q, 3);
    EXPECT_EQ(poly_eval(c, s), ipow(q.pgf(s), 3));
}

TEST(Conjugation, ExactInvolution)
{
    const auto sub = law({"1/2", "1/4", "1/4"});
    const auto sup = law({"1/4", "1/4", "1/2"});
    EXPECT_EQ(conjugation_point(sub), Rational(2));
    EXPECT_EQ(conjugate(sub), sup);
    EXPECT_EQ(conjugate(sup), sub);
    EXPECT_THROW(conjugate(law({"1/2", "0", "1/2"})), DomainError);
    EXPECT_THROW(conjugate(law({"0", "1/2", "1/2"})), DomainError);
    const auto f = conjugate(sub.to_float());
    EXPECT_NEAR(f.prob(2), 0.5, 1e-14);
}
