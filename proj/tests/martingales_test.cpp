#include <gtest/gtest.h>

#include <cmath>

#include "gwpen/martingales.hpp"

using namespace gwpen;

namespace {
const auto q_super = exact_law({"1/4", "1/4", "1/2"});
const auto q_unit = exact_law({"0", "1/2", "1/2"});
const auto q_boett = exact_law({"0", "0", "1/2", "1/2"});
const auto q_crit = exact_law({"1/2", "0", "1/2"});
const auto q_sub = exact_law({"1/2", "1/4", "1/4"});

// Coefficient of X^p in (sum_{k=1}^p d_k / k! X^k)^i, by repeated polynomial multiplication.
std::vector<Rational> power_coefficients(const std::vector<Rational>& d, unsigned p)
{
    std::vector<Rational> base(p + 1, Rational(0));
    Rational fact(1);
    for (unsigned k = 1; k <= p; ++k) {
        fact *= k;
        base[k] = d[k] / fact;
    }
    std::vector<Rational> out;
    std::vector<Rational> acc{Rational(1)};
    for (unsigned i = 1; i <= p; ++i) {
        acc = poly_mul(acc, base);
        acc.resize(p + 1, Rational(0));
        out.push_back(acc[p]);
    }
    return out;
}
} // namespace

TEST(ACoeffs, SmallOrdersByHand)
{
    const auto a1 = a_coeffs(q_super, 1, 0, 0.0);
    EXPECT_EQ(a1.at(1), Rational(-1));
    // p = 2: a_1 = phi''(0)/2 = E[W^2]/2 = 8/5, a_2 = phi'(0)^2 = 1.
    const auto a2 = a_coeffs(q_super, 2, 3, 0.0);
    EXPECT_EQ(a2.at(1), Rational(8, 5));
    EXPECT_EQ(a2.at(2), Rational(1));
    EXPECT_THROW(a_coeffs(q_super, 1, 0, 0.5), DomainError);
}

TEST(ACoeffs, MatchPolynomialPowers)
{
    const PhiTable<Rational> phi(q_super, 5);
    const auto d = phi.at(0);
    for (unsigned p = 1; p <= 5; ++p) {
        const auto a = a_coeffs(phi, p, 0);
        const auto oracle = power_coefficients(d, p);
        for (unsigned i = 1; i <= p; ++i) EXPECT_EQ(a.at(i), oracle[i - 1]) << p << "," << i;
    }
}

TEST(ACoeffs, LaplaceValuesAndCoefficientIdentity)
{
    const PhiTable<double> phi(q_super, 1.0, 4);
    const auto d = phi.at(2);
    const auto a = a_coeffs(phi, 2, 2);
    EXPECT_DOUBLE_EQ(a.at(1), d[2] / 2);
    EXPECT_DOUBLE_EQ(a.at(2), d[1] * d[1]);
    const auto table = coefficient_table(phi, 4, 2);
    EXPECT_TRUE(coefficient_identity(table, 4, {1, 2}).equal);
    EXPECT_TRUE(coefficient_identity(table, 4, {1, 1, 1}).equal);
    const auto exact = coefficient_table(PhiTable<Rational>(q_super, 4), 4, 0);
    EXPECT_TRUE(coefficient_identity(exact, 4, {2, 2}).equal);
}

TEST(G, ClassicalReductions)
{
    const PhiTable<Rational> phi(q_super, 2);
    for (long long x = 0; x <= 6; ++x) {
        EXPECT_EQ(G_eval(phi, 1, 3, 0, x), Rational(x));
        EXPECT_EQ(G_eval(phi, 0, 3, 0, x), Rational(1));
    }
    EXPECT_THROW(G_eval(phi, 1, 0, 0, -1), DomainError);
}

TEST(G, TwoIndexAtStartMatchesShiftedArgument)
{
    // G_{n0,n0} with parameter a equals G_0 with parameter a / mu^{n0}.
    const double a = 1.0, mu = 1.25;
    const unsigned n0 = 2;
    const PhiTable<double> phi(q_super, a, 2);
    const PhiTable<double> shifted(q_super, a / (mu * mu), 2);
    for (long long x = 0; x <= 5; ++x)
        for (unsigned p = 0; p <= 2; ++p)
            EXPECT_NEAR(G_eval(phi, p, n0, n0, x), G_eval(shifted, p, 0, 0, x), 1e-9) << p << "," << x;
}

TEST(Evaluate, DirectFormulas)
{
    EXPECT_EQ(MartingaleSpec<Rational>::ratio(q_super).evaluate(2, 3), Rational(48, 25));
    const auto ext = MartingaleSpec<Rational>::extinction(q_super);
    EXPECT_EQ(ext.evaluate(0, 3), Rational(1, 4));
    EXPECT_EQ(ext.evaluate(7, 3), Rational(1, 4));
    const auto su = MartingaleSpec<Rational>::schroeder_unit(q_unit);
    EXPECT_EQ(su.evaluate(2, 1), Rational(4));
    EXPECT_EQ(su.evaluate(2, 2), Rational(0));
    const auto bu = MartingaleSpec<Rational>::boettcher_unit(q_boett);
    EXPECT_EQ(bu.evaluate(2, 4), Rational(8));  // q_2^{-(4-1)/(2-1)}
    EXPECT_EQ(bu.evaluate(2, 5), Rational(0));
    EXPECT_THROW(MartingaleSpec<Rational>::schroeder_unit(q_super), DomainError);
    EXPECT_THROW(MartingaleSpec<Rational>::critical_size(q_super), DomainError);
    EXPECT_THROW(MartingaleSpec<Rational>::extinction(q_unit), DomainError);
    EXPECT_THROW(MartingaleSpec<Rational>::penalized(q_crit, 1), DomainError);
    EXPECT_THROW(MartingaleSpec<Rational>::penalized(q_super, 1, 0.5), DomainError);
}

TEST(Evaluate, SizeBiasedExtinctIsProductRenormalised)
{
    const auto r = MartingaleSpec<Rational>::ratio(q_super);
    const auto e = MartingaleSpec<Rational>::extinction(q_super);
    const auto sb = MartingaleSpec<Rational>::sized_biased_extinct(q_super);
    const Rational mu(5, 4), gamma(3, 4);
    for (unsigned n = 0; n <= 3; ++n)
        for (std::size_t z = 0; z <= 5; ++z)
            EXPECT_EQ(sb.evaluate(n, z), r.evaluate(n, z) * e.evaluate(n, z) * ipow(mu / gamma, n));
}

TEST(Evaluate, PenalizedReductions)
{
    const auto r = MartingaleSpec<Rational>::ratio(q_super);
    const auto p1 = MartingaleSpec<Rational>::penalized(q_super, 1);
    const auto p0 = MartingaleSpec<Rational>::penalized(q_super, 0);
    for (unsigned n = 0; n <= 3; ++n)
        for (std::size_t z = 0; z <= 8; ++z) {
            EXPECT_EQ(p1.evaluate(n, z), r.evaluate(n, z));
            EXPECT_EQ(p0.evaluate(n, z), Rational(1));
        }
}

TEST(Verify, ExactCatalogue)
{
    for (const auto& q : {q_super, q_unit, q_boett, q_crit, q_sub}) {
        for (const auto& spec : applicable_martingales(q, 3)) {
            const auto rep = verify_martingale(spec, 4);
            EXPECT_TRUE(rep.passed) << spec.name() << " p=" << spec.p();
            EXPECT_GT(rep.checks, 0U);
            for (const auto& m : rep.means) EXPECT_EQ(m, Rational(1));
        }
    }
}

TEST(Verify, MutationIsReported)
{
    const auto spec = MartingaleSpec<Rational>::two_index(q_super, 2, 0.0, 0);
    const auto mutated = [&](unsigned n, std::size_t z) {
        Rational v = spec.evaluate(n, z);
        if (n == 2 && z == 3) v += Rational(1, 1000);
        return v;
    };
    const auto rep = verify_martingale(q_super, mutated, 0, 3);
    EXPECT_FALSE(rep.passed);
    ASSERT_FALSE(rep.violations.empty());
    bool found = false;
    for (const auto& v : rep.violations) found = found || (v.n == 1 || v.n == 2);
    EXPECT_TRUE(found);
}

TEST(Verify, LaplaceFamiliesWithinTolerance)
{
    LaplaceOptions opts;
    opts.tol = 1e-13;
    for (const auto& q : {q_super.to_float(), q_unit.to_float(), q_boett.to_float()}) {
        for (double a : {0.5, 1.0}) {
            for (const auto& spec : applicable_martingales(q, 2, a, opts)) {
                const auto rep = verify_martingale(spec, 4, 1e-9);
                EXPECT_TRUE(rep.passed) << spec.name() << " p=" << spec.p() << " a=" << a
                                        << " gap=" << rep.max_relative_gap;
            }
        }
    }
    const auto sub = q_sub.to_float();
    for (const auto& spec : applicable_martingales(sub, 2, 0.5, opts))
        EXPECT_TRUE(verify_martingale(spec, 4, 1e-9).passed) << spec.name();
}

TEST(Uniqueness, SolvesAndMatchesConstructiveCoefficients)
{
    for (unsigned p = 1; p <= 4; ++p) {
        const auto r = uniqueness_solve(q_super, p);
        EXPECT_NE(r.det_F, Rational(0));
        EXPECT_TRUE(r.upper_triangular) << p;
        EXPECT_TRUE(r.p1_is_identity) << p;
        EXPECT_TRUE(r.matches_constructive) << p;
    }
    // p = 2 by hand: P_2 = (8/5 H_1 + H_2) * 2 / (16/5) = H_1 + (5/8) H_2.
    const auto r = uniqueness_solve(q_super, 2);
    EXPECT_EQ(r.hilbert[1][0], Rational(1));
    EXPECT_EQ(r.hilbert[1][1], Rational(5, 8));
}

TEST(Uniqueness, PerturbingRightHandSideChangesSolution)
{
    auto r = uniqueness_solve(q_super, 3);
    auto m = r.M;
    m[2][2] += Rational(1, 7);
    Rational det;
    const auto c = solve_exact(r.F, m, &det);
    EXPECT_EQ(det, r.det_F);
    EXPECT_NE(c, r.C);
}
