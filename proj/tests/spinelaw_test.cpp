#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gwpen/spinelaw.hpp"

using namespace gwpen;

namespace {
const auto q_super = exact_law({"1/4", "1/4", "1/2"});
const auto q_sub = exact_law({"1/2", "1/4", "1/4"});
const auto q_crit = exact_law({"1/2", "0", "1/2"});

// Sum of exact_Q over every assignment of types 0..p to the nodes of t that
// forms a valid typed tree with root type p.
Rational brute_force_shape(const SpineLaw<Rational>& law, const UlamTree& t, unsigned height)
{
    const std::size_t n = t.size();
    std::vector<unsigned> types(n, 0);
    Rational total(0);
    while (true) {
        if (types[0] == law.p()) {
            try {
                total += law.exact_Q(TypedTree(t, types), height);
            } catch (const DomainError&) {
            }
        }
        std::size_t i = 0;
        while (i < n && types[i] == law.p()) types[i++] = 0;
        if (i == n) break;
        ++types[i];
    }
    return total;
}
} // namespace

TEST(Offspring, SpineTypeOneIsSizeBiased)
{
    const SpineLaw<Rational> law(q_super, 1);
    const Rational mu(5, 4);
    for (unsigned n = 0; n <= 3; ++n) {
        for (unsigned k = 1; k <= 2; ++k) {
            for (unsigned j = 0; j < k; ++j) {
                OffspringEvent e{std::vector<unsigned>(k, 0)};
                e.types[j] = 1;
                // Uniform spine position: q_k / mu for each of the k placements.
                EXPECT_EQ(law.offspring_probability(1, n, e), q_super.prob(k) / mu);
            }
        }
        EXPECT_EQ(law.offspring_probability(1, n, OffspringEvent{}), Rational(0));
    }
}

TEST(Offspring, TypeZeroIsTheOriginalLawAtZero)
{
    const SpineLaw<Rational> law(q_super, 2);
    for (unsigned k = 0; k <= 2; ++k)
        EXPECT_EQ(law.offspring_probability(0, 1, OffspringEvent{std::vector<unsigned>(k, 0)}), q_super.prob(k));
}

TEST(Offspring, NormalisedForEveryTypeAndHeight)
{
    for (unsigned p = 0; p <= 3; ++p) {
        const SpineLaw<Rational> law(q_super, p);
        for (unsigned l = 0; l <= p; ++l)
            for (unsigned n = 0; n <= 3; ++n) EXPECT_EQ(law.normalization(l, n), Rational(1)) << p << l << n;
    }
    LaplaceOptions opts;
    opts.tol = 1e-13;
    const SpineLaw<double> law(q_super.to_float(), 2, 1.0, 0, opts);
    for (unsigned l = 0; l <= 2; ++l)
        for (unsigned n = 0; n <= 4; ++n) EXPECT_NEAR(law.normalization(l, n), 1.0, 1e-10);
}

TEST(Offspring, RejectsBadInput)
{
    const SpineLaw<Rational> law(q_super, 2);
    EXPECT_THROW(law.offspring_probability(2, 0, OffspringEvent{{1, 0}}), DomainError);
    EXPECT_THROW(law.offspring_probability(3, 0, OffspringEvent{{3}}), DomainError);
    EXPECT_THROW(SpineLaw<Rational>(q_sub, 1), DomainError);
    EXPECT_THROW(SpineLaw<Rational>(q_crit, 1), DomainError);
    EXPECT_THROW(SpineLaw<Rational>(q_super, 1, 0.5), DomainError);
}

TEST(Shape, DynamicProgrammingMatchesBruteForceTypings)
{
    const SpineLaw<Rational> law(q_super, 2);
    for (const auto& t : enumerate_trees(2, 2)) EXPECT_EQ(law.shape_probability(t, 2), brute_force_shape(law, t, 2)) << t.to_string();
}

TEST(Shape, PZeroIsGaltonWatson)
{
    const SpineLaw<Rational> law(q_super, 0);
    for (const auto& t : enumerate_trees(3, 2)) EXPECT_EQ(law.shape_probability(t, 3), gw_probability(q_super, t, 3));
}

TEST(MeasureEquality, ExactAtZero)
{
    for (unsigned p = 0; p <= 3; ++p) {
        for (unsigned n = 0; n <= 3; ++n) {
            const SpineLaw<Rational> law(q_super, p);
            const auto rep = verify_measure_equality(law, n, 3);
            EXPECT_TRUE(rep.equal) << p << "," << n << " " << rep.worst_shape;
            EXPECT_EQ(rep.sum_Q, Rational(1));
            EXPECT_EQ(rep.sum_MP, Rational(1));
        }
    }
    // Shifted root.
    const SpineLaw<Rational> shifted(q_super, 2, 0.0, 1);
    EXPECT_TRUE(verify_measure_equality(shifted, 3, 2).equal);
}

TEST(MeasureEquality, LaplaceWithinTolerance)
{
    LaplaceOptions opts;
    opts.tol = 1e-13;
    for (unsigned p = 1; p <= 3; ++p) {
        const SpineLaw<double> law(q_super.to_float(), p, 1.0, 0, opts);
        const auto rep = verify_measure_equality(law, 3, 2, 1e-8, {}, opts);
        EXPECT_TRUE(rep.equal) << p << " gap " << rep.max_gap;
        EXPECT_NEAR(rep.sum_Q, 1.0, 1e-8);
    }
}

TEST(MeasureEquality, WrongMartingaleIsDetected)
{
    const SpineLaw<Rational> law(q_super, 2);
    const auto wrong = MartingaleSpec<Rational>::two_index(q_super, 1, 0.0, 0);
    const auto rep = detail::compare_shapes(
        law, 2, 2, [&](const UlamTree& t) { return wrong.evaluate(2, t.generation_size(2)) * gw_probability(q_super, t, 2); },
        0.0, {});
    EXPECT_FALSE(rep.equal);
    EXPECT_FALSE(rep.worst_shape.empty());
}

TEST(MeasureEquality, ConjugatedSubcriticalComposite)
{
    // kappa = 2 and the conjugate law is (1/4, 1/4, 1/2).
    EXPECT_EQ(conjugate(q_sub), q_super);
    for (unsigned p = 0; p <= 2; ++p) {
        const auto rep = verify_conjugate_spine(q_sub, p, 0.0, 3, 2);
        EXPECT_TRUE(rep.equal) << p << " " << rep.worst_shape;
        EXPECT_EQ(rep.sum_Q, Rational(1));
    }
}

TEST(Sampling, DeterministicAndTypeMassConserved)
{
    const SpineLaw<Rational> law(q_super, 3);
    const auto a = sample_spine_tree(law, 5, 7, 3);
    const auto b = sample_spine_tree(law, 5, 7, 3);
    EXPECT_EQ(a.tree(), b.tree());
    EXPECT_EQ(a.types(), b.types());
    for (unsigned n = 0; n <= 5; ++n) EXPECT_EQ(a.type_mass(n), 3U);
    SampleLimits tight;
    tight.max_nodes = 3;
    EXPECT_THROW(sample_spine_tree(law, 8, 1, 0, tight), ResourceError);
}

TEST(Sampling, ShapeFrequenciesWithinThreeSigma)
{
    const SpineLaw<Rational> law(q_super, 2);
    const auto s = spine_statistics(law, 4, 20000, 11, 2);
    EXPECT_EQ(s.type_mass_violations, 0U);
    EXPECT_FALSE(s.shapes.empty());
    for (const auto& c : s.shapes) EXPECT_TRUE(c.within_3_sigma) << c.shape << " z=" << c.z_score;
    double total = 0;
    for (const auto& c : s.shapes) total += c.expected;
    EXPECT_NEAR(total, 1.0, 1e-2);
    // Root offspring under p = 2 on this law: both children carry types summing to 2, never a leaf.
    EXPECT_EQ(s.z_counts[1].count(0), 0U);
    std::ostringstream csv;
    write_spine_csv(csv, s);
    EXPECT_EQ(csv.str().rfind("section,generation,key,value\n", 0), 0U);
}

TEST(Sampling, RootChildCountIsSizeBiasedForPOne)
{
    const SpineLaw<Rational> law(q_super, 1);
    const auto s = spine_statistics(law, 1, 20000, 5, 1);
    const double N = 20000;
    for (std::size_t k = 1; k <= 2; ++k) {
        const double expected = static_cast<double>(k) * to_double(q_super.prob(k)) / 1.25;
        const double observed = static_cast<double>(s.z_counts[1].count(k) ? s.z_counts[1].at(k) : 0) / N;
        EXPECT_NEAR(observed, expected, 3 * std::sqrt(expected * (1 - expected) / N));
    }
}
