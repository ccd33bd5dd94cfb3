#include <gtest/gtest.h>

#include <cmath>

#include "gwpen/sampling.hpp"

using namespace gwpen;

TEST(SampleGw, DegenerateChain)
{
    const auto q = exact_law({"0", "1"}, true);
    const auto t = sample_gw(q, 3, 1);
    EXPECT_EQ(t.to_string(), "(((())))");
    EXPECT_EQ(t.height(), 3U);
}

TEST(SampleGw, DeterministicPerSeedAndStream)
{
    const auto q = exact_law({"1/4", "1/4", "1/2"});
    EXPECT_EQ(sample_gw(q, 6, 9, 4), sample_gw(q, 6, 9, 4));
    int differ = 0;
    for (std::uint64_t s = 0; s < 20; ++s) differ += sample_gw(q, 6, 9, s) != sample_gw(q, 6, 10, s);
    EXPECT_GT(differ, 10);
}

TEST(SampleGw, ExtinctionFrequencyMatchesGenerationLaw)
{
    const auto q = exact_law({"1/2", "0", "1/2"});
    const double p = to_double(generation_law(q, 2)[0]);
    EXPECT_EQ(p, 0.625);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += sample_gw(q, 2, 2024, static_cast<std::uint64_t>(i)).generation_size(2) == 0;
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(SampleGw, RatioMartingaleHasMeanOne)
{
    const auto q = exact_law({"1/4", "1/4", "1/2"});
    const int n = 100000;
    const unsigned h = 5;
    const double mu = 1.25;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double w = static_cast<double>(sample_gw(q, h, 77, static_cast<std::uint64_t>(i)).generation_size(h)) /
                         std::pow(mu, h);
        sum += w;
        sq += w * w;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, 1.0, 3 * sd);
}

TEST(SampleGw, TreeAgreesWithGenerationSizes)
{
    const auto q = exact_law({"1/4", "1/4", "1/2"});
    FiniteSampler s(q);
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto t = sample_gw(q, 7, 3, i);
        const auto z = sample_generation_sizes(s, 7, 3, i);
        for (unsigned g = 0; g <= 7; ++g) EXPECT_EQ(t.generation_size(g), z[g]);
    }
}

TEST(SampleGw, NodeCapCarriesPartialSizes)
{
    const auto q = exact_law({"0", "0", "1"});
    try {
        sample_gw(q, 30, 0, 0, SampleLimits{64, 1000});
        FAIL() << "expected ResourceError";
    } catch (const ResourceError& e) {
        ASSERT_FALSE(e.partial().empty());
        EXPECT_EQ(e.partial()[0], 1.0);
        EXPECT_EQ(e.partial()[1], 2.0);
    }
    EXPECT_THROW(sample_gw(q, 100, 0), ResourceError);
}

TEST(ParametricSamplers, Means)
{
    const GeometricSampler g(0.5);
    const PoissonSampler p(1.5);
    PhiloxStream rng(5);
    double sg = 0, sp = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        sg += g.draw(rng);
        sp += p.draw(rng);
    }
    EXPECT_NEAR(sg / n, 1.0, 4 * std::sqrt(2.0 / n));
    EXPECT_NEAR(sp / n, 1.5, 4 * std::sqrt(1.5 / n));
    const auto sizes = sample_generation_sizes(p, 4, 11);
    EXPECT_EQ(sizes.size(), 5U);
}
