#pragma once

// Monte Carlo sampling of truncated Galton-Watson trees. Finite laws use an
// inverse CDF; geometric and Poisson laws are available as parametric float
// samplers.

#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gwpen/errors.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/rng.hpp"
#include "gwpen/trees.hpp"

namespace gwpen {

template <class S>
concept OffspringSampler = requires(const S& s, PhiloxStream& rng) {
    { s.draw(rng) } -> std::convertible_to<unsigned>;
    { s.mean() } -> std::convertible_to<double>;
};

/// Inverse-CDF sampler for a finite-support law.
class FiniteSampler {
public:
    template <ProbScalar T>
    explicit FiniteSampler(const OffspringDistribution<T>& q) : mean_(to_double(q.mean()))
    {
        double acc = 0.0;
        for (const auto& p : q.probs()) {
            acc += to_double(p);
            cdf_.push_back(acc);
        }
        cdf_.back() = 1.0;
    }

    unsigned draw(PhiloxStream& rng) const
    {
        const double u = rng.uniform();
        unsigned k = 0;
        while (u >= cdf_[k]) ++k;
        return k;
    }

    double mean() const { return mean_; }

private:
    std::vector<double> cdf_;
    double mean_;
};

/// P(k) = (1 - r) r^k, mean r / (1 - r).
class GeometricSampler {
public:
    explicit GeometricSampler(double r) : r_(r)
    {
        if (!(r >= 0.0 && r < 1.0)) throw DomainError("geometric offspring law needs r in [0, 1)");
    }
    unsigned draw(PhiloxStream& rng) const
    {
        std::geometric_distribution<unsigned> d(1.0 - r_);
        return d(rng);
    }
    double mean() const { return r_ / (1.0 - r_); }

private:
    double r_;
};

class PoissonSampler {
public:
    explicit PoissonSampler(double lambda) : lambda_(lambda)
    {
        if (!(lambda > 0.0)) throw DomainError("Poisson offspring law needs lambda > 0");
    }
    unsigned draw(PhiloxStream& rng) const
    {
        std::poisson_distribution<unsigned> d(lambda_);
        return d(rng);
    }
    double mean() const { return lambda_; }

private:
    double lambda_;
};

struct SampleLimits {
    unsigned max_height = 64;
    std::size_t max_nodes = 2'000'000;
};

/// Generation sizes z_0..z_height of a sampled tree.
template <OffspringSampler S>
std::vector<std::size_t> sample_generation_sizes(const S& sampler, unsigned height, std::uint64_t seed,
                                                 std::uint64_t stream = 0, const SampleLimits& limits = {})
{
    if (height > limits.max_height)
        throw ResourceError("sample: height " + std::to_string(height) + " exceeds the cap " +
                            std::to_string(limits.max_height));
    PhiloxStream rng(seed, stream);
    std::vector<std::size_t> z{1};
    std::size_t total = 1;
    for (unsigned g = 0; g < height; ++g) {
        std::size_t next = 0;
        for (std::size_t i = 0; i < z.back(); ++i) next += sampler.draw(rng);
        total += next;
        z.push_back(next);
        if (total > limits.max_nodes) {
            std::vector<double> partial(z.begin(), z.end());
            throw ResourceError("sample: node count exceeds the cap " + std::to_string(limits.max_nodes), partial);
        }
    }
    return z;
}

/// A tree distributed as r_height(tau), drawn generation by generation from
/// the stream (seed, stream). Deterministic for fixed arguments.
template <OffspringSampler S>
UlamTree sample_gw_with(const S& sampler, unsigned height, std::uint64_t seed, std::uint64_t stream = 0,
                        const SampleLimits& limits = {})
{
    if (height > limits.max_height)
        throw ResourceError("sample_gw: height " + std::to_string(height) + " exceeds the cap " +
                            std::to_string(limits.max_height));
    PhiloxStream rng(seed, stream);
    // counts[g][i] = child count of the i-th node of generation g (breadth-first).
    std::vector<std::vector<unsigned>> counts;
    std::size_t width = 1, total = 1;
    for (unsigned g = 0; g < height; ++g) {
        std::vector<unsigned> row(width);
        std::size_t next = 0;
        for (auto& k : row) {
            k = sampler.draw(rng);
            next += k;
        }
        counts.push_back(std::move(row));
        total += next;
        if (total > limits.max_nodes) {
            std::vector<double> partial{1.0};
            for (const auto& r : counts) {
                double s = 0;
                for (unsigned k : r) s += k;
                partial.push_back(s);
            }
            throw ResourceError("sample_gw: node count exceeds the cap " + std::to_string(limits.max_nodes), partial);
        }
        width = next;
        if (width == 0) break;
    }
    counts.emplace_back(width, 0U);

    // Breadth-first rows to preorder: children of node i in generation g start
    // at the prefix sum of counts[g][0..i).
    std::vector<std::vector<std::size_t>> first_child(counts.size());
    for (std::size_t g = 0; g < counts.size(); ++g) {
        first_child[g].resize(counts[g].size());
        std::size_t acc = 0;
        for (std::size_t i = 0; i < counts[g].size(); ++i) {
            first_child[g][i] = acc;
            acc += counts[g][i];
        }
    }
    std::vector<unsigned> preorder;
    preorder.reserve(total);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [g, i] = stack.back();
        stack.pop_back();
        const unsigned k = counts[g][i];
        preorder.push_back(k);
        for (unsigned c = k; c-- > 0;) stack.emplace_back(g + 1, first_child[g][i] + c);
    }
    return UlamTree::from_preorder_counts(0, std::move(preorder));
}

template <ProbScalar T>
UlamTree sample_gw(const OffspringDistribution<T>& q, unsigned height, std::uint64_t seed, std::uint64_t stream = 0,
                   const SampleLimits& limits = {})
{
    return sample_gw_with(FiniteSampler(q), height, seed, stream, limits);
}

} // namespace gwpen
