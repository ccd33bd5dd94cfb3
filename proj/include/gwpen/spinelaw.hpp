#pragma once

// The multi-type inhomogeneous Galton-Watson law whose nodes carry types
// 0..p: exact offspring probabilities, tree probabilities, shape marginals,
// sampling, and the check that its shape marginal equals M_{n,n0} dP.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gwpen/combinatorics.hpp"
#include "gwpen/errors.hpp"
#include "gwpen/limits.hpp"
#include "gwpen/martingales.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/rng.hpp"
#include "gwpen/sampling.hpp"
#include "gwpen/scalar.hpp"
#include "gwpen/trees.hpp"

namespace gwpen {

/// Typed children of one node: k = types.size().
struct OffspringEvent {
    std::vector<unsigned> types;

    std::size_t k() const noexcept { return types.size(); }
    unsigned type_sum() const
    {
        unsigned s = 0;
        for (unsigned t : types) s += t;
        return s;
    }
    friend bool operator==(const OffspringEvent&, const OffspringEvent&) = default;
};

namespace detail {

/// All sequences of k nonnegative integers summing to l, lexicographic.
inline void weak_compositions(unsigned k, unsigned l, std::vector<unsigned>& prefix,
                              std::vector<std::vector<unsigned>>& out)
{
    if (k == 0) {
        if (l == 0) out.push_back(prefix);
        return;
    }
    if (k == 1) {
        prefix.push_back(l);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (unsigned first = 0; first <= l; ++first) {
        prefix.push_back(first);
        weak_compositions(k - 1, l - first, prefix, out);
        prefix.pop_back();
    }
}

inline std::vector<std::vector<unsigned>> weak_compositions(unsigned k, unsigned l)
{
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> prefix;
    weak_compositions(k, l, prefix, out);
    return out;
}

} // namespace detail

template <ProbScalar T>
class SpineLaw {
public:
    /// Root of type p at height n0. Exact (T = Rational) laws need a = 0.
    SpineLaw(const OffspringDistribution<T>& q, unsigned p, double a = 0.0, unsigned n0 = 0, LaplaceOptions opts = {})
        : q_(q), p_(p), a_(a), n0_(n0), mu_(q.mean())
    {
        if (!is_supercritical(characterize(q).regime)) throw DomainError("spine law needs a super-critical law");
        const unsigned order = std::max(p, 1U);
        if constexpr (is_exact_v<T>) {
            if (a != 0.0) throw DomainError("spine law with a > 0 needs float mode");
            (void)opts;
            phi_ = std::make_shared<const PhiTable<T>>(q, order);
        } else {
            phi_ = std::make_shared<const PhiTable<T>>(q, a, order, opts);
        }
    }

    const OffspringDistribution<T>& law() const noexcept { return q_; }
    unsigned p() const noexcept { return p_; }
    double a() const noexcept { return a_; }
    unsigned n0() const noexcept { return n0_; }
    const PhiTable<T>& phi() const noexcept { return *phi_; }

    /// Probability that a node of type l at height n has exactly the typed
    /// children `event` (in this order):
    ///   q_k (l! / mu^l) prod_j phi^{(l_j)}(a/mu^{n+1}) / l_j!  /  phi^{(l)}(a/mu^n).
    /// A childless node of type l > 0 has probability 0.
    T offspring_probability(unsigned l, unsigned n, const OffspringEvent& event) const
    {
        if (l > p_) throw DomainError("offspring_probability: type exceeds the root type");
        if (event.k() == 0) {
            if (l > 0) return T(0);
        } else if (event.type_sum() != l) {
            throw DomainError("offspring_probability: child types sum to " + std::to_string(event.type_sum()) +
                              ", parent type is " + std::to_string(l));
        }
        const T qk = q_.prob(event.k());
        if (qk == T(0)) return T(0);
        const auto here = phi_->at(n);
        const auto next = phi_->at(n + 1);
        T prod = qk * factorial<T>(l) / ipow(mu_, l) / here[l];
        for (unsigned t : event.types) prod = prod * next[t] / factorial<T>(t);
        return prod;
    }

    /// Every typed event of positive probability for (l, n), with its
    /// probability, ordered by k then lexicographically by types.
    std::vector<std::pair<OffspringEvent, T>> offspring_events(unsigned l, unsigned n) const
    {
        std::vector<std::pair<OffspringEvent, T>> out;
        for (std::size_t k = 0; k <= q_.max_offspring(); ++k) {
            if (q_.prob(k) == T(0)) continue;
            for (auto& types : detail::weak_compositions(static_cast<unsigned>(k), l)) {
                OffspringEvent e{std::move(types)};
                T pr = offspring_probability(l, n, e);
                if (pr != T(0)) out.emplace_back(std::move(e), pr);
            }
        }
        return out;
    }

    /// Total mass of the typed events for (l, n); equals 1.
    T normalization(unsigned l, unsigned n) const
    {
        T total(0);
        for (const auto& [e, pr] : offspring_events(l, n)) total = total + pr;
        return total;
    }

    /// Probability that the truncation at `height` equals the typed tree t.
    /// Requires the root to sit at n0 with type p; nodes at `height` are leaves
    /// of the truncation and their children are not constrained.
    T exact_Q(const TypedTree& t, unsigned height) const
    {
        const UlamTree& tree = t.tree();
        if (tree.root_height() != n0_) throw DomainError("exact_Q: tree must be rooted at n0");
        if (t.root_type() != p_) throw DomainError("exact_Q: root must carry type p");
        if (tree.height() > height) return T(0);
        std::size_t pos = 0;
        return typed_product(t, height, pos);
    }

    /// Q(r_height(tau) = t) for an untyped shape: the sum of exact_Q over all
    /// typings, computed by dynamic programming over subtrees.
    T shape_probability(const UlamTree& t, unsigned height) const
    {
        if (t.root_height() != n0_) throw DomainError("shape_probability: tree must be rooted at n0");
        if (t.height() > height) return T(0);
        std::size_t pos = 0;
        return shape_rec(t, height, pos)[p_];
    }

private:
    T typed_product(const TypedTree& t, unsigned height, std::size_t& pos) const
    {
        const UlamTree& tree = t.tree();
        const std::size_t me = pos++;
        const unsigned k = tree.child_count(me);
        const unsigned depth = tree.depth(me);
        if (depth >= height) return T(1);
        OffspringEvent e;
        T sub(1);
        for (unsigned c = 0; c < k; ++c) {
            e.types.push_back(t.type_at(pos));
            sub = sub * typed_product(t, height, pos);
        }
        return offspring_probability(t.type_at(me), depth, e) * sub;
    }

    /// v[l] = probability of the subtree shape below the node at `pos` given
    /// that the node has type l.
    std::vector<T> shape_rec(const UlamTree& t, unsigned height, std::size_t& pos) const
    {
        const std::size_t me = pos++;
        const unsigned depth = t.depth(me);
        const unsigned k = t.child_count(me);
        if (depth >= height) return std::vector<T>(p_ + 1, T(1));
        std::vector<std::vector<T>> kids;
        for (unsigned c = 0; c < k; ++c) kids.push_back(shape_rec(t, height, pos));
        std::vector<T> out(p_ + 1, T(0));
        for (unsigned l = 0; l <= p_; ++l) {
            for (const auto& types : detail::weak_compositions(k, l)) {
                OffspringEvent e{types};
                T pr = offspring_probability(l, depth, e);
                if (pr == T(0)) continue;
                for (unsigned c = 0; c < k; ++c) pr = pr * kids[c][types[c]];
                out[l] = out[l] + pr;
            }
        }
        return out;
    }

    OffspringDistribution<T> q_;
    unsigned p_;
    double a_;
    unsigned n0_;
    T mu_;
    std::shared_ptr<const PhiTable<T>> phi_;
};

// ---------------------------------------------------------------------------
// Measure equality on enumerated shapes
// ---------------------------------------------------------------------------

template <ProbScalar T>
struct MeasureEqualityReport {
    std::size_t shapes_checked = 0;
    bool exact = is_exact_v<T>;
    bool equal = true;  // exact equality (exact mode) or max_gap <= tol
    double max_gap = 0.0;
    T sum_Q = T(0);
    T sum_MP = T(0);
    std::string worst_shape;  // text form of the shape with the largest gap
};

namespace detail {

template <ProbScalar T, class Rhs>
MeasureEqualityReport<T> compare_shapes(const SpineLaw<T>& law, unsigned n, unsigned max_children, const Rhs& rhs,
                                        double tol, const EnumerationLimits& limits)
{
    MeasureEqualityReport<T> rep;
    // Shapes with a node of more than K children have probability 0 on both sides.
    max_children = std::min(max_children, static_cast<unsigned>(law.law().max_offspring()));
    for (const auto& t : enumerate_trees(n, max_children, law.n0(), limits)) {
        const T lhs = law.shape_probability(t, n);
        const T right = rhs(t);
        rep.sum_Q = rep.sum_Q + lhs;
        rep.sum_MP = rep.sum_MP + right;
        ++rep.shapes_checked;
        const double gap = std::abs(to_double(lhs - right));
        bool ok;
        if constexpr (is_exact_v<T>) ok = lhs == right;
        else ok = gap <= tol;
        if (!ok) rep.equal = false;
        if (gap > rep.max_gap || (!ok && rep.worst_shape.empty())) {
            rep.max_gap = std::max(rep.max_gap, gap);
            rep.worst_shape = t.to_string();
        }
    }
    return rep;
}

} // namespace detail

/// For every shape t of height <= n (rooted at n0, child counts <=
/// max_children): compares Q(r_n = t) with M_{n,n0}(z_n(t)) P(r_n = t).
template <ProbScalar T>
MeasureEqualityReport<T> verify_measure_equality(const SpineLaw<T>& law, unsigned n, unsigned max_children,
                                                 double tol = 1e-8, const EnumerationLimits& limits = {},
                                                 LaplaceOptions opts = {})
{
    if (n < law.n0()) throw DomainError("verify_measure_equality: n below n0");
    const auto M = MartingaleSpec<T>::two_index(law.law(), law.p(), law.a(), law.n0(), opts);
    return detail::compare_shapes(
        law, n, max_children,
        [&](const UlamTree& t) { return M.evaluate(n, t.generation_size(n)) * gw_probability(law.law(), t, n); }, tol,
        limits);
}

/// Sub-critical q with a fixed point kappa > 1: the spine law built on the
/// conjugate law against kappa^{Z_n - 1} Gbar_n(Z_n) / f'(kappa)^{pn} dP_q.
template <ProbScalar T>
MeasureEqualityReport<T> verify_conjugate_spine(const OffspringDistribution<T>& q, unsigned p, double a, unsigned n,
                                                unsigned max_children, double tol = 1e-8,
                                                const EnumerationLimits& limits = {}, LaplaceOptions opts = {})
{
    const SpineLaw<T> law(conjugate(q), p, a, 0, opts);
    const auto M = MartingaleSpec<T>::conjugate_penalized(q, p, a, opts);
    return detail::compare_shapes(
        law, n, max_children,
        [&](const UlamTree& t) { return M.evaluate(n, t.generation_size(n)) * gw_probability(q, t, n); }, tol, limits);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Inverse-CDF tables over typed offspring events, built lazily per (l, n).
template <ProbScalar T>
class SpineSampler {
public:
    explicit SpineSampler(const SpineLaw<T>& law) : law_(law) {}

    struct Table {
        std::vector<OffspringEvent> events;
        std::vector<double> cdf;
    };

    const Table& table(unsigned l, unsigned n) const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_pair(l, n);
        auto it = tables_.find(key);
        if (it != tables_.end()) return *it->second;
        auto t = std::make_unique<Table>();
        double acc = 0.0;
        for (auto& [e, pr] : law_.offspring_events(l, n)) {
            acc += to_double(pr);
            t->events.push_back(e);
            t->cdf.push_back(acc);
        }
        if (t->events.empty()) throw DomainError("spine sampler: no offspring event for a type-" + std::to_string(l) + " node");
        for (double& c : t->cdf) c /= acc;
        t->cdf.back() = 1.0;
        return *tables_.emplace(key, std::move(t)).first->second;
    }

    const OffspringEvent& draw(unsigned l, unsigned n, PhiloxStream& rng) const
    {
        const Table& t = table(l, n);
        const double u = rng.uniform();
        const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
        return t.events[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - t.cdf.begin(),
                                                                          static_cast<std::ptrdiff_t>(t.cdf.size()) - 1))];
    }

    /// A typed tree distributed as the truncation at `height` of the spine
    /// law, from the stream (seed, stream).
    TypedTree sample(unsigned height, std::uint64_t seed, std::uint64_t stream = 0, const SampleLimits& limits = {}) const
    {
        const unsigned n0 = law_.n0();
        if (height < n0) throw DomainError("sample_spine_tree: height below n0");
        if (height - n0 > limits.max_height)
            throw ResourceError("sample_spine_tree: height exceeds the cap " + std::to_string(limits.max_height));
        PhiloxStream rng(seed, stream);
        // Breadth-first rows of (type, child count).
        std::vector<std::vector<unsigned>> types{{law_.p()}};
        std::vector<std::vector<unsigned>> counts;
        std::size_t total = 1;
        for (unsigned g = n0; g < height; ++g) {
            const auto& row = types.back();
            std::vector<unsigned> next_types, row_counts;
            row_counts.reserve(row.size());
            for (unsigned l : row) {
                const OffspringEvent& e = draw(l, g, rng);
                row_counts.push_back(static_cast<unsigned>(e.k()));
                next_types.insert(next_types.end(), e.types.begin(), e.types.end());
            }
            total += next_types.size();
            if (total > limits.max_nodes) {
                std::vector<double> partial;
                for (const auto& r : types) partial.push_back(static_cast<double>(r.size()));
                partial.push_back(static_cast<double>(next_types.size()));
                throw ResourceError("sample_spine_tree: node count exceeds the cap " + std::to_string(limits.max_nodes),
                                    partial);
            }
            counts.push_back(std::move(row_counts));
            types.push_back(std::move(next_types));
            if (types.back().empty()) break;
        }
        counts.emplace_back(types.back().size(), 0U);

        std::vector<std::vector<std::size_t>> first_child(counts.size());
        for (std::size_t g = 0; g < counts.size(); ++g) {
            first_child[g].resize(counts[g].size());
            std::size_t acc = 0;
            for (std::size_t i = 0; i < counts[g].size(); ++i) {
                first_child[g][i] = acc;
                acc += counts[g][i];
            }
        }
        std::vector<unsigned> preorder, preorder_types;
        preorder.reserve(total);
        preorder_types.reserve(total);
        std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            const auto [g, i] = stack.back();
            stack.pop_back();
            const unsigned k = counts[g][i];
            preorder.push_back(k);
            preorder_types.push_back(types[g][i]);
            for (unsigned c = k; c-- > 0;) stack.emplace_back(g + 1, first_child[g][i] + c);
        }
        return TypedTree(UlamTree::from_preorder_counts(n0, std::move(preorder)), std::move(preorder_types));
    }

private:
    const SpineLaw<T>& law_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<unsigned, unsigned>, std::unique_ptr<Table>> tables_;
};

template <ProbScalar T>
TypedTree sample_spine_tree(const SpineLaw<T>& law, unsigned height, std::uint64_t seed, std::uint64_t stream = 0,
                            const SampleLimits& limits = {})
{
    return SpineSampler<T>(law).sample(height, seed, stream, limits);
}

// ---------------------------------------------------------------------------
// Empirical statistics
// ---------------------------------------------------------------------------

struct ShapeComparison {
    std::string shape;
    double expected = 0.0;
    double observed = 0.0;
    double sigma = 0.0;
    double z_score = 0.0;
    bool within_3_sigma = true;
};

struct SpineSummary {
    std::size_t n_samples = 0;
    unsigned height = 0;
    unsigned shape_level = 0;
    /// Samples in which some generation's total type mass differs from p.
    std::size_t type_mass_violations = 0;
    /// z_counts[g][z] = number of samples with Z_{n0+g} = z.
    std::vector<std::map<std::size_t, std::size_t>> z_counts;
    /// mean_type_count[g][l] = average number of type-l nodes at generation n0+g.
    std::vector<std::vector<double>> mean_type_count;
    std::unordered_map<UlamTree, std::size_t, UlamTreeHash> shape_counts;
    std::vector<ShapeComparison> shapes;  // shapes with exact probability >= min_probability
    bool all_within_3_sigma = true;
};

/// Samples n_samples trees (sample i uses stream i of `seed`), records
/// generation sizes, type counts and the empirical law of the shape truncated
/// at n0 + shape_level, and compares the latter with the exact shape marginal.
template <ProbScalar T>
SpineSummary spine_statistics(const SpineLaw<T>& law, unsigned height, std::size_t n_samples, std::uint64_t seed,
                              unsigned shape_level = 2, double min_probability = 1e-3,
                              const SampleLimits& limits = {})
{
    const unsigned n0 = law.n0();
    const unsigned levels = height - n0;
    SpineSummary s;
    s.n_samples = n_samples;
    s.height = height;
    s.shape_level = std::min(shape_level, levels);
    s.z_counts.resize(levels + 1);
    s.mean_type_count.assign(levels + 1, std::vector<double>(law.p() + 1, 0.0));
    const SpineSampler<T> sampler(law);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const TypedTree t = sampler.sample(height, seed, i, limits);
        bool ok = true;
        for (unsigned g = 0; g <= levels; ++g) {
            const std::size_t z = t.tree().generation_size(n0 + g);
            ++s.z_counts[g][z];
            for (unsigned l = 0; l <= law.p(); ++l)
                s.mean_type_count[g][l] += static_cast<double>(t.type_count(n0 + g, l));
            if (t.type_mass(n0 + g) != law.p()) ok = false;
        }
        if (!ok) ++s.type_mass_violations;
        ++s.shape_counts[t.tree().restrict(n0 + s.shape_level)];
    }
    for (auto& row : s.mean_type_count)
        for (double& v : row) v /= static_cast<double>(std::max<std::size_t>(n_samples, 1));

    const auto K = static_cast<unsigned>(law.law().max_offspring());
    EnumerationLimits el;
    el.max_children = std::max(el.max_children, K);
    el.max_levels = std::max(el.max_levels, s.shape_level);
    for (const auto& shape : enumerate_trees(n0 + s.shape_level, K, n0, el)) {
        const double expected = to_double(law.shape_probability(shape, n0 + s.shape_level));
        if (expected < min_probability) continue;
        ShapeComparison c;
        c.shape = shape.to_string();
        c.expected = expected;
        const auto it = s.shape_counts.find(shape);
        const double count = it == s.shape_counts.end() ? 0.0 : static_cast<double>(it->second);
        const auto N = static_cast<double>(n_samples);
        c.observed = count / N;
        c.sigma = std::sqrt(expected * (1.0 - expected) / N);
        c.z_score = c.sigma > 0 ? (c.observed - expected) / c.sigma : 0.0;
        c.within_3_sigma = std::abs(c.z_score) <= 3.0;
        if (!c.within_3_sigma) s.all_within_3_sigma = false;
        s.shapes.push_back(c);
    }
    return s;
}

/// CSV: section,generation,key,value rows; a header row is always written.
inline void write_spine_csv(std::ostream& out, const SpineSummary& s)
{
    out << "section,generation,key,value\n";
    for (std::size_t g = 0; g < s.z_counts.size(); ++g)
        for (const auto& [z, c] : s.z_counts[g]) out << "z_count," << g << ',' << z << ',' << c << '\n';
    for (std::size_t g = 0; g < s.mean_type_count.size(); ++g)
        for (std::size_t l = 0; l < s.mean_type_count[g].size(); ++l)
            out << "mean_type_count," << g << ',' << l << ',' << format_scalar(s.mean_type_count[g][l]) << '\n';
    for (const auto& c : s.shapes) {
        out << "shape_expected," << s.shape_level << ",\"" << c.shape << "\"," << format_scalar(c.expected) << '\n';
        out << "shape_observed," << s.shape_level << ",\"" << c.shape << "\"," << format_scalar(c.observed) << '\n';
    }
    out << "type_mass_violations,," << "," << s.type_mass_violations << '\n';
}

} // namespace gwpen
