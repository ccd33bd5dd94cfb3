#pragma once

// Hilbert polynomials, integer compositions and the exact identities built
// from them.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gwpen/scalar.hpp"

namespace gwpen {

/// H_p(x) = x (x-1) ... (x-p+1) / p!, with H_0 = 1. Equals C(x, p) on the
/// nonnegative integers and vanishes at 0..p-1.
template <Scalar T>
T hilbert(unsigned p, const T& x)
{
    T prod(1);
    for (unsigned k = 0; k < p; ++k) prod = prod * (x - T(static_cast<int>(k)));
    return prod / factorial<T>(p);
}

/// An ordered decomposition of `total` into positive parts.
struct Composition {
    std::vector<unsigned> parts;

    unsigned total() const { return std::accumulate(parts.begin(), parts.end(), 0U); }
    std::size_t size() const { return parts.size(); }
    unsigned operator[](std::size_t j) const { return parts[j]; }

    friend bool operator==(const Composition&, const Composition&) = default;
    friend auto operator<=>(const Composition&, const Composition&) = default;
};

namespace detail {

inline void compositions_rec(unsigned parts_left, unsigned remaining, std::vector<unsigned>& prefix,
                             std::vector<Composition>& out)
{
    if (parts_left == 1) {
        prefix.push_back(remaining);
        out.push_back(Composition{prefix});
        prefix.pop_back();
        return;
    }
    for (unsigned first = 1; first + (parts_left - 1) <= remaining; ++first) {
        prefix.push_back(first);
        compositions_rec(parts_left - 1, remaining - first, prefix, out);
        prefix.pop_back();
    }
}

} // namespace detail

/// All compositions of p into exactly i positive parts, lexicographic order.
/// Empty when i < 1 or i > p.
inline std::vector<Composition> compositions(unsigned i, unsigned p)
{
    std::vector<Composition> out;
    if (i < 1 || i > p) return out;
    std::vector<unsigned> prefix;
    prefix.reserve(i);
    detail::compositions_rec(i, p, prefix, out);
    return out;
}

/// sums[i - 1] = sum over (n_1..n_i) in S_{i,p} of c[n_1] ... c[n_i], i = 1..p.
template <Scalar T>
std::vector<T> composition_sums(const std::vector<T>& c, unsigned p)
{
    std::vector<T> out(p, T(0));
    for (unsigned i = 1; i <= p; ++i) {
        for (const auto& comp : compositions(i, p)) {
            T prod(1);
            for (unsigned part : comp.parts) prod = prod * c.at(part);
            out[i - 1] = out[i - 1] + prod;
        }
    }
    return out;
}

/// Strictly increasing index tuples 0 <= r_1 < ... < r_i < k, lexicographic.
inline std::vector<std::vector<std::size_t>> increasing_tuples(std::size_t k, std::size_t i)
{
    std::vector<std::vector<std::size_t>> out;
    if (i > k) return out;
    if (i == 0) {
        out.emplace_back();
        return out;
    }
    std::vector<std::size_t> idx(i);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        out.push_back(idx);
        std::size_t pos = i;
        while (pos > 0 && idx[pos - 1] == k - i + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < i; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

template <Scalar T>
struct IdentityReport {
    T lhs;
    T rhs;
    bool equal = false;
};

/// Evaluates both sides of
///   H_w(t_1 + ... + t_k) = sum_{i <= w ^ k} sum_{r_1 < ... < r_i} sum_{S_{i,w}} prod_j H_{s_j}(t_{r_j})
/// exactly.
inline IdentityReport<Rational> check_somme_Hk(unsigned w, const std::vector<long long>& t)
{
    if (w < 1) throw DomainError("check_somme_Hk: w must be >= 1");
    if (t.size() < 2) throw DomainError("check_somme_Hk: need at least two summands");
    const long long total = std::accumulate(t.begin(), t.end(), 0LL);

    IdentityReport<Rational> rep;
    rep.lhs = hilbert(w, Rational(total));
    rep.rhs = 0;
    const std::size_t imax = std::min<std::size_t>(w, t.size());
    for (std::size_t i = 1; i <= imax; ++i) {
        const auto parts = compositions(static_cast<unsigned>(i), w);
        for (const auto& r : increasing_tuples(t.size(), i)) {
            for (const auto& s : parts) {
                Rational prod = 1;
                for (std::size_t j = 0; j < i; ++j) prod *= hilbert(s[j], Rational(t[r[j]]));
                rep.rhs += prod;
            }
        }
    }
    rep.equal = rep.lhs == rep.rhs;
    return rep;
}

/// Table of coefficients a_s^{(l)} indexed as table[l][s] for 1 <= s <= l <= p.
/// Entries with s > l are treated as zero.
template <Scalar T>
using CoefficientTable = std::vector<std::vector<T>>;

template <Scalar T>
T table_entry(const CoefficientTable<T>& table, unsigned s, unsigned l)
{
    if (s > l || l >= table.size() || s >= table[l].size()) return T(0);
    return table[l][s];
}

/// Checks  sum_{(l_1..l_i) in S_{i,p}} prod_j a_{s_j}^{(l_j)} = a_w^{(p)},  w = sum s_j.
/// Exact for rational tables; relative tolerance `tol` otherwise.
template <Scalar T>
IdentityReport<T> coefficient_identity(const CoefficientTable<T>& table, unsigned p, const std::vector<unsigned>& s,
                                       double tol = 1e-9)
{
    if (s.empty()) throw DomainError("coefficient_identity: empty partition");
    const unsigned w = std::accumulate(s.begin(), s.end(), 0U);
    if (w > p) throw DomainError("coefficient_identity: sum of parts exceeds p");

    IdentityReport<T> rep;
    rep.lhs = T(0);
    for (const auto& l : compositions(static_cast<unsigned>(s.size()), p)) {
        T prod(1);
        for (std::size_t j = 0; j < s.size(); ++j) prod = prod * table_entry(table, s[j], l[j]);
        rep.lhs = rep.lhs + prod;
    }
    rep.rhs = table_entry(table, w, p);
    if constexpr (is_exact_v<T>) {
        rep.equal = rep.lhs == rep.rhs;
    } else {
        const double l = to_double(rep.lhs);
        const double r = to_double(rep.rhs);
        const double scale = std::max({std::abs(l), std::abs(r), 1e-300});
        rep.equal = std::abs(l - r) <= tol * scale;
    }
    return rep;
}

} // namespace gwpen
