#pragma once

// Offspring distributions with finite support, their scalar characteristics
// (mean, extinction probability, minimal support, derivative at the fixed
// point), exact generation-size laws and the conjugation through a second
// fixed point of the generating function.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "gwpen/errors.hpp"
#include "gwpen/scalar.hpp"

namespace gwpen {

template <class T>
concept ProbScalar = std::same_as<T, double> || std::same_as<T, Rational>;

/// Float-mode tolerance on the total mass of a distribution.
inline constexpr double kNormalizationTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Polynomial helpers (coefficient vectors, lowest degree first)
// ---------------------------------------------------------------------------

template <Scalar T>
using Polynomial = std::vector<T>;

template <Scalar T>
Polynomial<T> poly_mul(const Polynomial<T>& a, const Polynomial<T>& b)
{
    if (a.empty() || b.empty()) return {};
    Polynomial<T> out(a.size() + b.size() - 1, T(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == T(0)) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] = out[i + j] + a[i] * b[j];
    }
    return out;
}

template <Scalar T>
T poly_eval(const Polynomial<T>& c, const T& x)
{
    T acc(0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// ---------------------------------------------------------------------------
// OffspringDistribution
// ---------------------------------------------------------------------------

/// Probability vector (q_0, ..., q_K) on the nonnegative integers.
template <ProbScalar T>
class OffspringDistribution {
public:
    /// Validates and stores the law. Trailing zero masses are dropped (K >= 1
    /// is kept). The degenerate law q_1 = 1 is only accepted when flagged.
    explicit OffspringDistribution(std::vector<T> probs, bool allow_degenerate = false)
        : probs_(std::move(probs)), degenerate_(false)
    {
        while (probs_.size() > 2 && probs_.back() == T(0)) probs_.pop_back();
        if (probs_.size() < 2) throw DomainError("offspring law needs at least two entries (q_0, q_1, ...)");
        T total(0);
        for (const auto& p : probs_) {
            if (p < T(0)) throw DomainError("offspring law has a negative mass");
            total = total + p;
        }
        if constexpr (is_exact_v<T>) {
            if (total != T(1)) throw DomainError("offspring law does not sum to 1 (sum = " + format_scalar(total) + ")");
        } else {
            if (std::abs(total - 1.0) > kNormalizationTolerance)
                throw DomainError("offspring law does not sum to 1 within 1e-12 (sum = " + format_scalar(total) + ")");
        }
        if (probs_[1] == T(1)) {
            if (!allow_degenerate) throw DomainError("degenerate law q_1 = 1 requires the explicit degenerate flag");
            degenerate_ = true;
        }
    }

    const std::vector<T>& probs() const noexcept { return probs_; }
    std::size_t max_offspring() const noexcept { return probs_.size() - 1; }
    bool degenerate() const noexcept { return degenerate_; }

    /// q_k, zero outside the support vector.
    T prob(std::size_t k) const { return k < probs_.size() ? probs_[k] : T(0); }

    /// f(s) = sum_k q_k s^k.
    template <Scalar S>
    S pgf(const S& s) const
    {
        S acc(0);
        for (auto it = probs_.rbegin(); it != probs_.rend(); ++it) acc = acc * s + lift<S>(*it);
        return acc;
    }

    /// j-th derivative f^{(j)}(s).
    template <Scalar S>
    S derivative(unsigned j, const S& s) const
    {
        S acc(0);
        for (std::size_t k = probs_.size(); k-- > j;) {
            S falling(1);
            for (unsigned r = 0; r < j; ++r) falling = falling * S(static_cast<long long>(k - r));
            acc = acc * s + lift<S>(probs_[k]) * falling;
        }
        return acc;
    }

    T mean() const
    {
        T m(0);
        for (std::size_t k = 1; k < probs_.size(); ++k) m = m + T(static_cast<long long>(k)) * probs_[k];
        return m;
    }

    /// Smallest k with q_k > 0.
    unsigned min_support() const
    {
        for (std::size_t k = 0; k < probs_.size(); ++k)
            if (probs_[k] > T(0)) return static_cast<unsigned>(k);
        return 0;
    }

    /// Same law carried in another scalar type.
    template <Scalar U>
    std::vector<U> probs_as() const
    {
        std::vector<U> out;
        out.reserve(probs_.size());
        for (const auto& p : probs_) out.push_back(lift<U>(p));
        return out;
    }

    OffspringDistribution<double> to_float() const
    {
        if constexpr (std::is_same_v<T, double>) {
            return *this;
        } else {
            return OffspringDistribution<double>(probs_as<double>(), degenerate_);
        }
    }

    /// Coefficients of u -> 1 - f(1 - u) (no constant term; linear term = mean).
    template <Scalar S>
    Polynomial<S> complement_coefficients() const
    {
        Polynomial<S> g(probs_.size(), S(0));
        for (std::size_t j = 1; j < probs_.size(); ++j) {
            S sum(0);
            for (std::size_t k = j; k < probs_.size(); ++k)
                sum = sum + lift<S>(probs_[k]) * binomial<S>(static_cast<std::int64_t>(k), static_cast<std::int64_t>(j));
            g[j] = (j % 2 == 1) ? sum : S(0) - sum;
        }
        return g;
    }

    /// Coefficients of the generating function as a polynomial.
    Polynomial<T> polynomial() const { return probs_; }

    friend bool operator==(const OffspringDistribution& a, const OffspringDistribution& b)
    {
        return a.probs_ == b.probs_;
    }

    template <Scalar S>
    static S lift(const T& x)
    {
        if constexpr (std::is_same_v<S, T>) {
            return x;
        } else if constexpr (std::is_same_v<T, Rational>) {
            if constexpr (std::is_same_v<S, LogReal>) return LogReal(to_double(x));
            else return to_double(x);
        } else {
            return from_double<S>(x);
        }
    }

private:
    std::vector<T> probs_;
    bool degenerate_;
};

OffspringDistribution(std::vector<double>) -> OffspringDistribution<double>;
OffspringDistribution(std::vector<Rational>) -> OffspringDistribution<Rational>;

/// Builds an exact law from rational literals such as {"1/4", "1/4", "1/2"}.
inline OffspringDistribution<Rational> exact_law(const std::vector<std::string>& literals, bool allow_degenerate = false)
{
    std::vector<Rational> p;
    p.reserve(literals.size());
    for (const auto& s : literals) p.push_back(parse_rational(s));
    return OffspringDistribution<Rational>(std::move(p), allow_degenerate);
}

// ---------------------------------------------------------------------------
// Criticality
// ---------------------------------------------------------------------------

enum class Regime { subcritical, critical, supercritical_schroeder, supercritical_boettcher };

inline std::string to_string(Regime r)
{
    switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical_schroeder: return "supercritical-Schroeder";
    case Regime::supercritical_boettcher: return "supercritical-Boettcher";
    }
    return "?";
}

inline bool is_supercritical(Regime r)
{
    return r == Regime::supercritical_schroeder || r == Regime::supercritical_boettcher;
}

template <ProbScalar T>
struct Criticality {
    T mu;
    T kappa;
    /// False only in exact mode when the extinction probability is irrational;
    /// `kappa` then holds the closest double as a rational.
    bool kappa_exact = true;
    unsigned a_min = 0;
    T gamma;
    Regime regime = Regime::critical;
};

namespace detail {

/// Smallest root of f(s) = s in (0, 1) for a super-critical law with q_0 > 0.
inline double lower_fixed_point(const OffspringDistribution<double>& q)
{
    // f'(s) - 1 changes sign once on (0, 1); at that point f(s) - s < 0.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (q.derivative(1, mid) < 1.0) lo = mid;
        else hi = mid;
    }
    double a = 0.0, b = lo;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        if (q.pgf(mid) - mid > 0.0) a = mid;
        else b = mid;
    }
    double s = 0.5 * (a + b);
    for (int it = 0; it < 3; ++it) {
        const double den = q.derivative(1, s) - 1.0;
        if (den == 0.0) break;
        const double next = s - (q.pgf(s) - s) / den;
        if (!(next >= 0.0 && next < 1.0)) break;
        s = next;
    }
    return s;
}

/// Fixed point of f in (1, infinity) for a sub-critical law, if any.
inline std::optional<double> upper_fixed_point(const OffspringDistribution<double>& q)
{
    if (q.max_offspring() < 2) return std::nullopt;
    double hi = 2.0;
    while (q.derivative(1, hi) <= 1.0) {
        hi *= 2.0;
        if (hi > 1e12) return std::nullopt;
    }
    double lo = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (q.derivative(1, mid) < 1.0) lo = mid;
        else hi = mid;
    }
    const double valley = hi;
    double top = valley * 2.0;
    while (q.pgf(top) - top <= 0.0) {
        top *= 2.0;
        if (top > 1e12) return std::nullopt;
    }
    double a = valley, b = top;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        if (q.pgf(mid) - mid < 0.0) a = mid;
        else b = mid;
    }
    double s = 0.5 * (a + b);
    for (int it = 0; it < 3; ++it) {
        const double den = q.derivative(1, s) - 1.0;
        if (den == 0.0) break;
        s -= (q.pgf(s) - s) / den;
    }
    return s;
}

/// Walks the continued-fraction convergents of x and returns the first one
/// accepted by `is_root`.
inline std::optional<Rational> rational_near(double x, const std::function<bool(const Rational&)>& is_root)
{
    if (!std::isfinite(x)) return std::nullopt;
    BigInt h_prev = 1, h_prev2 = 0, k_prev = 0, k_prev2 = 1;
    double r = x;
    for (int term = 0; term < 40; ++term) {
        const double a = std::floor(r);
        const BigInt ai = BigInt(static_cast<long long>(a));
        const BigInt h = ai * h_prev + h_prev2;
        const BigInt k = ai * k_prev + k_prev2;
        const Rational candidate(h, k);
        if (is_root(candidate)) return candidate;
        if (k > BigInt(1000000000000LL)) break;
        const double frac = r - a;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
    }
    return std::nullopt;
}

} // namespace detail

/// mean, extinction probability, minimal support, f'(kappa) and regime.
template <ProbScalar T>
Criticality<T> characterize(const OffspringDistribution<T>& q)
{
    Criticality<T> c;
    c.mu = q.mean();
    c.a_min = q.min_support();

    bool sub = false, crit = false;
    if constexpr (is_exact_v<T>) {
        sub = c.mu < T(1);
        crit = c.mu == T(1);
    } else {
        sub = c.mu < 1.0 - kNormalizationTolerance;
        crit = !sub && c.mu <= 1.0 + kNormalizationTolerance;
    }

    if (q.degenerate()) {
        c.kappa = T(0);
        c.regime = Regime::critical;
    } else if (sub || crit) {
        c.kappa = T(1);
        c.regime = sub ? Regime::subcritical : Regime::critical;
    } else {
        c.regime = c.a_min >= 2 ? Regime::supercritical_boettcher : Regime::supercritical_schroeder;
        if (q.prob(0) == T(0)) {
            c.kappa = T(0);
        } else {
            const double approx = detail::lower_fixed_point(q.to_float());
            if constexpr (is_exact_v<T>) {
                auto root = detail::rational_near(approx, [&](const Rational& r) {
                    return r > 0 && r < 1 && q.pgf(r) == r;
                });
                if (root) {
                    c.kappa = *root;
                } else {
                    c.kappa = from_double<Rational>(approx);
                    c.kappa_exact = false;
                }
            } else {
                c.kappa = approx;
            }
        }
    }
    c.gamma = q.derivative(1, c.kappa);
    return c;
}

/// The fixed point of f above 1 (sub-critical law). Exact mode requires it to
/// be rational.
template <ProbScalar T>
T upper_fixed_point(const OffspringDistribution<T>& q)
{
    const auto approx = detail::upper_fixed_point(q.to_float());
    if (!approx) throw DomainError("generating function has no fixed point above 1");
    if constexpr (is_exact_v<T>) {
        auto root = detail::rational_near(*approx, [&](const Rational& r) { return r > 1 && q.pgf(r) == r; });
        if (!root) throw DomainError("fixed point above 1 is irrational; use float mode");
        return *root;
    } else {
        return *approx;
    }
}

// ---------------------------------------------------------------------------
// Generation laws
// ---------------------------------------------------------------------------

/// Default cap on the number of states of an exact generation law.
inline constexpr std::size_t kDefaultStateCap = 1'000'000;

/// Law of a sum of z independent copies of q (the z-th convolution power).
template <ProbScalar T>
std::vector<T> convolution_power(const OffspringDistribution<T>& q, std::size_t z)
{
    std::vector<T> result{T(1)};
    std::vector<T> base = q.probs();
    while (z > 0) {
        if (z & 1U) result = poly_mul(result, base);
        z >>= 1U;
        if (z > 0) base = poly_mul(base, base);
    }
    return result;
}

/// Exact law of Z_n started from one individual: entry j is P(Z_n = j).
template <ProbScalar T>
std::vector<T> generation_law(const OffspringDistribution<T>& q, unsigned n, std::size_t state_cap = kDefaultStateCap)
{
    const double states = std::pow(static_cast<double>(q.max_offspring()), static_cast<double>(n)) + 1.0;
    if (states > static_cast<double>(state_cap))
        throw ResourceError("generation_law: K^n + 1 = " + format_scalar(states) + " states exceeds the cap of " +
                            std::to_string(state_cap));
    std::vector<T> law{T(0), T(1)};
    const auto& f = q.probs();
    for (unsigned m = 0; m < n; ++m) {
        // law_{m+1}(s) = law_m(f(s)) by Horner in the polynomial f.
        std::vector<T> acc{law.back()};
        for (std::size_t j = law.size() - 1; j-- > 0;) {
            acc = poly_mul(acc, f);
            acc[0] = acc[0] + law[j];
        }
        law = std::move(acc);
    }
    return law;
}

// ---------------------------------------------------------------------------
// Conjugation
// ---------------------------------------------------------------------------

/// Sub-critical law with a fixed point kappa > 1, or super-critical law with
/// kappa in (0, 1): returns qbar_k = kappa^{k-1} q_k. Applying it twice gives
/// back q.
template <ProbScalar T>
OffspringDistribution<T> conjugate(const OffspringDistribution<T>& q)
{
    const auto c = characterize(q);
    T kappa;
    if (c.regime == Regime::subcritical) {
        kappa = upper_fixed_point(q);
    } else if (is_supercritical(c.regime)) {
        if (c.kappa == T(0)) throw DomainError("conjugate: super-critical law with q_0 = 0 has kappa = 0");
        if (!c.kappa_exact) throw DomainError("conjugate: extinction probability is irrational; use float mode");
        kappa = c.kappa;
    } else {
        throw DomainError("conjugate: critical law has no second fixed point");
    }
    std::vector<T> out(q.probs().size());
    T power = T(1) / kappa;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = power * q.probs()[k];
        power = power * kappa;
    }
    if constexpr (!is_exact_v<T>) {
        double total = 0.0;
        for (double v : out) total += v;
        for (double& v : out) v /= total;
    }
    return OffspringDistribution<T>(std::move(out));
}

/// The fixed point used by `conjugate` (kappa > 1 for sub-critical input).
template <ProbScalar T>
T conjugation_point(const OffspringDistribution<T>& q)
{
    const auto c = characterize(q);
    if (c.regime == Regime::subcritical) return upper_fixed_point(q);
    if (is_supercritical(c.regime) && c.kappa != T(0)) return c.kappa;
    throw DomainError("law has no conjugation point");
}

} // namespace gwpen
