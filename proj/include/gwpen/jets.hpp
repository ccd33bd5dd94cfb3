#pragma once

// Truncated Taylor expansions ("jets") and their composition. Iterating the
// composition gives f_n(s) and every derivative f_n^{(j)}(s) at O(n p^2) cost.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gwpen/combinatorics.hpp"
#include "gwpen/errors.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/scalar.hpp"

namespace gwpen {

/// Thrown by the double-precision jet iteration when a coefficient falls
/// below kUnderflowThreshold; iterate_jet_adaptive switches to LogReal instead.
class UnderflowError : public ResourceError {
public:
    using ResourceError::ResourceError;
};

inline constexpr double kUnderflowThreshold = 1e-280;
inline constexpr double kBaseTolerance = 1e-12;

/// Order-p jet of g at `base`: coeffs[j] = g^{(j)}(base) / j!.
template <Scalar T>
struct TaylorJet {
    T base{};
    std::vector<T> coeffs;

    unsigned order() const { return static_cast<unsigned>(coeffs.size()) - 1; }
    const T& value() const { return coeffs.front(); }
    T derivative(unsigned j) const { return coeffs.at(j) * factorial<T>(j); }

    static TaylorJet identity(const T& s, unsigned order)
    {
        TaylorJet j{s, std::vector<T>(order + 1, T(0))};
        j.coeffs[0] = s;
        if (order >= 1) j.coeffs[1] = T(1);
        return j;
    }

    friend bool operator==(const TaylorJet& a, const TaylorJet& b)
    {
        return a.base == b.base && a.coeffs == b.coeffs;
    }
};

template <Scalar T>
TaylorJet<LogReal> to_log_jet(const TaylorJet<T>& j)
{
    TaylorJet<LogReal> out;
    out.base = LogReal(to_double(j.base));
    for (const auto& c : j.coeffs) out.coeffs.emplace_back(to_double(c));
    return out;
}

namespace detail {

/// Product of two truncated series of the same order.
template <Scalar T>
std::vector<T> series_mul(const std::vector<T>& a, const std::vector<T>& b)
{
    const std::size_t n = a.size();
    std::vector<T> out(n, T(0));
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] == T(0)) continue;
        for (std::size_t j = 0; i + j < n; ++j) out[i + j] = out[i + j] + a[i] * b[j];
    }
    return out;
}

template <Scalar T>
bool bases_match(const T& a, const T& b, double tol)
{
    if constexpr (is_exact_v<T>) {
        (void)tol;
        return a == b;
    } else if constexpr (std::is_same_v<T, LogReal>) {
        if (a == b) return true;
        const LogReal diff = abs_value(a - b);
        const LogReal scale = std::max(abs_value(a), abs_value(b));
        return diff <= LogReal(tol) * scale;
    } else {
        return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
    }
}

} // namespace detail

/// Jet at x of the polynomial with coefficients `poly`:
/// c_j = sum_k poly_k C(k, j) x^{k-j}.
template <Scalar T>
TaylorJet<T> jet_of_polynomial(const std::vector<T>& poly, const T& x, unsigned order)
{
    TaylorJet<T> j{x, std::vector<T>(order + 1, T(0))};
    for (unsigned d = 0; d <= order && d < poly.size(); ++d) {
        T acc(0);
        for (std::size_t k = poly.size(); k-- > d;)
            acc = acc * x + poly[k] * binomial<T>(static_cast<std::int64_t>(k), d);
        j.coeffs[d] = acc;
    }
    return j;
}

/// Jet of the generating function f at x.
template <Scalar S, ProbScalar T>
TaylorJet<S> jet_of_f(const OffspringDistribution<T>& q, const S& x, unsigned order)
{
    return jet_of_polynomial(q.template probs_as<S>(), x, order);
}

/// Jet of outer∘inner at inner.base. Requires outer.base == inner.value()
/// (exactly for rationals, to relative `tol` otherwise) and equal orders.
/// Horner evaluation in the truncated series ring.
template <Scalar T>
TaylorJet<T> compose(const TaylorJet<T>& outer, const TaylorJet<T>& inner, double tol = kBaseTolerance)
{
    if (outer.coeffs.size() != inner.coeffs.size()) throw DomainError("compose: jets of different orders");
    if (!detail::bases_match(outer.base, inner.value(), tol))
        throw DomainError("compose: outer base point " + format_scalar(outer.base) + " differs from inner value " +
                          format_scalar(inner.value()));
    std::vector<T> h = inner.coeffs;
    h[0] = T(0);
    std::vector<T> acc(h.size(), T(0));
    acc[0] = outer.coeffs.back();
    for (std::size_t i = outer.coeffs.size() - 1; i-- > 0;) {
        acc = detail::series_mul(acc, h);
        acc[0] = acc[0] + outer.coeffs[i];
    }
    return TaylorJet<T>{inner.base, std::move(acc)};
}

/// Same result as `compose`, computed from the explicit composition sum
///   c_p = sum_{i=1}^{p} outer_i sum_{S_{i,p}} prod_j inner_{n_j}.
template <Scalar T>
TaylorJet<T> compose_explicit(const TaylorJet<T>& outer, const TaylorJet<T>& inner, double tol = kBaseTolerance)
{
    if (outer.coeffs.size() != inner.coeffs.size()) throw DomainError("compose: jets of different orders");
    if (!detail::bases_match(outer.base, inner.value(), tol))
        throw DomainError("compose: base point mismatch");
    const unsigned order = inner.order();
    TaylorJet<T> out{inner.base, std::vector<T>(order + 1, T(0))};
    out.coeffs[0] = outer.coeffs[0];
    for (unsigned p = 1; p <= order; ++p) {
        T total(0);
        for (unsigned i = 1; i <= p; ++i) {
            T inner_sum(0);
            for (const auto& c : compositions(i, p)) {
                T prod(1);
                for (unsigned n : c.parts) prod = prod * inner.coeffs[n];
                inner_sum = inner_sum + prod;
            }
            total = total + outer.coeffs[i] * inner_sum;
        }
        out.coeffs[p] = total;
    }
    return out;
}

/// Multiplies coefficient j by lambda^j (jet in the variable w = (s - base) / lambda).
template <Scalar T>
TaylorJet<T> scaled(TaylorJet<T> j, const T& lambda)
{
    T power(1);
    for (auto& c : j.coeffs) {
        c = c * power;
        power = power * lambda;
    }
    return j;
}

namespace detail {

inline bool below_threshold(const TaylorJet<double>& j)
{
    for (double c : j.coeffs)
        if (std::abs(c) < kUnderflowThreshold) return true;
    return false;
}

inline bool log_jet_underflows(const TaylorJet<LogReal>& j)
{
    const double limit = std::log(kUnderflowThreshold);
    for (const auto& c : j.coeffs)
        if (!c.is_zero() && c.log_abs() < limit) return true;
    return false;
}

inline void check_finite(const TaylorJet<double>& j)
{
    for (double c : j.coeffs)
        if (!std::isfinite(c)) throw ResourceError("jet iteration overflowed; use the adaptive iteration");
}

} // namespace detail

/// Jet of f_n at s: J_0 = identity, J_{m+1} = jet_of_f(value(J_m)) ∘ J_m.
/// Rational mode fails once a coefficient exceeds `bit_cap` bits; double mode
/// fails with UnderflowError instead of silently producing zeros.
template <Scalar S, ProbScalar T>
TaylorJet<S> iterate_jet(const OffspringDistribution<T>& q, unsigned n, const S& s, unsigned order,
                         std::size_t bit_cap = kDefaultBitCap)
{
    const auto probs = q.template probs_as<S>();
    TaylorJet<S> j = TaylorJet<S>::identity(s, order);
    for (unsigned m = 0; m < n; ++m) {
        TaylorJet<S> next = compose(jet_of_polynomial(probs, j.value(), order), j);
        if constexpr (is_exact_v<S>) {
            for (const auto& c : next.coeffs) check_size(c, bit_cap);
        } else if constexpr (std::is_same_v<S, double>) {
            detail::check_finite(next);
            if (detail::below_threshold(next)) {
                // Exact zeros can be structural; confirm with a log-magnitude step.
                const auto probe = compose(jet_of_polynomial(q.template probs_as<LogReal>(), LogReal(j.value()), order),
                                           to_log_jet(j));
                if (detail::log_jet_underflows(probe))
                    throw UnderflowError("f_" + std::to_string(m + 1) +
                                         " jet underflows double precision; use iterate_jet_adaptive");
            }
        }
        j = std::move(next);
    }
    return j;
}

/// Like iterate_jet<double>, but switches to sign/log-magnitude coefficients
/// as soon as any magnitude drops below 1e-280.
template <ProbScalar T>
TaylorJet<LogReal> iterate_jet_adaptive(const OffspringDistribution<T>& q, unsigned n, double s, unsigned order,
                                        bool* switched = nullptr)
{
    const auto probs_d = q.template probs_as<double>();
    const auto probs_l = q.template probs_as<LogReal>();
    TaylorJet<double> jd = TaylorJet<double>::identity(s, order);
    unsigned m = 0;
    bool in_log = false;
    TaylorJet<LogReal> jl;
    for (; m < n; ++m) {
        TaylorJet<double> next = compose(jet_of_polynomial(probs_d, jd.value(), order), jd);
        detail::check_finite(next);
        if (detail::below_threshold(next)) {
            auto probe = compose(jet_of_polynomial(probs_l, LogReal(jd.value()), order), to_log_jet(jd));
            if (detail::log_jet_underflows(probe)) {
                jl = std::move(probe);
                in_log = true;
                ++m;
                break;
            }
        }
        jd = std::move(next);
    }
    if (switched) *switched = in_log;
    if (!in_log) return to_log_jet(jd);
    for (; m < n; ++m) jl = compose(jet_of_polynomial(probs_l, jl.value(), order), jl);
    return jl;
}

/// Jet of f_n at s > 0 stored as log f_n(s) plus the ratios
/// r_k = f_n^{(k)}(s) / (k! f_n(s)). Both stay in double range even when
/// f_n(s) is doubly-exponentially small.
struct RelativeJet {
    double log_value = 0.0;
    std::vector<double> ratios;  ///< ratios[0] == 1

    unsigned order() const { return static_cast<unsigned>(ratios.size()) - 1; }

    TaylorJet<LogReal> to_log_jet(double base) const
    {
        TaylorJet<LogReal> j;
        j.base = LogReal(base);
        for (double r : ratios) {
            if (r == 0.0) j.coeffs.emplace_back(0.0);
            else j.coeffs.push_back(LogReal::from_log(r > 0 ? 1 : -1, log_value + std::log(std::abs(r))));
        }
        return j;
    }
};

/// Iterates f in relative form: with x = f_m(s) and rho(t) = sum_{k>=1} r_k t^k,
/// f(x (1 + rho)) = f(x) sum_i e_i rho^i where e_i = f^{(i)}(x) x^i / (i! f(x))
/// is computed from normalised weights q_k x^k / f(x).
template <ProbScalar T>
RelativeJet iterate_jet_relative(const OffspringDistribution<T>& q, unsigned n, double s, unsigned order)
{
    if (!(s > 0.0)) throw DomainError("iterate_jet_relative: s must be positive");
    const auto probs = q.template probs_as<double>();
    RelativeJet j;
    j.log_value = std::log(s);
    j.ratios.assign(order + 1, 0.0);
    j.ratios[0] = 1.0;
    if (order >= 1) j.ratios[1] = 1.0 / s;
    std::vector<double> logw(probs.size());
    for (unsigned m = 0; m < n; ++m) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < probs.size(); ++k) {
            logw[k] = probs[k] > 0.0 ? std::log(probs[k]) + static_cast<double>(k) * j.log_value
                                     : -std::numeric_limits<double>::infinity();
            top = std::max(top, logw[k]);
        }
        double sum = 0.0;
        for (double lw : logw) sum += std::exp(lw - top);
        const double log_f = top + std::log(sum);
        std::vector<double> e(order + 1, 0.0);
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double w = std::exp(logw[k] - log_f);
            if (w == 0.0) continue;
            for (unsigned i = 0; i <= order && i <= k; ++i)
                e[i] += w * binomial<double>(static_cast<std::int64_t>(k), i);
        }
        std::vector<double> rho = j.ratios;
        rho[0] = 0.0;
        std::vector<double> acc(order + 1, 0.0);
        acc[0] = e[order];
        for (unsigned i = order; i-- > 0;) {
            acc = detail::series_mul(acc, rho);
            acc[0] += e[i];
        }
        j.log_value = log_f;
        j.ratios = std::move(acc);
        for (double r : j.ratios)
            if (!std::isfinite(r)) throw ResourceError("relative jet overflowed at order " + std::to_string(order));
    }
    return j;
}

/// Jet of h_m(v) = 1 - f_m(1 - v) at v = u0, expressed in the scaled variable
/// w = (v - u0) / scale. Working with the complement keeps full relative
/// precision when f_m is evaluated near 1; the scaling keeps derivatives of
/// order k multiplied by scale^k bounded.
template <ProbScalar T>
TaylorJet<double> complement_iterate_jet(const OffspringDistribution<T>& q, unsigned m, double u0, double scale,
                                         unsigned order)
{
    const auto g = q.template complement_coefficients<double>();
    TaylorJet<double> j = scaled(TaylorJet<double>::identity(u0, order), scale);
    for (unsigned i = 0; i < m; ++i) {
        j = compose(jet_of_polynomial(g, j.value(), order), j);
        detail::check_finite(j);
    }
    return j;
}

} // namespace gwpen
