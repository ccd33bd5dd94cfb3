#pragma once

// The Laplace transform phi of W = lim Z_n / mu^n and its derivatives, exact
// moments of W, and the asymptotic constants C_p(s), b(s), K_p(s) of the
// derivatives of f_n.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwpen/combinatorics.hpp"
#include "gwpen/errors.hpp"
#include "gwpen/jets.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/scalar.hpp"

namespace gwpen {

// ---------------------------------------------------------------------------
// Exact moments of W
// ---------------------------------------------------------------------------

/// Taylor coefficients c_k = phi^{(k)}(0) / k!, k = 0..order, of the Laplace
/// transform of W for a super-critical law. Matching coefficients of a^k in
/// f(phi(a)) = phi(mu a) gives c_k (mu^k - mu) = R_k(c_1..c_{k-1}).
template <ProbScalar T>
std::vector<T> phi_taylor_at_zero(const OffspringDistribution<T>& q, unsigned order)
{
    const T mu = q.mean();
    if (!(mu > T(1))) throw DomainError("moments of W need a super-critical law");
    std::vector<T> c(order + 1, T(0));
    c[0] = T(1);
    if (order >= 1) c[1] = T(-1);
    const auto fjet = jet_of_f(q, T(1), order);
    for (unsigned k = 2; k <= order; ++k) {
        const TaylorJet<T> phi_jet{T(0), c};  // c_k is still 0 here
        const T rk = compose(fjet, phi_jet).coeffs[k];
        c[k] = rk / (ipow(mu, k) - mu);
        check_size(c[k]);
    }
    return c;
}

/// E[W^k], k = 0..order.
template <ProbScalar T>
std::vector<T> w_moments(const OffspringDistribution<T>& q, unsigned order)
{
    auto c = phi_taylor_at_zero(q, order);
    for (unsigned k = 0; k <= order; ++k) {
        c[k] = c[k] * factorial<T>(k);
        if (k % 2 == 1) c[k] = T(0) - c[k];
    }
    return c;
}

// ---------------------------------------------------------------------------
// LaplaceTransform
// ---------------------------------------------------------------------------

struct LaplaceOptions {
    double tol = 1e-10;          ///< Cauchy tolerance on successive iterates
    double residual_tol = 1e-8;  ///< acceptance bound for Schroeder residuals
    unsigned m_max = 600;
};

struct LaplaceValue {
    std::vector<double> values;  ///< phi^{(k)}(a), k = 0..p
    unsigned iterations = 0;
    double last_change = 0.0;
    double tail_estimate = 0.0;
};

/// phi(a) = lim_m f_m(exp(-a / mu^m)) and
/// phi^{(k)}(a) = lim_m (-1)^k mu^{-mk} f_m^{(k)}(exp(-a / mu^m)).
class LaplaceTransform {
public:
    template <ProbScalar T>
    explicit LaplaceTransform(const OffspringDistribution<T>& q, unsigned order = 4, LaplaceOptions opts = {})
        : q_(q.to_float()), order_(order), opts_(opts), mu_(to_double(q.mean()))
    {
        if (!(mu_ > 1.0 + kNormalizationTolerance)) throw DomainError("LaplaceTransform needs a super-critical law");
    }

    unsigned order() const noexcept { return order_; }
    const LaplaceOptions& options() const noexcept { return opts_; }
    double mu() const noexcept { return mu_; }
    const OffspringDistribution<double>& law() const noexcept { return q_; }

    /// Estimate at a fixed iteration depth m.
    std::vector<double> at_depth(double a, unsigned p, unsigned m) const
    {
        const double scale = std::pow(mu_, -static_cast<double>(m));
        const double u0 = -std::expm1(-a * scale);
        const auto h = complement_iterate_jet(q_, m, u0, scale, p);
        std::vector<double> out(p + 1);
        out[0] = 1.0 - h.coeffs[0];
        double fact = 1.0;
        for (unsigned k = 1; k <= p; ++k) {
            fact *= k;
            out[k] = -fact * h.coeffs[k];
        }
        return out;
    }

    LaplaceValue evaluate(double a, unsigned p) const
    {
        if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("phi: argument must be a finite a >= 0");
        if (p > order_) throw DomainError("phi_derivatives: p exceeds the configured order");
        LaplaceValue r;
        std::vector<double> prev = at_depth(a, p, 0);
        double prev_change = -1.0;
        double before_last = prev[0];
        for (unsigned m = 1; m <= opts_.m_max; ++m) {
            std::vector<double> cur = at_depth(a, p, m);
            double change = 0.0;
            for (unsigned k = 0; k <= p; ++k)
                change = std::max(change, std::abs(cur[k] - prev[k]) / std::max(1.0, std::abs(cur[k])));
            double tail = change;
            if (prev_change > 0.0) {
                const double ratio = change / prev_change;
                tail = ratio < 1.0 ? change * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
            }
            r.values = cur;
            r.iterations = m;
            r.last_change = change;
            r.tail_estimate = tail;
            if (m >= 3 && change <= opts_.tol && tail <= opts_.tol) return r;
            if (change == 0.0 && m >= 3) return r;
            prev_change = change;
            before_last = prev[0];
            prev = std::move(cur);
        }
        throw ConvergenceError("phi: no convergence within m_max = " + std::to_string(opts_.m_max) +
                                   " iterations at a = " + format_scalar(a),
                               before_last, r.values[0]);
    }

    double phi(double a) const { return evaluate(a, 0).values[0]; }

    std::vector<double> phi_derivatives(double a, unsigned p) const { return evaluate(a, p).values; }

    /// |f(phi(a)) - phi(a mu)|.
    double schroeder_residual(double a) const { return std::abs(q_.pgf(phi(a)) - phi(a * mu_)); }

private:
    OffspringDistribution<double> q_;
    unsigned order_;
    LaplaceOptions opts_;
    double mu_;
};

// ---------------------------------------------------------------------------
// PhiTable: phi^{(k)}(a / mu^n) for k <= order, cached per n
// ---------------------------------------------------------------------------

/// Exact (T = Rational, a = 0) or numeric (T = double) access to the
/// derivatives of phi at a / mu^n.
template <ProbScalar T>
class PhiTable {
public:
    /// a = 0: derivatives are the exact moments of W, independent of n.
    PhiTable(const OffspringDistribution<T>& q, unsigned order) : order_(order), a_(0.0)
    {
        const auto c = phi_taylor_at_zero(q, order);
        at_zero_.resize(order + 1);
        for (unsigned k = 0; k <= order; ++k) at_zero_[k] = c[k] * factorial<T>(k);
    }

    /// a > 0 (float mode only).
    template <ProbScalar U>
    PhiTable(const OffspringDistribution<U>& q, double a, unsigned order, LaplaceOptions opts = {})
        requires std::is_same_v<T, double>
        : order_(order), a_(a)
    {
        if (!(a >= 0.0)) throw DomainError("PhiTable: a must be >= 0");
        if (a == 0.0) {
            const auto c = phi_taylor_at_zero(q.to_float(), order);
            at_zero_.resize(order + 1);
            for (unsigned k = 0; k <= order; ++k) at_zero_[k] = c[k] * factorial<double>(k);
        } else {
            laplace_.emplace(q, order, opts);
        }
    }

    PhiTable(const PhiTable& o) : order_(o.order_), a_(o.a_), at_zero_(o.at_zero_), laplace_(o.laplace_)
    {
        std::lock_guard<std::mutex> lock(o.mutex_);
        cache_ = o.cache_;
    }

    unsigned order() const noexcept { return order_; }
    double a() const noexcept { return a_; }
    bool exact() const noexcept { return is_exact_v<T>; }

    /// (phi(a/mu^n), phi'(a/mu^n), ..., phi^{(order)}(a/mu^n)).
    std::vector<T> at(unsigned n) const
    {
        if constexpr (is_exact_v<T>) {
            (void)n;
            return at_zero_;
        } else {
            if (!laplace_) return at_zero_;
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(n);
            if (it != cache_.end()) return it->second;
            const double x = a_ / std::pow(laplace_->mu(), static_cast<double>(n));
            std::vector<T> v = laplace_->phi_derivatives(x, order_);
            cache_.emplace(n, v);
            return v;
        }
    }

private:
    unsigned order_;
    double a_;
    std::vector<T> at_zero_;
    std::optional<LaplaceTransform> laplace_;
    mutable std::mutex mutex_;
    mutable std::map<unsigned, std::vector<T>> cache_;
};

template <class T>
PhiTable(const OffspringDistribution<T>&, unsigned) -> PhiTable<T>;

// ---------------------------------------------------------------------------
// Asymptotic constants
// ---------------------------------------------------------------------------

enum class EstimateKind { C_p_noncritical, C_p_critical, b, K_p };

inline std::string to_string(EstimateKind k)
{
    switch (k) {
    case EstimateKind::C_p_noncritical: return "C_p";
    case EstimateKind::C_p_critical: return "C_p_critical";
    case EstimateKind::b: return "b";
    case EstimateKind::K_p: return "K_p";
    }
    return "?";
}

struct AsymptoticEstimate {
    EstimateKind kind = EstimateKind::C_p_noncritical;
    double value = 0.0;
    unsigned p = 0;
    double s = 0.0;
    std::vector<double> diagnostics;  ///< partial estimates, one per iteration
    unsigned iterations = 0;
    double last_change = 0.0;
};

struct EstimateOptions {
    double tol = 1e-10;
    unsigned n_max = 2000;
};

/// C_p(s) = lim_n f_n^{(p)}(s) / f_n'(s) for a non-critical law (Schroeder
/// case when super-critical) or a critical one.
template <ProbScalar T>
AsymptoticEstimate estimate_Cp(const OffspringDistribution<T>& q, unsigned p, double s, EstimateOptions opts = {})
{
    const auto c = characterize(q.to_float());
    if (c.regime == Regime::supercritical_boettcher)
        throw DomainError("estimate_Cp: Boettcher case (min support >= 2); use estimate_boettcher");
    if (!(s >= 0.0 && s < 1.0)) throw DomainError("estimate_Cp: s must lie in [0, 1)");
    if (p < 1) throw DomainError("estimate_Cp: p must be >= 1");

    AsymptoticEstimate est;
    est.kind = c.regime == Regime::critical ? EstimateKind::C_p_critical : EstimateKind::C_p_noncritical;
    est.p = p;
    est.s = s;
    const auto probs = q.template probs_as<double>();
    TaylorJet<double> j = TaylorJet<double>::identity(s, p);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (unsigned n = 1; n <= opts.n_max; ++n) {
        j = compose(jet_of_polynomial(probs, j.value(), p), j);
        detail::check_finite(j);
        if (j.coeffs[1] == 0.0 || std::abs(j.coeffs[1]) < kUnderflowThreshold)
            throw UnderflowError("estimate_Cp: f_n'(s) underflows before convergence");
        const double ratio = j.derivative(p) / j.derivative(1);
        est.diagnostics.push_back(ratio);
        est.value = ratio;
        est.iterations = n;
        if (n > 1) {
            est.last_change = std::abs(ratio - prev);
            if (est.last_change <= opts.tol * std::max(1.0, std::abs(ratio))) return est;
        }
        prev = ratio;
    }
    throw ConvergenceError("estimate_Cp: no convergence within n_max = " + std::to_string(opts.n_max), prev,
                           est.value);
}

struct BoettcherEstimate {
    AsymptoticEstimate b;
    AsymptoticEstimate K;
    double log_K = 0.0;
};

/// b(s) = log s + sum_j a^{-j-1} log(f_{j+1}(s) / f_j(s)^a) and
/// K_p(s) = lim_m f_m^{(p)}(s) a^{-mp} exp(-a^m b(s)), evaluated in log space.
template <ProbScalar T>
BoettcherEstimate estimate_boettcher(const OffspringDistribution<T>& q, unsigned p, double s,
                                     EstimateOptions opts = {})
{
    const auto qd = q.to_float();
    const unsigned amin = qd.min_support();
    if (amin < 2) throw DomainError("estimate_boettcher: needs min support >= 2");
    if (!(s > 0.0 && s < 1.0)) throw DomainError("estimate_boettcher: s must lie in (0, 1)");
    const double A = amin;
    const auto& probs = qd.probs();

    // log h(x) with h(x) = f(x) / x^a = sum_{k >= a} q_k x^{k - a}, x = exp(lx).
    const auto log_h = [&](double lx) {
        LogReal acc(0.0);
        for (std::size_t k = amin; k < probs.size(); ++k)
            if (probs[k] > 0.0)
                acc += LogReal::from_log(1, std::log(probs[k]) + static_cast<double>(k - amin) * lx);
        return acc.log_abs();
    };

    BoettcherEstimate out;
    out.b.kind = EstimateKind::b;
    out.b.s = s;
    // log f_j(s) and the increments log h(f_j(s)), j = 0, 1, ...
    std::vector<double> log_f{std::log(s)};
    std::vector<double> incr;
    double b = std::log(s);
    double weight = 1.0 / A;
    for (unsigned j = 0;; ++j) {
        const double lh = log_h(log_f[j]);
        incr.push_back(lh);
        log_f.push_back(lh + A * log_f[j]);
        const double term = weight * lh;
        b += term;
        weight /= A;
        out.b.diagnostics.push_back(b);
        out.b.iterations = j + 1;
        out.b.last_change = std::abs(term);
        if (std::abs(term) <= opts.tol * std::max(1.0, std::abs(b)) && j >= 2) break;
        if (j + 1 >= opts.n_max) throw ConvergenceError("estimate_boettcher: b(s) series did not converge", b - term, b);
    }
    out.b.value = b;

    // Tail T_m = sum_{j >= m} a^{m-j-1} log h(f_j(s)), so a^m b(s) = log f_m(s) + T_m.
    const auto tail = [&](unsigned m) {
        while (incr.size() < m + 60) {
            const double lh = log_h(log_f.back());
            log_f.push_back(lh + A * log_f.back());
            incr.push_back(lh);
        }
        double t = 0.0, w = 1.0 / A;
        for (std::size_t j = m; j < incr.size(); ++j, w /= A) t += w * incr[j];
        return t;
    };

    out.K.kind = EstimateKind::K_p;
    out.K.p = p;
    out.K.s = s;
    // f_m(s) exp(-a^m b(s)) = exp(-T_m) and f_m^{(p)}(s) / f_m(s) = p! r_p, so
    // K_p estimate = exp(-T_m) p! r_p a^{-mp}; no large logarithms cancel.
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (unsigned m = 1; m <= opts.n_max; ++m) {
        const auto rel = iterate_jet_relative(qd, m, s, p);
        const double r = rel.ratios[p] * factorial<double>(p);
        if (!(r > 0.0)) throw DomainError("estimate_boettcher: nonpositive derivative");
        const double logk = -tail(m) + std::log(r) - static_cast<double>(m) * static_cast<double>(p) * std::log(A);
        out.K.diagnostics.push_back(std::exp(logk));
        out.K.iterations = m;
        out.log_K = logk;
        out.K.value = std::exp(logk);
        if (m > 1) {
            out.K.last_change = std::abs(logk - prev);
            if (out.K.last_change <= opts.tol) return out;
        }
        prev = logk;
    }
    throw ConvergenceError("estimate_boettcher: K_p did not converge", std::exp(prev), out.K.value);
}

// ---------------------------------------------------------------------------
// Critical moment polynomial
// ---------------------------------------------------------------------------

struct MomentPolynomial {
    std::vector<Rational> coeffs;  ///< monomial basis, P(n) = sum coeffs[i] n^i
    std::vector<Rational> fitted;  ///< E[H_p(Z_n)], n = 0..p-1
    std::vector<Rational> checked; ///< E[H_p(Z_n)], n = p..p+3
    unsigned degree() const
    {
        for (std::size_t i = coeffs.size(); i-- > 0;)
            if (coeffs[i] != 0) return static_cast<unsigned>(i);
        return 0;
    }
    Rational operator()(const Rational& n) const
    {
        Rational acc = 0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * n + coeffs[i];
        return acc;
    }
};

/// E[H_p(Z_n)] from the exact law of Z_n.
inline Rational hilbert_moment(const std::vector<Rational>& law, unsigned p)
{
    Rational acc = 0;
    for (std::size_t z = 0; z < law.size(); ++z)
        if (law[z] != 0) acc += law[z] * hilbert(p, Rational(static_cast<long long>(z)));
    return acc;
}

/// The polynomial P of degree p - 1 with E[H_p(Z_n)] = P(n) for a critical
/// law: interpolated through n = 0..p-1, then verified at n = p..p+3.
/// A failed verification or a wrong degree raises std::logic_error.
inline MomentPolynomial critical_moment_polynomial(const OffspringDistribution<Rational>& q, unsigned p)
{
    if (q.mean() != 1) throw DomainError("critical_moment_polynomial: law must be critical");
    if (p < 1) throw DomainError("critical_moment_polynomial: p must be >= 1");
    MomentPolynomial poly;
    for (unsigned n = 0; n < p; ++n) poly.fitted.push_back(hilbert_moment(generation_law(q, n), p));

    // Lagrange interpolation through (n, fitted[n]) in the monomial basis.
    poly.coeffs.assign(p, Rational(0));
    for (unsigned i = 0; i < p; ++i) {
        std::vector<Rational> basis{Rational(1)};
        Rational denom = 1;
        for (unsigned j = 0; j < p; ++j) {
            if (j == i) continue;
            std::vector<Rational> next(basis.size() + 1, Rational(0));
            for (std::size_t k = 0; k < basis.size(); ++k) {
                next[k + 1] += basis[k];
                next[k] -= basis[k] * Rational(j);
            }
            basis = std::move(next);
            denom *= Rational(static_cast<long long>(i) - static_cast<long long>(j));
        }
        for (std::size_t k = 0; k < basis.size(); ++k) poly.coeffs[k] += poly.fitted[i] * basis[k] / denom;
    }

    for (unsigned n = p; n <= p + 3; ++n) {
        const Rational actual = hilbert_moment(generation_law(q, n), p);
        poly.checked.push_back(actual);
        if (poly(Rational(n)) != actual)
            throw std::logic_error("critical_moment_polynomial: P(" + std::to_string(n) + ") = " +
                                   format_scalar(poly(Rational(n))) + " but E[H_p(Z_n)] = " + format_scalar(actual));
    }
    if (poly.coeffs.back() == 0)
        throw std::logic_error("critical_moment_polynomial: fitted polynomial has degree below p - 1");
    return poly;
}

} // namespace gwpen
