#pragma once

// Limiting martingales as functions of (n, Z_n), the coefficients a_i^{(p)}(n),
// a one-step martingale checker driven by exact generation laws, and the
// linear system that pins down the homogeneous (a = 0) polynomial martingales.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gwpen/combinatorics.hpp"
#include "gwpen/errors.hpp"
#include "gwpen/jets.hpp"
#include "gwpen/limits.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/scalar.hpp"

namespace gwpen {

enum class MartingaleKind {
    ratio,
    extinction,
    sized_biased_extinct,
    schroeder_unit,
    boettcher_unit,
    critical_size,
    penalized_p,
    two_index,
    conjugate_penalized,
};

inline std::string to_string(MartingaleKind k)
{
    switch (k) {
    case MartingaleKind::ratio: return "ratio";
    case MartingaleKind::extinction: return "extinction";
    case MartingaleKind::sized_biased_extinct: return "sized_biased_extinct";
    case MartingaleKind::schroeder_unit: return "schroeder_unit";
    case MartingaleKind::boettcher_unit: return "boettcher_unit";
    case MartingaleKind::critical_size: return "critical_size";
    case MartingaleKind::penalized_p: return "penalized_p";
    case MartingaleKind::two_index: return "two_index";
    case MartingaleKind::conjugate_penalized: return "conjugate_penalized";
    }
    return "?";
}

inline MartingaleKind parse_martingale_kind(const std::string& name)
{
    for (auto k : {MartingaleKind::ratio, MartingaleKind::extinction, MartingaleKind::sized_biased_extinct,
                   MartingaleKind::schroeder_unit, MartingaleKind::boettcher_unit, MartingaleKind::critical_size,
                   MartingaleKind::penalized_p, MartingaleKind::two_index, MartingaleKind::conjugate_penalized})
        if (to_string(k) == name) return k;
    throw DomainError("unknown martingale '" + name + "'");
}

// ---------------------------------------------------------------------------
// a_i^{(p)}(n) and G
// ---------------------------------------------------------------------------

template <ProbScalar T>
struct GCoefficients {
    unsigned p = 0;
    unsigned n = 0;
    double a = 0.0;
    /// values[i - 1] = a_i^{(p)}(n), i = 1..p.
    std::vector<T> values;

    const T& at(unsigned i) const { return values.at(i - 1); }
};

/// a_i^{(p)} from the derivative vector d = (phi, phi', ..., phi^{(p)}) at one point.
template <ProbScalar T>
std::vector<T> a_coeffs_from_derivatives(const std::vector<T>& d, unsigned p)
{
    if (d.size() < p + 1) throw DomainError("a_coeffs: derivative vector shorter than p + 1");
    std::vector<T> scaled(p + 1);
    for (unsigned k = 0; k <= p; ++k) scaled[k] = d[k] / factorial<T>(k);
    return composition_sums(scaled, p);
}

template <ProbScalar T>
GCoefficients<T> a_coeffs(const PhiTable<T>& phi, unsigned p, unsigned n)
{
    if (p == 0) throw DomainError("a_coeffs: p must be >= 1");
    if (p > phi.order()) throw DomainError("a_coeffs: p exceeds the phi table order");
    return {p, n, phi.a(), a_coeffs_from_derivatives(phi.at(n), p)};
}

/// Convenience overload building the phi table; exact when T = Rational (a must be 0).
template <ProbScalar T>
GCoefficients<T> a_coeffs(const OffspringDistribution<T>& q, unsigned p, unsigned n, double a)
{
    if constexpr (is_exact_v<T>) {
        if (a != 0.0) throw DomainError("a_coeffs: a > 0 is only available in float mode");
        return a_coeffs(PhiTable<T>(q, p), p, n);
    } else {
        return a_coeffs(PhiTable<double>(q, a, p), p, n);
    }
}

/// Table a_s^{(l)}(n), 1 <= s <= l <= p, laid out for coefficient_identity.
template <ProbScalar T>
CoefficientTable<T> coefficient_table(const PhiTable<T>& phi, unsigned p, unsigned n)
{
    CoefficientTable<T> table(p + 1);
    const auto d = phi.at(n);
    for (unsigned l = 1; l <= p; ++l) {
        const auto v = a_coeffs_from_derivatives(d, l);
        table[l].assign(l + 1, T(0));
        for (unsigned s = 1; s <= l; ++s) table[l][s] = v[s - 1];
    }
    return table;
}

/// G_{n,n0}^{(p)}(x); G_n^{(p)} is the case n0 = 0.
template <ProbScalar T>
T G_eval(const PhiTable<T>& phi, unsigned p, unsigned n, unsigned n0, long long x)
{
    if (x < 0) throw DomainError("G: x must be >= 0");
    if (n < n0) throw DomainError("G: n must be >= n0");
    const auto dn = phi.at(n);
    const auto d0 = phi.at(n0);
    const auto ux = static_cast<std::uint64_t>(x);
    if (p == 0) return ipow(dn[0], ux) / d0[0];
    const auto a = a_coeffs_from_derivatives(dn, p);
    T sum(0);
    for (unsigned i = 1; i <= p && i <= ux; ++i)
        sum = sum + a[i - 1] * hilbert<T>(i, T(x)) * ipow(dn[0], ux - i);
    return factorial<T>(p) / d0[p] * sum;
}

// ---------------------------------------------------------------------------
// MartingaleSpec
// ---------------------------------------------------------------------------

/// A named martingale M_n = M(n, Z_n). Exact (T = Rational) specs are
/// restricted to a = 0 and rational extinction probabilities.
template <ProbScalar T>
class MartingaleSpec {
public:
    static MartingaleSpec ratio(const OffspringDistribution<T>& q)
    {
        MartingaleSpec m(MartingaleKind::ratio, q);
        m.base_ = q.mean();
        return m;
    }

    static MartingaleSpec extinction(const OffspringDistribution<T>& q)
    {
        MartingaleSpec m(MartingaleKind::extinction, q);
        m.kappa_ = m.checked_kappa();
        return m;
    }

    static MartingaleSpec sized_biased_extinct(const OffspringDistribution<T>& q)
    {
        MartingaleSpec m(MartingaleKind::sized_biased_extinct, q);
        if (m.crit_.regime == Regime::critical)
            throw DomainError("sized_biased_extinct: f'(kappa) = 1 for a critical law; use critical_size");
        m.kappa_ = m.checked_kappa();
        m.base_ = q.derivative(1, m.kappa_);
        return m;
    }

    static MartingaleSpec schroeder_unit(const OffspringDistribution<T>& q)
    {
        MartingaleSpec m(MartingaleKind::schroeder_unit, q);
        if (q.prob(0) != T(0) || q.prob(1) == T(0))
            throw DomainError("schroeder_unit needs q_0 = 0 and q_1 > 0");
        m.base_ = q.prob(1);
        return m;
    }

    static MartingaleSpec boettcher_unit(const OffspringDistribution<T>& q)
    {
        MartingaleSpec m(MartingaleKind::boettcher_unit, q);
        if (q.prob(0) != T(0) || m.crit_.a_min < 2)
            throw DomainError("boettcher_unit needs q_0 = q_1 = 0");
        m.base_ = q.prob(m.crit_.a_min);
        return m;
    }

    static MartingaleSpec critical_size(const OffspringDistribution<T>& q)
    {
        MartingaleSpec m(MartingaleKind::critical_size, q);
        if (m.crit_.regime != Regime::critical) throw DomainError("critical_size needs a critical law");
        return m;
    }

    /// mu^{-pn} G_n^{(p)}(Z_n) for a super-critical law.
    static MartingaleSpec penalized(const OffspringDistribution<T>& q, unsigned p, double a = 0.0,
                                    LaplaceOptions opts = {})
    {
        auto m = two_index(q, p, a, 0, opts);
        m.kind_ = MartingaleKind::penalized_p;
        return m;
    }

    /// mu^{-p(n-n0)} G_{n,n0}^{(p)}(Z_n), defined for n >= n0 with Z_{n0} = 1.
    static MartingaleSpec two_index(const OffspringDistribution<T>& q, unsigned p, double a, unsigned n0,
                                    LaplaceOptions opts = {})
    {
        MartingaleSpec m(MartingaleKind::two_index, q);
        if (!is_supercritical(m.crit_.regime)) throw DomainError("G-based martingales need a super-critical law");
        m.p_ = p;
        m.a_ = a;
        m.n0_ = n0;
        m.base_ = q.mean();
        m.phi_ = make_phi(q, p, a, opts);
        return m;
    }

    /// kappa^{Z_n - 1} Gbar_n^{(p)}(Z_n) / f'(kappa)^{pn} for a sub-critical law
    /// with a fixed point kappa > 1; Gbar is built on the conjugate law.
    static MartingaleSpec conjugate_penalized(const OffspringDistribution<T>& q, unsigned p, double a = 0.0,
                                              LaplaceOptions opts = {})
    {
        MartingaleSpec m(MartingaleKind::conjugate_penalized, q);
        if (m.crit_.regime != Regime::subcritical) throw DomainError("conjugate_penalized needs a sub-critical law");
        const auto bar = conjugate(q);
        m.p_ = p;
        m.a_ = a;
        m.kappa_ = conjugation_point(q);
        m.base_ = bar.mean();
        m.phi_ = make_phi(bar, p, a, opts);
        return m;
    }

    MartingaleKind kind() const noexcept { return kind_; }
    std::string name() const { return to_string(kind_); }
    const OffspringDistribution<T>& law() const noexcept { return q_; }
    const Criticality<T>& criticality() const noexcept { return crit_; }
    unsigned p() const noexcept { return p_; }
    double a() const noexcept { return a_; }
    unsigned n0() const noexcept { return n0_; }
    bool uses_phi() const noexcept { return phi_ != nullptr; }
    const PhiTable<T>& phi() const
    {
        if (!phi_) throw DomainError(name() + " has no phi table");
        return *phi_;
    }

    /// M_n(z).
    T evaluate(unsigned n, std::size_t z) const
    {
        if (n < n0_) throw DomainError("martingale evaluated before its starting generation");
        const auto uz = static_cast<std::uint64_t>(z);
        switch (kind_) {
        case MartingaleKind::ratio: return T(static_cast<long long>(z)) / ipow(base_, n);
        case MartingaleKind::extinction: return kappa_power(uz);
        case MartingaleKind::sized_biased_extinct:
            return T(static_cast<long long>(z)) * kappa_power(uz) / ipow(base_, n);
        case MartingaleKind::schroeder_unit: return z == 1 ? T(1) / ipow(base_, n) : T(0);
        case MartingaleKind::boettcher_unit: {
            const std::uint64_t amin = crit_.a_min;
            const std::uint64_t target = ipow_u(amin, n);
            if (uz != target) return T(0);
            const std::uint64_t e = (target - 1) / (amin - 1);
            if constexpr (is_exact_v<T>) {
                const T v = ipow(T(1) / base_, e);
                check_size(v);
                return v;
            } else {
                return std::pow(base_, -static_cast<double>(e));
            }
        }
        case MartingaleKind::critical_size: return T(static_cast<long long>(z));
        case MartingaleKind::penalized_p:
        case MartingaleKind::two_index:
            return G_eval(*phi_, p_, n, n0_, static_cast<long long>(z)) / ipow(base_, std::uint64_t(p_) * (n - n0_));
        case MartingaleKind::conjugate_penalized:
            return kappa_power(uz) * G_eval(*phi_, p_, n, 0, static_cast<long long>(z)) /
                   ipow(base_, std::uint64_t(p_) * n);
        }
        return T(0);
    }

    T operator()(unsigned n, std::size_t z) const { return evaluate(n, z); }

private:
    MartingaleSpec(MartingaleKind kind, const OffspringDistribution<T>& q) : kind_(kind), q_(q), crit_(characterize(q)) {}

    static std::shared_ptr<const PhiTable<T>> make_phi(const OffspringDistribution<T>& q, unsigned p, double a,
                                                       const LaplaceOptions& opts)
    {
        const unsigned order = p == 0 ? 1 : p;
        if constexpr (is_exact_v<T>) {
            if (a != 0.0) throw DomainError("Laplace weights (a > 0) need float mode");
            (void)opts;
            return std::make_shared<const PhiTable<T>>(q, order);
        } else {
            return std::make_shared<const PhiTable<T>>(q, a, order, opts);
        }
    }

    T checked_kappa() const
    {
        T k = crit_.regime == Regime::subcritical || crit_.regime == Regime::critical ? T(1) : crit_.kappa;
        if (k == T(0)) throw DomainError(name() + " needs q_0 > 0 (kappa = 0)");
        if (!crit_.kappa_exact && is_supercritical(crit_.regime))
            throw DomainError(name() + ": extinction probability is irrational; use float mode");
        return k;
    }

    T kappa_power(std::uint64_t z) const
    {
        if (z == 0) return T(1) / kappa_;
        return ipow(kappa_, z - 1);
    }

    static std::uint64_t ipow_u(std::uint64_t b, unsigned e)
    {
        std::uint64_t r = 1;
        for (unsigned i = 0; i < e; ++i) {
            if (r > (std::uint64_t(1) << 62) / b) return std::numeric_limits<std::uint64_t>::max();
            r *= b;
        }
        return r;
    }

    MartingaleKind kind_;
    OffspringDistribution<T> q_;
    Criticality<T> crit_;
    unsigned p_ = 0;
    double a_ = 0.0;
    unsigned n0_ = 0;
    T base_ = T(1);
    T kappa_ = T(1);
    std::shared_ptr<const PhiTable<T>> phi_;
};

// ---------------------------------------------------------------------------
// Martingale property check
// ---------------------------------------------------------------------------

template <ProbScalar T>
struct MartingaleViolation {
    unsigned n;
    std::size_t z;
    T lhs;  // E[M_{n+1} | Z_n = z]
    T rhs;  // M_n(z)
};

template <ProbScalar T>
struct MartingaleReport {
    bool passed = true;
    bool exact = is_exact_v<T>;
    bool mean_one = true;
    std::size_t checks = 0;
    double max_relative_gap = 0.0;
    /// means[k] = E[M_{n0 + k}], k = 0..n_max - n0.
    std::vector<T> means;
    std::vector<MartingaleViolation<T>> violations;
};

namespace detail {

template <ProbScalar T>
bool agree(const T& x, const T& y, double tol, double& gap)
{
    if constexpr (is_exact_v<T>) {
        (void)tol;
        const bool eq = x == y;
        if (!eq) gap = std::max(gap, std::abs(to_double(x - y)) / std::max({std::abs(to_double(y)), 1e-300}));
        return eq;
    } else {
        const double scale = std::max(std::abs(x), std::abs(y));
        const double g = scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
        gap = std::max(gap, g);
        return g <= tol;
    }
}

} // namespace detail

/// Checks E[M_{n+1} | Z_n = z] = M_n(z) for n0 <= n < n_max and every z with
/// P(Z_n = z) > 0 (the process starts from one individual at generation n0),
/// plus E[M_n] = 1. `m` is any callable (n, z) -> T.
template <ProbScalar T, class Fn>
MartingaleReport<T> verify_martingale(const OffspringDistribution<T>& q, const Fn& m, unsigned n0, unsigned n_max,
                                      double tol = 1e-9, std::size_t state_cap = kDefaultStateCap)
{
    MartingaleReport<T> rep;
    std::vector<T> law = generation_law(q, 0, state_cap);
    std::vector<T> current(law.size());
    for (std::size_t z = 0; z < law.size(); ++z)
        if (law[z] != T(0)) current[z] = m(n0, z);

    double mean_gap = 0.0;
    for (unsigned n = n0;; ++n) {
        T mean(0);
        for (std::size_t z = 0; z < law.size(); ++z)
            if (law[z] != T(0)) mean = mean + law[z] * current[z];
        rep.means.push_back(mean);
        if (!detail::agree(mean, T(1), tol, mean_gap)) rep.mean_one = false;
        if (n == n_max) break;

        std::vector<T> next_law = generation_law(q, n + 1 - n0, state_cap);
        std::vector<T> next(next_law.size());
        for (std::size_t j = 0; j < next_law.size(); ++j)
            if (next_law[j] != T(0)) next[j] = m(n + 1, j);
        for (std::size_t z = 0; z < law.size(); ++z) {
            if (law[z] == T(0)) continue;
            const auto step = convolution_power(q, z);
            T lhs(0);
            for (std::size_t j = 0; j < step.size(); ++j)
                if (step[j] != T(0)) lhs = lhs + step[j] * next[j];
            ++rep.checks;
            if (!detail::agree(lhs, current[z], tol, rep.max_relative_gap))
                rep.violations.push_back({n, z, lhs, current[z]});
        }
        law = std::move(next_law);
        current = std::move(next);
    }
    rep.passed = rep.violations.empty() && rep.mean_one;
    return rep;
}

template <ProbScalar T>
MartingaleReport<T> verify_martingale(const MartingaleSpec<T>& spec, unsigned n_max, double tol = 1e-9,
                                      std::size_t state_cap = kDefaultStateCap)
{
    return verify_martingale(
        spec.law(), [&spec](unsigned n, std::size_t z) { return spec.evaluate(n, z); }, spec.n0(), n_max, tol,
        state_cap);
}

/// Every martingale of the catalogue that applies to q, with p up to p_max for
/// the polynomial families. Float mode adds nothing for a = 0 that exact mode
/// lacks; pass a > 0 to get the Laplace-weighted families.
template <ProbScalar T>
std::vector<MartingaleSpec<T>> applicable_martingales(const OffspringDistribution<T>& q, unsigned p_max, double a = 0.0,
                                                      LaplaceOptions opts = {})
{
    std::vector<MartingaleSpec<T>> out;
    const auto c = characterize(q);
    const bool laplace = a > 0.0;
    if (!laplace) {
        out.push_back(MartingaleSpec<T>::ratio(q));
        if (q.prob(0) != T(0) && (c.kappa_exact || !is_exact_v<T>)) {
            out.push_back(MartingaleSpec<T>::extinction(q));
            if (c.regime != Regime::critical) out.push_back(MartingaleSpec<T>::sized_biased_extinct(q));
        }
        if (q.prob(0) == T(0) && c.a_min == 1) out.push_back(MartingaleSpec<T>::schroeder_unit(q));
        if (q.prob(0) == T(0) && c.a_min >= 2) out.push_back(MartingaleSpec<T>::boettcher_unit(q));
        if (c.regime == Regime::critical) out.push_back(MartingaleSpec<T>::critical_size(q));
    }
    if (is_supercritical(c.regime)) {
        for (unsigned p = 0; p <= p_max; ++p) out.push_back(MartingaleSpec<T>::penalized(q, p, a, opts));
        for (unsigned p = 1; p <= p_max; ++p) out.push_back(MartingaleSpec<T>::two_index(q, p, a, 1, opts));
    }
    if (c.regime == Regime::subcritical) {
        bool exact_kappa = true;
        if constexpr (is_exact_v<T>) {
            try {
                (void)conjugate(q);
            } catch (const DomainError&) {
                exact_kappa = false;
            }
        }
        if (exact_kappa)
            for (unsigned p = 0; p <= p_max; ++p) out.push_back(MartingaleSpec<T>::conjugate_penalized(q, p, a, opts));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniqueness of the homogeneous polynomial martingales
// ---------------------------------------------------------------------------

using RationalMatrix = std::vector<std::vector<Rational>>;

/// Solves A X = B by exact Gauss-Jordan elimination; returns det A through `det`.
/// Throws std::logic_error if A is singular.
inline RationalMatrix solve_exact(RationalMatrix a, RationalMatrix b, Rational* det = nullptr)
{
    const std::size_t n = a.size();
    Rational d(1);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && a[piv][col] == 0) ++piv;
        if (piv == n) throw std::logic_error("solve_exact: singular matrix");
        if (piv != col) {
            std::swap(a[piv], a[col]);
            std::swap(b[piv], b[col]);
            d = -d;
        }
        const Rational inv = Rational(1) / a[col][col];
        d *= a[col][col];
        for (auto& v : a[col]) v *= inv;
        for (auto& v : b[col]) v *= inv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0) continue;
            const Rational f = a[r][col];
            for (std::size_t k = 0; k < n; ++k) a[r][k] -= f * a[col][k];
            for (std::size_t k = 0; k < b[r].size(); ++k) b[r][k] -= f * b[col][k];
        }
    }
    if (det) *det = d;
    return b;
}

struct UniquenessReport {
    unsigned p = 0;
    RationalMatrix F;  // F[i][j] = f_i^{(j+1)}(1), i, j = 0..p-1
    RationalMatrix M;  // M[i][j] = mu^{i (j+1)}
    RationalMatrix C;  // solution of F C = M
    Rational det_F;
    /// hilbert[k][i] = coefficient of H_{i+1} in P_{k+1}, i.e. (i+1)! C[i][k].
    RationalMatrix hilbert;
    /// constructive[k][i] = (k+1)! a_{i+1}^{(k+1)} / phi^{(k+1)}(0) at a = 0.
    RationalMatrix constructive;
    bool upper_triangular = false;
    bool p1_is_identity = false;
    bool matches_constructive = false;
};

/// Builds F with f_{ij} = f_{i-1}^{(j)}(1) and the Vandermonde M with
/// m_{ij} = mu^{(i-1)j}, solves F C = M exactly and compares the resulting
/// polynomials with the a = 0 coefficients normalised to mean one.
/// F_{ij} carries no 1/j! factor, so C_{jk} is the coefficient of the falling
/// factorial x(x-1)...(x-j+1) and j! C_{jk} the coefficient of H_j.
inline UniquenessReport uniqueness_solve(const OffspringDistribution<Rational>& q, unsigned p,
                                         std::size_t bit_cap = kDefaultBitCap)
{
    if (p == 0) throw DomainError("uniqueness_solve: p must be >= 1");
    const auto c = characterize(q);
    if (!is_supercritical(c.regime)) throw DomainError("uniqueness_solve needs a super-critical law");
    UniquenessReport r;
    r.p = p;
    const Rational mu = q.mean();
    r.F.assign(p, std::vector<Rational>(p));
    r.M.assign(p, std::vector<Rational>(p));
    for (unsigned i = 0; i < p; ++i) {
        const auto jet = iterate_jet(q, i, Rational(1), p, bit_cap);
        for (unsigned j = 0; j < p; ++j) {
            r.F[i][j] = jet.derivative(j + 1);
            r.M[i][j] = ipow(mu, std::uint64_t(i) * (j + 1));
        }
    }
    r.C = solve_exact(r.F, r.M, &r.det_F);
    if (r.det_F == 0) throw std::logic_error("uniqueness_solve: det F = 0");

    r.upper_triangular = true;
    for (unsigned i = 0; i < p; ++i)
        for (unsigned k = 0; k < i; ++k)
            if (r.C[i][k] != 0) r.upper_triangular = false;

    const PhiTable<Rational> phi(q, p);
    const auto d = phi.at(0);
    r.hilbert.assign(p, std::vector<Rational>(p, Rational(0)));
    r.constructive.assign(p, std::vector<Rational>(p, Rational(0)));
    r.matches_constructive = true;
    for (unsigned k = 1; k <= p; ++k) {
        const auto a = a_coeffs_from_derivatives(d, k);
        const Rational norm = factorial<Rational>(k) / d[k];
        for (unsigned i = 1; i <= p; ++i) {
            r.hilbert[k - 1][i - 1] = factorial<Rational>(i) * r.C[i - 1][k - 1];
            if (i <= k) r.constructive[k - 1][i - 1] = norm * a[i - 1];
            if (r.hilbert[k - 1][i - 1] != r.constructive[k - 1][i - 1]) r.matches_constructive = false;
        }
    }
    r.p1_is_identity = r.hilbert[0][0] == 1;
    for (unsigned i = 1; i < p; ++i)
        if (r.hilbert[0][i] != 0) r.p1_is_identity = false;
    return r;
}

} // namespace gwpen
