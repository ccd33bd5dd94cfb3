#pragma once

// Finite-horizon penalization ratios
//   E[1_Lambda w(Z_{n+m})] / E[w(Z_{n+m})]
// for polynomial-geometric and polynomial-Laplace weights, and their m -> oo
// limits E[M_n 1_Lambda] with the matching limiting martingale.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gwpen/combinatorics.hpp"
#include "gwpen/errors.hpp"
#include "gwpen/jets.hpp"
#include "gwpen/limits.hpp"
#include "gwpen/martingales.hpp"
#include "gwpen/offspring.hpp"
#include "gwpen/scalar.hpp"
#include "gwpen/trees.hpp"

namespace gwpen {

// ---------------------------------------------------------------------------
// Weights and events
// ---------------------------------------------------------------------------

enum class WeightKind {
    geometric,          // P(x) s^x
    laplace,            // P(x) exp(-a x / mu^{n+m})
    conjugate_laplace,  // P(x) kappa^x exp(-a x / f'(kappa)^{n+m}), sub-critical q
};

/// Penalizing weight with polynomial part P = sum_w alpha_w H_w. An empty
/// `alpha` means P = H_p.
template <ProbScalar T>
struct Weight {
    WeightKind kind = WeightKind::geometric;
    unsigned p = 0;
    T s = T(0);
    double a = 0.0;
    std::vector<T> alpha;

    static Weight geometric(unsigned p, T s, std::vector<T> alpha = {})
    {
        if (s < T(0)) throw DomainError("geometric weight needs s >= 0");
        return checked({WeightKind::geometric, p, s, 0.0, std::move(alpha)});
    }
    static Weight laplace(unsigned p, double a, std::vector<T> alpha = {})
    {
        if (!(a >= 0.0)) throw DomainError("Laplace weight needs a >= 0");
        return checked({WeightKind::laplace, p, T(0), a, std::move(alpha)});
    }
    static Weight conjugate_laplace(unsigned p, double a, std::vector<T> alpha = {})
    {
        if (!(a >= 0.0)) throw DomainError("Laplace weight needs a >= 0");
        return checked({WeightKind::conjugate_laplace, p, T(0), a, std::move(alpha)});
    }

    /// alpha_w for w = 0..p.
    std::vector<T> coefficients() const
    {
        if (!alpha.empty()) return alpha;
        std::vector<T> c(p + 1, T(0));
        c[p] = T(1);
        return c;
    }

    std::string describe() const
    {
        std::ostringstream out;
        switch (kind) {
        case WeightKind::geometric: out << "geom:p=" << p << ",s=" << format_scalar(s); break;
        case WeightKind::laplace: out << "laplace:p=" << p << ",a=" << format_scalar(a); break;
        case WeightKind::conjugate_laplace: out << "conj_laplace:p=" << p << ",a=" << format_scalar(a); break;
        }
        return out.str();
    }

private:
    static Weight checked(Weight w)
    {
        if (!w.alpha.empty()) {
            if (w.alpha.size() != w.p + 1) throw DomainError("weight polynomial needs p + 1 coefficients");
            if (w.alpha[w.p] == T(0)) throw DomainError("weight polynomial must have degree p");
            if (w.p > 0 && w.alpha[0] != T(0)) throw DomainError("weight polynomial must vanish at 0");
        }
        return w;
    }
};

/// Parses "geom:p=1,s=0.5", "laplace:p=2,a=1.0" or "conj_laplace:p=1,a=0".
template <ProbScalar T>
Weight<T> parse_weight(const std::string& text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError("weight '" + text + "' lacks a ':'");
    const std::string kind = text.substr(0, colon);
    std::optional<unsigned> p;
    std::optional<std::string> s, a;
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw DomainError("weight field '" + item + "' lacks '='");
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        if (key == "p") {
            const BigInt v = detail::parse_decimal_integer(value);
            if (v < 0 || v > 16) throw DomainError("weight p out of range: " + value);
            p = v.convert_to<unsigned>();
        } else if (key == "s") {
            s = value;
        } else if (key == "a") {
            a = value;
        } else {
            throw DomainError("unknown weight field '" + key + "'");
        }
    }
    if (!p) throw DomainError("weight '" + text + "' lacks p");
    const auto number = [](const std::string& v) -> T {
        if constexpr (is_exact_v<T>) return parse_rational(v);
        else return to_double(parse_rational(v));
    };
    if (kind == "geom") {
        if (!s || a) throw DomainError("geom weight takes p and s");
        return Weight<T>::geometric(*p, number(*s));
    }
    if (kind == "laplace" || kind == "conj_laplace") {
        if (!a || s) throw DomainError(kind + " weight takes p and a");
        const double av = to_double(parse_rational(*a));
        return kind == "laplace" ? Weight<T>::laplace(*p, av) : Weight<T>::conjugate_laplace(*p, av);
    }
    throw DomainError("unknown weight kind '" + kind + "'");
}

/// An F_n-measurable event: a set of values of Z_n, or a predicate on the
/// truncated tree r_n(tau) (enumeration mode only).
struct EventSpec {
    enum class Kind { full, z_equals, z_in, z_at_most, tree };

    Kind kind = Kind::full;
    std::set<std::size_t> values;
    std::size_t bound = 0;
    std::function<bool(const UlamTree&)> predicate;
    std::string label = "full";

    static EventSpec full() { return {}; }
    static EventSpec z_equals(std::size_t k)
    {
        EventSpec e;
        e.kind = Kind::z_equals;
        e.values = {k};
        e.label = "z_eq:" + std::to_string(k);
        return e;
    }
    static EventSpec z_in(std::set<std::size_t> set)
    {
        EventSpec e;
        e.kind = Kind::z_in;
        e.label = "z_in:";
        for (auto it = set.begin(); it != set.end(); ++it) e.label += (it == set.begin() ? "" : ",") + std::to_string(*it);
        e.values = std::move(set);
        return e;
    }
    static EventSpec z_at_most(std::size_t k)
    {
        EventSpec e;
        e.kind = Kind::z_at_most;
        e.bound = k;
        e.label = "z_le:" + std::to_string(k);
        return e;
    }
    static EventSpec tree_event(std::function<bool(const UlamTree&)> pred, std::string label)
    {
        EventSpec e;
        e.kind = Kind::tree;
        e.predicate = std::move(pred);
        e.label = std::move(label);
        return e;
    }

    bool is_tree_event() const noexcept { return kind == Kind::tree; }

    bool contains(std::size_t z) const
    {
        switch (kind) {
        case Kind::full: return true;
        case Kind::z_equals:
        case Kind::z_in: return values.count(z) > 0;
        case Kind::z_at_most: return z <= bound;
        case Kind::tree: throw DomainError("tree event '" + label + "' is not a function of Z_n");
        }
        return false;
    }

    bool contains(const UlamTree& t, unsigned n) const
    {
        if (kind == Kind::tree) return predicate(t);
        return contains(t.generation_size(n));
    }
};

/// Parses "full", "z_eq:2", "z_in:1,3" or "z_le:4".
inline EventSpec parse_event(const std::string& text)
{
    if (text == "full") return EventSpec::full();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError("bad event '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const auto number = [&](const std::string& v) {
        const BigInt b = detail::parse_decimal_integer(v);
        if (b < 0) throw DomainError("negative generation size in event '" + text + "'");
        return b.convert_to<std::size_t>();
    };
    if (kind == "z_eq") return EventSpec::z_equals(number(text.substr(colon + 1)));
    if (kind == "z_le") return EventSpec::z_at_most(number(text.substr(colon + 1)));
    if (kind == "z_in") {
        std::set<std::size_t> set;
        std::stringstream rest(text.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) set.insert(number(item));
        if (set.empty()) throw DomainError("empty set in event '" + text + "'");
        return EventSpec::z_in(std::move(set));
    }
    throw DomainError("unknown event kind '" + kind + "'");
}

template <ProbScalar T>
struct PenalizationProblem {
    OffspringDistribution<T> q;
    Weight<T> weight;
    EventSpec event;
    unsigned n = 0;
    std::vector<unsigned> m_schedule;  // empty: regime default
};

// ---------------------------------------------------------------------------
// Conditional weights
// ---------------------------------------------------------------------------

namespace detail {

/// sum_i H_i(z) c_0^{z-i} sum_{S_{i,w}} prod c_{n_j}  (w >= 1), or c_0^z (w = 0),
/// where c_k = f_m^{(k)}(s) / k!.
template <Scalar S>
S hilbert_mix(const std::vector<S>& c, unsigned w, std::size_t z)
{
    const auto uz = static_cast<std::uint64_t>(z);
    if (w == 0) return ipow(c[0], uz);
    const auto sums = composition_sums(c, w);
    S total(0);
    for (unsigned i = 1; i <= w && i <= uz; ++i)
        total = total + hilbert<S>(i, S(static_cast<long long>(z))) * ipow(c[0], uz - i) * sums[i - 1];
    return total;
}

} // namespace detail

/// E[H_p(Z_{n+m}) s^{Z_{n+m} - p} | Z_n = z]
///   = sum_i H_i(z) f_m(s)^{z-i} sum_{S_{i,p}} prod_j f_m^{(n_j)}(s) / n_j!,
/// and f_m(s)^z for p = 0.
template <ProbScalar T>
T conditional_weight(const OffspringDistribution<T>& q, unsigned p, const T& s, std::size_t z, unsigned m,
                     std::size_t bit_cap = kDefaultBitCap)
{
    const auto jet = iterate_jet(q, m, s, p, bit_cap);
    const T v = detail::hilbert_mix(jet.coeffs, p, z);
    check_size(v, bit_cap);
    return v;
}

namespace detail {

/// Weights W_m(z) for z = 0..zmax, each proportional (with a z-independent
/// positive factor) to E[P(Z_{n+m}) w(Z_{n+m}) | Z_n = z]. Log-magnitude
/// scalars so that doubly-exponentially small values survive.
template <ProbScalar T>
std::vector<LogReal> log_weights(const OffspringDistribution<T>& q, const Weight<T>& weight, unsigned n, unsigned m,
                                 std::size_t zmax, const LaplaceOptions& lopts)
{
    const unsigned p = weight.p;
    const auto alpha = weight.coefficients();
    std::vector<LogReal> out(zmax + 1);

    // Relative jet at s: W(z) = f_m(s)^z sum_w alpha_w s^w mix_w(r, z).
    const auto from_relative = [&](double s) {
        std::vector<double> alpha_d(alpha.size());
        for (std::size_t w = 0; w < alpha.size(); ++w) alpha_d[w] = to_double(alpha[w]);
        if (s == 0.0) {
            const auto jet = iterate_jet(q, m, 0.0, p);
            std::vector<LogReal> c(jet.coeffs.begin(), jet.coeffs.end());
            for (std::size_t z = 0; z <= zmax; ++z) out[z] = LogReal(alpha_d[0]) * hilbert_mix(c, 0, z);
            return;
        }
        const auto rel = iterate_jet_relative(q, m, s, p);
        std::vector<LogReal> r(rel.ratios.begin(), rel.ratios.end());
        for (std::size_t z = 0; z <= zmax; ++z) {
            LogReal poly(0.0);
            for (unsigned w = 0; w <= p; ++w) {
                if (alpha_d[w] == 0.0) continue;
                poly += LogReal(alpha_d[w]) * ipow(LogReal(s), w) * hilbert_mix(r, w, z);
            }
            out[z] = LogReal::from_log(1, static_cast<double>(z) * rel.log_value) * poly;
        }
    };

    switch (weight.kind) {
    case WeightKind::geometric: from_relative(to_double(weight.s)); break;
    case WeightKind::conjugate_laplace: {
        const auto c = characterize(q);
        if (c.regime != Regime::subcritical) throw DomainError("conjugate Laplace weight needs a sub-critical law");
        const auto qf = q.to_float();
        const double kappa = gwpen::upper_fixed_point<double>(qf);
        const double mubar = qf.derivative(1, kappa);
        from_relative(kappa * std::exp(-weight.a / std::pow(mubar, static_cast<double>(n + m))));
        break;
    }
    case WeightKind::laplace: {
        // Complement coordinates: d_k = (-1)^k mu^{-mk} f_m^{(k)}(s_m), s_m = exp(-a / mu^{n+m}).
        const LaplaceTransform lt(q, std::max(p, 1U), lopts);
        const double mu = lt.mu();
        const double a_n = weight.a / std::pow(mu, static_cast<double>(n));
        const auto d = lt.at_depth(a_n, p, m);
        std::vector<LogReal> c(p + 1);
        for (unsigned k = 0; k <= p; ++k) c[k] = LogReal(d[k] / to_double(factorial<double>(k)));
        const double sm = std::exp(-a_n / std::pow(mu, static_cast<double>(m)));
        for (std::size_t z = 0; z <= zmax; ++z) {
            LogReal poly(0.0);
            for (unsigned w = 0; w <= p; ++w) {
                const double aw = to_double(alpha[w]);
                if (aw == 0.0) continue;
                // (-1)^w mix_w(d) >= 0; lower degrees are damped by mu^{-m(p-w)}.
                const double scale = aw * std::pow(sm, w) * std::pow(mu, -static_cast<double>(m) * (p - w));
                LogReal term = LogReal(scale) * hilbert_mix(c, w, z);
                poly += w % 2 ? -term : term;
            }
            out[z] = poly;
        }
        break;
    }
    }
    return out;
}

/// Exact weights for geometric weights with rational s and for the a = 0
/// Laplace weight (s = 1).
template <ProbScalar T>
std::vector<T> exact_weights(const OffspringDistribution<T>& q, const Weight<T>& weight, unsigned m, std::size_t zmax,
                             std::size_t bit_cap)
{
    T s;
    if (weight.kind == WeightKind::geometric) s = weight.s;
    else if (weight.kind == WeightKind::laplace && weight.a == 0.0) s = T(1);
    else throw DomainError("exponential weights need float mode");
    const auto jet = iterate_jet(q, m, s, weight.p, bit_cap);
    const auto alpha = weight.coefficients();
    std::vector<T> out(zmax + 1, T(0));
    for (std::size_t z = 0; z <= zmax; ++z) {
        for (unsigned w = 0; w <= weight.p; ++w)
            if (alpha[w] != T(0)) out[z] = out[z] + alpha[w] * ipow(s, w) * hilbert_mix(jet.coeffs, w, z);
        check_size(out[z], bit_cap);
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Ratios
// ---------------------------------------------------------------------------

struct PenalizationOptions {
    std::size_t bit_cap = kDefaultBitCap;
    std::size_t state_cap = kDefaultStateCap;
    EnumerationLimits enumeration;
    LaplaceOptions laplace;
    /// Final-error threshold for the `converged` verdict.
    double tol = 1e-6;
    /// Errors at or below this level count as decreasing (numerical floor).
    double noise_floor = 1e-14;
};

namespace detail {

/// Sum over Z_n (or over trees for tree events) of P * W * g, for a per-state
/// factor g; returns (event part, total).
template <ProbScalar T, class W, class G>
std::pair<W, W> weighted_sums(const PenalizationProblem<T>& pr, const std::vector<W>& weights, const G& factor,
                              const PenalizationOptions& opts)
{
    W num(0), den(0);
    const auto law = generation_law(pr.q, pr.n, opts.state_cap);
    for (std::size_t z = 0; z < law.size(); ++z) {
        if (law[z] == T(0)) continue;
        W pz;
        if constexpr (std::is_same_v<W, LogReal>) pz = LogReal(to_double(law[z]));
        else pz = law[z];
        den = den + pz * weights[z];
    }
    if (!pr.event.is_tree_event()) {
        for (std::size_t z = 0; z < law.size(); ++z) {
            if (law[z] == T(0)) continue;
            W pz;
            if constexpr (std::is_same_v<W, LogReal>) pz = LogReal(to_double(law[z]));
            else pz = law[z];
            num = num + pz * weights[z] * factor(pr.event.contains(z), z);
        }
    } else {
        const auto trees = enumerate_trees(pr.n, static_cast<unsigned>(pr.q.max_offspring()), 0, opts.enumeration);
        for (const auto& t : trees) {
            const T pt = gw_probability(pr.q, t, pr.n);
            if (pt == T(0)) continue;
            W pw;
            if constexpr (std::is_same_v<W, LogReal>) pw = LogReal(to_double(pt));
            else pw = pt;
            const std::size_t z = t.generation_size(pr.n);
            num = num + pw * weights[z] * factor(pr.event.contains(t, pr.n), z);
        }
    }
    return {num, den};
}

inline std::size_t max_state(std::size_t k, unsigned n)
{
    std::size_t z = 1;
    for (unsigned i = 0; i < n; ++i) z *= k;
    return z;
}

} // namespace detail

/// ratio(m) in the law's scalar type: exact for rational geometric weights and
/// for the a = 0 Laplace weight when T = Rational, float otherwise.
template <ProbScalar T>
T ratio(const PenalizationProblem<T>& pr, unsigned m, const PenalizationOptions& opts = {})
{
    const std::size_t zmax = detail::max_state(pr.q.max_offspring(), pr.n);
    if constexpr (is_exact_v<T>) {
        const auto w = detail::exact_weights(pr.q, pr.weight, m, zmax, opts.bit_cap);
        const auto [num, den] = detail::weighted_sums(pr, w, [](bool in, std::size_t) { return T(in ? 1 : 0); }, opts);
        if (den == T(0)) throw DomainError("penalization ratio: denominator vanishes for " + pr.weight.describe());
        return num / den;
    } else {
        const auto w = detail::log_weights(pr.q, pr.weight, pr.n, m, zmax, opts.laplace);
        const auto [num, den] =
            detail::weighted_sums(pr, w, [](bool in, std::size_t) { return LogReal(in ? 1.0 : 0.0); }, opts);
        if (den.is_zero()) throw DomainError("penalization ratio: denominator vanishes for " + pr.weight.describe());
        return (num / den).to_double();
    }
}

struct RatioPoint {
    unsigned m = 0;
    double ratio = 0.0;
    double error = 0.0;      // |ratio(m) - limit|
    double log_error = 0.0;  // log of error, kept when error underflows
};

/// ratio(m) in log-magnitude arithmetic plus its distance to `limit`, computed
/// as |sum P W (1_Lambda - limit)| / sum P W so that errors far below double
/// resolution of the ratio stay visible.
template <ProbScalar T>
RatioPoint ratio_point(const PenalizationProblem<T>& pr, unsigned m, const T& limit, const PenalizationOptions& opts = {})
{
    const std::size_t zmax = detail::max_state(pr.q.max_offspring(), pr.n);
    const auto w = detail::log_weights(pr.q, pr.weight, pr.n, m, zmax, opts.laplace);
    const auto [num, den] =
        detail::weighted_sums(pr, w, [](bool in, std::size_t) { return LogReal(in ? 1.0 : 0.0); }, opts);
    if (den.is_zero()) throw DomainError("penalization ratio: denominator vanishes for " + pr.weight.describe());
    const T one_minus = T(1) - limit;
    const T minus = T(0) - limit;
    const double d_one_minus = to_double(one_minus), d_minus = to_double(minus);
    const auto [dev, den2] = detail::weighted_sums(
        pr, w, [&](bool in, std::size_t) { return LogReal(in ? d_one_minus : d_minus); }, opts);
    (void)den2;
    RatioPoint pt;
    pt.m = m;
    pt.ratio = (num / den).to_double();
    const LogReal err = abs_value(dev / den);
    pt.error = err.to_double();
    pt.log_error = err.log_abs();
    return pt;
}

// ---------------------------------------------------------------------------
// Limits
// ---------------------------------------------------------------------------

enum class PenalizationRegime {
    geometric_extinction,    // q_0 > 0, non-critical, s in [0, 1)
    geometric_subcritical,   // sub-critical, s in [1, kappa)
    geometric_single_child,  // q_0 = 0, q_1 > 0
    geometric_boettcher,     // q_0 = q_1 = 0
    geometric_critical,      // critical, s in [0, 1]
    laplace,                 // super-critical
    conjugate_laplace,       // sub-critical with kappa > 1
};

inline std::string to_string(PenalizationRegime r)
{
    switch (r) {
    case PenalizationRegime::geometric_extinction: return "geometric-extinction";
    case PenalizationRegime::geometric_subcritical: return "geometric-subcritical";
    case PenalizationRegime::geometric_single_child: return "geometric-single-child";
    case PenalizationRegime::geometric_boettcher: return "geometric-boettcher";
    case PenalizationRegime::geometric_critical: return "geometric-critical";
    case PenalizationRegime::laplace: return "laplace";
    case PenalizationRegime::conjugate_laplace: return "conjugate-laplace";
    }
    return "?";
}

inline std::vector<unsigned> default_schedule(PenalizationRegime r)
{
    std::vector<unsigned> s;
    if (r == PenalizationRegime::geometric_boettcher) {
        for (unsigned m = 2; m <= 8; ++m) s.push_back(m);
    } else if (r == PenalizationRegime::geometric_critical) {
        for (unsigned m = 10; m <= 200; m += 10) s.push_back(m);
    } else {
        for (unsigned m = 5; m <= 60; m += 5) s.push_back(m);
    }
    return s;
}

/// Picks the limit martingale for the weight and the regime of q. Throws
/// DomainError naming the unmet hypothesis when no result applies.
template <ProbScalar T>
std::pair<PenalizationRegime, MartingaleSpec<T>> select_martingale(const OffspringDistribution<T>& q,
                                                                   const Weight<T>& w,
                                                                   const LaplaceOptions& lopts = {})
{
    const auto c = characterize(q);
    const unsigned p = w.p;
    switch (w.kind) {
    case WeightKind::geometric: {
        const T s = w.s;
        if (c.regime == Regime::critical) {
            if (s > T(1)) throw DomainError("critical law: geometric weight needs s in [0, 1]");
            return {PenalizationRegime::geometric_critical,
                    p == 0 ? MartingaleSpec<T>::extinction(q) : MartingaleSpec<T>::critical_size(q)};
        }
        if (c.regime == Regime::subcritical && s >= T(1)) {
            const T kappa = upper_fixed_point(q);
            if (!(s < kappa)) throw DomainError("sub-critical law: geometric weight needs s < kappa = " + format_scalar(kappa));
            return {PenalizationRegime::geometric_subcritical,
                    p == 0 ? MartingaleSpec<T>::extinction(q) : MartingaleSpec<T>::sized_biased_extinct(q)};
        }
        if (s >= T(1)) throw DomainError("non-critical law: geometric weight needs s in [0, 1)");
        if (q.prob(0) != T(0))
            return {PenalizationRegime::geometric_extinction,
                    p == 0 ? MartingaleSpec<T>::extinction(q) : MartingaleSpec<T>::sized_biased_extinct(q)};
        if (s == T(0)) throw DomainError("q_0 = 0: geometric weight needs s in (0, 1)");
        if (c.a_min == 1) return {PenalizationRegime::geometric_single_child, MartingaleSpec<T>::schroeder_unit(q)};
        return {PenalizationRegime::geometric_boettcher, MartingaleSpec<T>::boettcher_unit(q)};
    }
    case WeightKind::laplace:
        if (!is_supercritical(c.regime)) throw DomainError("Laplace weight needs a super-critical law");
        return {PenalizationRegime::laplace, MartingaleSpec<T>::penalized(q, p, w.a, lopts)};
    case WeightKind::conjugate_laplace:
        if (c.regime != Regime::subcritical)
            throw DomainError("conjugate Laplace weight needs a sub-critical law with a fixed point kappa > 1");
        return {PenalizationRegime::conjugate_laplace, MartingaleSpec<T>::conjugate_penalized(q, p, w.a, lopts)};
    }
    throw DomainError("unknown weight");
}

template <ProbScalar T>
struct LimitResult {
    T limit;
    PenalizationRegime regime;
    MartingaleKind martingale;
    std::vector<RatioPoint> table;
    bool errors_decreasing = false;
    bool converged = false;
};

/// E[M_n 1_Lambda] for a martingale given as a function of (n, z).
template <ProbScalar T>
T expectation_on_event(const PenalizationProblem<T>& pr, const MartingaleSpec<T>& M,
                       const PenalizationOptions& opts = {})
{
    T total(0);
    if (!pr.event.is_tree_event()) {
        const auto law = generation_law(pr.q, pr.n, opts.state_cap);
        for (std::size_t z = 0; z < law.size(); ++z)
            if (law[z] != T(0) && pr.event.contains(z)) total = total + law[z] * M.evaluate(pr.n, z);
    } else {
        for (const auto& t : enumerate_trees(pr.n, static_cast<unsigned>(pr.q.max_offspring()), 0, opts.enumeration)) {
            if (!pr.event.contains(t, pr.n)) continue;
            total = total + gw_probability(pr.q, t, pr.n) * M.evaluate(pr.n, t.generation_size(pr.n));
        }
    }
    return total;
}

/// True when each of the last `count` errors is below its predecessor or at
/// the noise floor.
inline bool last_errors_decreasing(const std::vector<RatioPoint>& table, std::size_t count, double floor)
{
    if (table.size() < 2) return false;
    const std::size_t start = table.size() > count ? table.size() - count : 0;
    for (std::size_t k = std::max<std::size_t>(start, 1); k < table.size(); ++k) {
        if (table[k].error <= floor) continue;
        if (!(table[k].log_error < table[k - 1].log_error)) return false;
    }
    return true;
}

template <ProbScalar T>
LimitResult<T> limit_ratio(const PenalizationProblem<T>& pr, const PenalizationOptions& opts = {})
{
    auto [regime, spec] = select_martingale(pr.q, pr.weight, opts.laplace);
    LimitResult<T> r{expectation_on_event(pr, spec, opts), regime, spec.kind(), {}, false, false};
    const auto schedule = pr.m_schedule.empty() ? default_schedule(regime) : pr.m_schedule;
    for (unsigned m : schedule) r.table.push_back(ratio_point(pr, m, r.limit, opts));
    const double floor = opts.noise_floor * std::max(1.0, std::abs(to_double(r.limit)));
    r.errors_decreasing = last_errors_decreasing(r.table, 5, floor);
    r.converged = r.errors_decreasing && !r.table.empty() && r.table.back().error <= opts.tol;
    return r;
}

/// Successive error ratios e_{k+1} / e_k (geometric decay rate estimates).
inline std::vector<double> decay_ratios(const std::vector<RatioPoint>& table)
{
    std::vector<double> out;
    for (std::size_t k = 1; k < table.size(); ++k) out.push_back(std::exp(table[k].log_error - table[k - 1].log_error));
    return out;
}

/// log e_{k+1} / log e_k; tends to a_min >= 2 under super-geometric decay.
inline std::vector<double> log_log_slopes(const std::vector<RatioPoint>& table)
{
    std::vector<double> out;
    for (std::size_t k = 1; k < table.size(); ++k) out.push_back(table[k].log_error / table[k - 1].log_error);
    return out;
}

// ---------------------------------------------------------------------------
// Conjugation density on trees
// ---------------------------------------------------------------------------

template <ProbScalar T>
struct DensityReport {
    std::size_t trees_checked = 0;
    bool all_equal = true;
    double max_gap = 0.0;
    std::string first_mismatch;
};

/// P_qbar(r_n(tau) = t) = kappa^{z_n(t) - 1} P_q(r_n(tau) = t) for every tree of
/// height <= `height`, with qbar the conjugate law.
template <ProbScalar T>
DensityReport<T> check_conjugation_density(const OffspringDistribution<T>& q, unsigned height,
                                           const EnumerationLimits& limits = {}, double tol = 1e-12)
{
    const auto bar = conjugate(q);
    const T kappa = conjugation_point(q);
    DensityReport<T> rep;
    for (const auto& t : enumerate_trees(height, static_cast<unsigned>(q.max_offspring()), 0, limits)) {
        const std::size_t z = t.generation_size(height);
        const T lhs = gw_probability(bar, t, height);
        const T rhs = (z == 0 ? T(1) / kappa : ipow(kappa, z - 1)) * gw_probability(q, t, height);
        ++rep.trees_checked;
        bool eq;
        if constexpr (is_exact_v<T>) {
            eq = lhs == rhs;
            if (!eq) rep.max_gap = std::max(rep.max_gap, std::abs(to_double(lhs - rhs)));
        } else {
            rep.max_gap = std::max(rep.max_gap, std::abs(lhs - rhs));
            eq = std::abs(lhs - rhs) <= tol;
        }
        if (!eq && rep.all_equal) {
            rep.all_equal = false;
            rep.first_mismatch = t.to_string();
        }
    }
    return rep;
}

} // namespace gwpen
