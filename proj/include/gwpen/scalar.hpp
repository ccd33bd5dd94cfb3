#pragma once

// Numeric carriers shared by every module: exact rationals, plain doubles and
// a sign/log-magnitude real for quantities that leave the double range.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <type_traits>

#include "gwpen/errors.hpp"

namespace gwpen {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::number<
    boost::multiprecision::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

/// Default cap on numerator/denominator bit length in exact computations.
inline constexpr std::size_t kDefaultBitCap = 16384;

// ---------------------------------------------------------------------------
// LogReal
// ---------------------------------------------------------------------------

/// Real number stored as (sign, log|x|). Products never under- or overflow;
/// sums use log-sum-exp.
class LogReal {
public:
    LogReal() = default;

    LogReal(double x)  // NOLINT(google-explicit-constructor)
    {
        if (x > 0.0) {
            sign_ = 1;
            log_abs_ = std::log(x);
        } else if (x < 0.0) {
            sign_ = -1;
            log_abs_ = std::log(-x);
        }
    }

    template <std::integral I>
    LogReal(I x)  // NOLINT(google-explicit-constructor)
        : LogReal(static_cast<double>(x))
    {
    }

    static LogReal from_log(int sign, double log_abs)
    {
        LogReal r;
        if (sign != 0 && log_abs != -std::numeric_limits<double>::infinity()) {
            r.sign_ = sign > 0 ? 1 : -1;
            r.log_abs_ = log_abs;
        }
        return r;
    }

    int sign() const noexcept { return sign_; }
    double log_abs() const noexcept { return log_abs_; }
    bool is_zero() const noexcept { return sign_ == 0; }

    double to_double() const noexcept { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_abs_); }

    LogReal operator-() const noexcept
    {
        LogReal r = *this;
        r.sign_ = -r.sign_;
        return r;
    }

    friend LogReal operator*(const LogReal& a, const LogReal& b) noexcept
    {
        if (a.sign_ == 0 || b.sign_ == 0) return {};
        return from_log(a.sign_ * b.sign_, a.log_abs_ + b.log_abs_);
    }

    friend LogReal operator/(const LogReal& a, const LogReal& b)
    {
        if (b.sign_ == 0) throw DomainError("LogReal: division by zero");
        if (a.sign_ == 0) return {};
        return from_log(a.sign_ * b.sign_, a.log_abs_ - b.log_abs_);
    }

    friend LogReal operator+(const LogReal& a, const LogReal& b) noexcept
    {
        if (a.sign_ == 0) return b;
        if (b.sign_ == 0) return a;
        const bool a_big = a.log_abs_ >= b.log_abs_;
        const LogReal& hi = a_big ? a : b;
        const LogReal& lo = a_big ? b : a;
        const double d = std::exp(lo.log_abs_ - hi.log_abs_);
        if (hi.sign_ == lo.sign_) return from_log(hi.sign_, hi.log_abs_ + std::log1p(d));
        if (d == 1.0) return {};
        return from_log(hi.sign_, hi.log_abs_ + std::log1p(-d));
    }

    friend LogReal operator-(const LogReal& a, const LogReal& b) noexcept { return a + (-b); }

    LogReal& operator+=(const LogReal& o) noexcept { return *this = *this + o; }
    LogReal& operator-=(const LogReal& o) noexcept { return *this = *this - o; }
    LogReal& operator*=(const LogReal& o) noexcept { return *this = *this * o; }
    LogReal& operator/=(const LogReal& o) { return *this = *this / o; }

    friend bool operator==(const LogReal& a, const LogReal& b) noexcept
    {
        return a.sign_ == b.sign_ && (a.sign_ == 0 || a.log_abs_ == b.log_abs_);
    }

    friend bool operator<(const LogReal& a, const LogReal& b) noexcept
    {
        if (a.sign_ != b.sign_) return a.sign_ < b.sign_;
        if (a.sign_ == 0) return false;
        return a.sign_ > 0 ? a.log_abs_ < b.log_abs_ : a.log_abs_ > b.log_abs_;
    }
    friend bool operator>(const LogReal& a, const LogReal& b) noexcept { return b < a; }
    friend bool operator<=(const LogReal& a, const LogReal& b) noexcept { return !(b < a); }
    friend bool operator>=(const LogReal& a, const LogReal& b) noexcept { return !(a < b); }

private:
    int sign_ = 0;
    double log_abs_ = -std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Generic helpers
// ---------------------------------------------------------------------------

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational> || std::same_as<T, LogReal>;

inline double to_double(double x) noexcept { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }
inline double to_double(const LogReal& x) noexcept { return x.to_double(); }

/// Natural log of |x|; -inf for zero.
inline double log_abs(double x) noexcept { return std::log(std::abs(x)); }
inline double log_abs(const LogReal& x) noexcept { return x.log_abs(); }
inline double log_abs(const Rational& x)
{
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    if (x == 0) return -std::numeric_limits<double>::infinity();
    const auto bits_of = [](const BigInt& v) -> double {
        BigInt a = v < 0 ? BigInt(-v) : v;
        const std::size_t msb = boost::multiprecision::msb(a);
        if (msb < 60) return std::log(a.convert_to<double>());
        const std::size_t shift = msb - 52;
        BigInt top = a >> shift;
        return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
    };
    return bits_of(numerator(x)) - bits_of(denominator(x));
}

/// Exact conversion of a double into the target scalar.
template <Scalar T>
T from_double(double x)
{
    if constexpr (std::is_same_v<T, Rational>) {
        if (!std::isfinite(x)) throw DomainError("cannot convert non-finite value to a rational");
        int exp = 0;
        const double mant = std::frexp(x, &exp);
        const auto m = static_cast<std::int64_t>(std::ldexp(mant, 53));
        Rational r(m);
        exp -= 53;
        if (exp >= 0) r *= Rational(BigInt(1) << exp);
        else r /= Rational(BigInt(1) << (-exp));
        return r;
    } else {
        return T(x);
    }
}

template <Scalar T>
T abs_value(const T& x)
{
    if constexpr (std::is_same_v<T, LogReal>) return x.sign() < 0 ? -x : x;
    else return x < 0 ? T(-x) : x;
}

/// x^e for nonnegative integer e by repeated squaring.
template <Scalar T>
T ipow(T base, std::uint64_t e)
{
    T result(1);
    while (e > 0) {
        if (e & 1U) result = result * base;
        e >>= 1U;
        if (e > 0) base = base * base;
    }
    return result;
}

/// Binomial coefficient C(n, k) in the target scalar; 0 when k > n.
template <Scalar T>
T binomial(std::int64_t n, std::int64_t k)
{
    if (k < 0 || n < 0 || k > n) return T(0);
    if (k > n - k) k = n - k;
    if constexpr (std::is_same_v<T, Rational>) {
        BigInt r = 1;
        for (std::int64_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
        return Rational(r);
    } else {
        double r = 1.0;
        for (std::int64_t i = 0; i < k; ++i) r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
        return T(std::round(r));
    }
}

template <Scalar T>
T factorial(unsigned n)
{
    T r(1);
    for (unsigned i = 2; i <= n; ++i) r = r * T(static_cast<int>(i));
    return r;
}

/// Bit length of the larger of numerator and denominator.
inline std::size_t bit_size(const Rational& x)
{
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    const BigInt num = numerator(x) < 0 ? BigInt(-numerator(x)) : BigInt(numerator(x));
    const BigInt den = denominator(x);
    const std::size_t nb = num == 0 ? 0 : boost::multiprecision::msb(num) + 1;
    const std::size_t db = boost::multiprecision::msb(den) + 1;
    return nb > db ? nb : db;
}

/// Throws ResourceError when an exact value outgrows the configured cap.
template <Scalar T>
void check_size(const T& x, std::size_t cap = kDefaultBitCap)
{
    if constexpr (std::is_same_v<T, Rational>) {
        if (bit_size(x) > cap)
            throw ResourceError("exact value exceeds " + std::to_string(cap) +
                                " bits; use float mode for this computation");
    } else {
        (void)x;
        (void)cap;
    }
}

namespace detail {

/// Strict decimal integer: optional sign, then digits. Leading zeros are
/// stripped so the BigInt parser never reads octal or hex.
inline BigInt parse_decimal_integer(std::string s)
{
    bool negative = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        negative = s[0] == '-';
        s.erase(0, 1);
    }
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw DomainError("bad integer literal '" + s + "'");
    const auto nz = s.find_first_not_of('0');
    BigInt v(nz == std::string::npos ? std::string("0") : s.substr(nz));
    return negative ? BigInt(-v) : v;
}

} // namespace detail

/// Parses "p/q", "p" or a decimal literal like "0.25" into an exact rational.
inline Rational parse_rational(const std::string& text)
{
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw DomainError("empty rational literal");
    try {
        const auto slash = s.find('/');
        if (slash != std::string::npos) {
            const BigInt num = detail::parse_decimal_integer(s.substr(0, slash));
            const BigInt den = detail::parse_decimal_integer(s.substr(slash + 1));
            if (den == 0) throw DomainError("zero denominator in '" + text + "'");
            return Rational(num, den);
        }
        const auto dot = s.find('.');
        if (dot == std::string::npos) return Rational(detail::parse_decimal_integer(s));
        const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        BigInt den = 1;
        for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
        return Rational(detail::parse_decimal_integer(digits), den);
    } catch (const std::runtime_error&) {
        throw DomainError("bad rational literal '" + text + "'");
    }
}

inline std::string format_scalar(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
inline std::string format_scalar(const Rational& x) { return x.str(); }
inline std::string format_scalar(const LogReal& x)
{
    if (x.is_zero()) return "0";
    const double d = x.to_double();
    if (d != 0.0 && std::isfinite(d)) return format_scalar(d);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%sexp(%.17g)", x.sign() < 0 ? "-" : "", x.log_abs());
    return buf;
}

} // namespace gwpen
