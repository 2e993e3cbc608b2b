#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "errors.hpp"

namespace warpcert {

// Real number stored as sign and natural log of the magnitude.
struct LogScalar {
    int sign = 0;
    double logmag = -std::numeric_limits<double>::infinity();

    constexpr LogScalar() = default;
    LogScalar(double v) { // NOLINT: implicit lift is the point
        if (v > 0) { sign = 1; logmag = std::log(v); }
        else if (v < 0) { sign = -1; logmag = std::log(-v); }
    }

    static LogScalar from_log(double lm, int s = 1) {
        LogScalar r;
        if (s != 0 && lm != -std::numeric_limits<double>::infinity()) {
            r.sign = s > 0 ? 1 : -1;
            r.logmag = lm;
        }
        return r;
    }

    bool is_zero() const { return sign == 0; }

    // overflows to +-inf and underflows to 0 as a double would
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(logmag); }
    explicit operator double() const { return value(); }

    LogScalar operator-() const { LogScalar r = *this; r.sign = -r.sign; return r; }
};

namespace detail {
// log(exp(a) + exp(b)) and log(exp(a) - exp(b)) for a >= b
inline double log_add(double a, double b) { return a + std::log1p(std::exp(b - a)); }
inline double log_sub(double a, double b) {
    const double d = b - a;
    return d > -0.6931471805599453 ? a + std::log(-std::expm1(d)) : a + std::log1p(-std::exp(d));
}
} // namespace detail

inline LogScalar operator+(const LogScalar& a, const LogScalar& b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    const LogScalar& big = a.logmag >= b.logmag ? a : b;
    const LogScalar& small = a.logmag >= b.logmag ? b : a;
    if (a.sign == b.sign) return LogScalar::from_log(detail::log_add(big.logmag, small.logmag), big.sign);
    if (big.logmag == small.logmag) return {};
    return LogScalar::from_log(detail::log_sub(big.logmag, small.logmag), big.sign);
}
inline LogScalar operator-(const LogScalar& a, const LogScalar& b) { return a + (-b); }
inline LogScalar operator*(const LogScalar& a, const LogScalar& b) {
    if (a.sign == 0 || b.sign == 0) return {};
    return LogScalar::from_log(a.logmag + b.logmag, a.sign * b.sign);
}
inline LogScalar operator/(const LogScalar& a, const LogScalar& b) {
    if (b.sign == 0) throw DomainError("LogScalar division by zero");
    if (a.sign == 0) return {};
    return LogScalar::from_log(a.logmag - b.logmag, a.sign * b.sign);
}
inline LogScalar& operator+=(LogScalar& a, const LogScalar& b) { return a = a + b; }
inline LogScalar& operator-=(LogScalar& a, const LogScalar& b) { return a = a - b; }
inline LogScalar& operator*=(LogScalar& a, const LogScalar& b) { return a = a * b; }
inline LogScalar& operator/=(LogScalar& a, const LogScalar& b) { return a = a / b; }

inline int compare(const LogScalar& a, const LogScalar& b) {
    if (a.sign != b.sign) return a.sign < b.sign ? -1 : 1;
    if (a.sign == 0 || a.logmag == b.logmag) return 0;
    const bool less = a.sign > 0 ? a.logmag < b.logmag : a.logmag > b.logmag;
    return less ? -1 : 1;
}
inline bool operator<(const LogScalar& a, const LogScalar& b) { return compare(a, b) < 0; }
inline bool operator>(const LogScalar& a, const LogScalar& b) { return compare(a, b) > 0; }
inline bool operator<=(const LogScalar& a, const LogScalar& b) { return compare(a, b) <= 0; }
inline bool operator>=(const LogScalar& a, const LogScalar& b) { return compare(a, b) >= 0; }
inline bool operator==(const LogScalar& a, const LogScalar& b) { return compare(a, b) == 0; }

inline LogScalar abs(const LogScalar& a) { return LogScalar::from_log(a.logmag, a.sign == 0 ? 0 : 1); }

inline LogScalar pow(const LogScalar& a, double p) {
    if (a.sign <= 0) throw DomainError("LogScalar pow of non-positive base");
    return LogScalar::from_log(p * a.logmag);
}
inline LogScalar logscalar_pow(const LogScalar& a, double p) { return pow(a, p); }

inline LogScalar sqrt(const LogScalar& a) {
    if (a.sign == 0) return {};
    return pow(a, 0.5);
}

inline double log(const LogScalar& a) {
    if (a.sign <= 0) throw DomainError("log of non-positive LogScalar");
    return a.logmag;
}
inline LogScalar exp_ls(double x) { return LogScalar::from_log(x); }

// sine/cosine of an angle that may be far below double range
inline LogScalar sin(const LogScalar& a) {
    if (a.sign == 0) return {};
    if (a.logmag < -20.0) return a;
    return LogScalar(std::sin(a.value()));
}
inline LogScalar cos(const LogScalar& a) {
    if (a.sign == 0 || a.logmag < -40.0) return LogScalar(1.0);
    return LogScalar(std::cos(a.value()));
}
inline LogScalar asin(const LogScalar& a) {
    if (a.sign == 0 || a.logmag < -20.0) return a;
    return LogScalar(std::asin(a.value()));
}

inline std::ostream& operator<<(std::ostream& os, const LogScalar& a) {
    if (a.sign == 0) return os << "0";
    return os << (a.sign < 0 ? "-" : "") << "exp(" << a.logmag << ")";
}

} // namespace warpcert
