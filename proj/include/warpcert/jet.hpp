#pragma once

#include <cmath>
#include <type_traits>

#include "log_scalar.hpp"

namespace warpcert {

// Value with exact first and second derivative along one active variable.
template <class T>
struct Jet2 {
    T value{};
    T d1{};
    T d2{};

    constexpr Jet2() = default;
    constexpr Jet2(T v, T a, T b) : value(v), d1(a), d2(b) {}

    static Jet2 constant(T v) { return {v, T(0.0), T(0.0)}; }
    static Jet2 variable(T v) { return {v, T(1.0), T(0.0)}; }

    Jet2 operator-() const { return {-value, -d1, -d2}; }
};

using Jet = Jet2<double>;
using LogJet = Jet2<LogScalar>;

// h = g(f): d1 = g'(f) f', d2 = g''(f) f'^2 + g'(f) f''
template <class T>
Jet2<T> chain(const Jet2<T>& f, T g, T g1, T g2) {
    return {g, g1 * f.d1, g2 * f.d1 * f.d1 + g1 * f.d2};
}

template <class T>
Jet2<T> operator+(const Jet2<T>& a, const Jet2<T>& b) { return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2}; }
template <class T>
Jet2<T> operator-(const Jet2<T>& a, const Jet2<T>& b) { return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2}; }
template <class T>
Jet2<T> operator*(const Jet2<T>& a, const Jet2<T>& b) {
    return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
            a.d2 * b.value + T(2.0) * a.d1 * b.d1 + a.value * b.d2};
}
template <class T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b) {
    // q = a/b, q' = (a' - q b')/b, q'' = (a'' - 2 q' b' - q b'')/b
    const T q = a.value / b.value;
    const T q1 = (a.d1 - q * b.d1) / b.value;
    const T q2 = (a.d2 - T(2.0) * q1 * b.d1 - q * b.d2) / b.value;
    return {q, q1, q2};
}

template <class T>
Jet2<T> operator+(const Jet2<T>& a, const std::type_identity_t<T>& c) { return {a.value + c, a.d1, a.d2}; }
template <class T>
Jet2<T> operator+(const std::type_identity_t<T>& c, const Jet2<T>& a) { return a + c; }
template <class T>
Jet2<T> operator-(const Jet2<T>& a, const std::type_identity_t<T>& c) { return {a.value - c, a.d1, a.d2}; }
template <class T>
Jet2<T> operator-(const std::type_identity_t<T>& c, const Jet2<T>& a) { return {c - a.value, -a.d1, -a.d2}; }
template <class T>
Jet2<T> operator*(const Jet2<T>& a, const std::type_identity_t<T>& c) { return {a.value * c, a.d1 * c, a.d2 * c}; }
template <class T>
Jet2<T> operator*(const std::type_identity_t<T>& c, const Jet2<T>& a) { return a * c; }
template <class T>
Jet2<T> operator/(const Jet2<T>& a, const std::type_identity_t<T>& c) { return {a.value / c, a.d1 / c, a.d2 / c}; }
template <class T>
Jet2<T> operator/(const std::type_identity_t<T>& c, const Jet2<T>& a) { return Jet2<T>::constant(c) / a; }

template <class T>
Jet2<T>& operator+=(Jet2<T>& a, const Jet2<T>& b) { return a = a + b; }
template <class T>
Jet2<T>& operator-=(Jet2<T>& a, const Jet2<T>& b) { return a = a - b; }
template <class T>
Jet2<T>& operator*=(Jet2<T>& a, const Jet2<T>& b) { return a = a * b; }

template <class T>
Jet2<T> pow(const Jet2<T>& a, double p) {
    using std::pow;
    const T v = pow(a.value, p - 2.0);
    return chain(a, v * a.value * a.value, T(p) * v * a.value, T(p * (p - 1.0)) * v);
}
template <class T>
Jet2<T> sqrt(const Jet2<T>& a) {
    using std::sqrt;
    const T s = sqrt(a.value);
    return chain(a, s, T(0.5) / s, T(-0.25) / (s * a.value));
}

inline Jet exp(const Jet& a) { const double e = std::exp(a.value); return chain(a, e, e, e); }
inline Jet log(const Jet& a) { return chain(a, std::log(a.value), 1.0 / a.value, -1.0 / (a.value * a.value)); }
inline Jet sin(const Jet& a) { const double s = std::sin(a.value); return chain(a, s, std::cos(a.value), -s); }
inline Jet cos(const Jet& a) { const double c = std::cos(a.value); return chain(a, c, -std::sin(a.value), -c); }
inline Jet tan(const Jet& a) {
    const double t = std::tan(a.value), s = 1.0 + t * t;
    return chain(a, t, s, 2.0 * t * s);
}
inline Jet sinh(const Jet& a) { const double s = std::sinh(a.value); return chain(a, s, std::cosh(a.value), s); }
inline Jet cosh(const Jet& a) { const double c = std::cosh(a.value); return chain(a, c, std::sinh(a.value), c); }
inline Jet tanh(const Jet& a) {
    const double t = std::tanh(a.value), s = 1.0 - t * t;
    return chain(a, t, s, -2.0 * t * s);
}
inline Jet atan(const Jet& a) {
    const double s = 1.0 / (1.0 + a.value * a.value);
    return chain(a, std::atan(a.value), s, -2.0 * a.value * s * s);
}

// log of a positive log-domain jet, returned as an ordinary jet of ln value
inline Jet log(const LogJet& a) {
    const double l1 = (a.d1 / a.value).value();
    const double r2 = (a.d2 / a.value).value();
    return {log(a.value), l1, r2 - l1 * l1};
}

inline LogJet to_log(const Jet& a) { return {LogScalar(a.value), LogScalar(a.d1), LogScalar(a.d2)}; }
inline Jet to_double(const LogJet& a) { return {a.value.value(), a.d1.value(), a.d2.value()}; }

} // namespace warpcert
