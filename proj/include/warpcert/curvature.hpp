#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "jet.hpp"
#include "log_scalar.hpp"
#include "radial.hpp"

namespace warpcert {

// ---------------------------------------------------------------- body metric
// dt^2 + u(t)^2 (dx^2 + f(x)^2 dtheta^2), frame T, X, Sigma

template <class T>
struct QCurvatureT {
    T K_TX{}, K_TSigma{}, K_XSigma{};
    T Ric_T{}, Ric_X{}, Ric_Sigma{};
};
using QCurvature = QCurvatureT<double>;
using LogQCurvature = QCurvatureT<LogScalar>;

namespace detail {
template <class T>
QCurvatureT<T> assemble_q(T ktx, T kxs) {
    QCurvatureT<T> q;
    q.K_TX = ktx;
    q.K_TSigma = ktx;
    q.K_XSigma = kxs;
    q.Ric_T = ktx + ktx;
    q.Ric_X = ktx + kxs;
    q.Ric_Sigma = ktx + kxs;
    return q;
}
} // namespace detail

// u is a jet in t, f a jet in x; valid only where f_t = 0
template <class T>
QCurvatureT<T> q_curvature(const Jet2<T>& u, const Jet2<T>& f) {
    if (!(u.value > T(0.0))) throw DomainError("q_curvature: u must be positive");
    if (!(f.value > T(0.0))) throw DomainError("q_curvature: f vanishes (axis); use the ratio form");
    const T ut = u.d1 / u.value;
    return detail::assemble_q<T>(-(u.d2 / u.value), -(f.d2 / f.value) / (u.value * u.value) - ut * ut);
}

// same, from the profile ratio -f_xx/f, which stays finite on the axis
inline LogQCurvature q_curvature_ratio(const LogJet& u, const LogScalar& neg_fxx_over_f) {
    if (!(u.value > LogScalar(0.0))) throw DomainError("q_curvature: u must be positive");
    const LogScalar ut = u.d1 / u.value;
    return detail::assemble_q<LogScalar>(-(u.d2 / u.value), neg_fxx_over_f / (u.value * u.value) - ut * ut);
}

// Gauss equation on the boundary of the removed ball: N = T cos xi + X sin xi
template <class T>
T q_gauss_boundary_curvature(const Jet2<T>& u, const Jet2<T>& f, double xi, double Lambda) {
    const QCurvatureT<T> q = q_curvature(u, f);
    const double c = std::cos(xi), s = std::sin(xi);
    const T II_YY = T(detail::x_cot_x(LogScalar(0.8 * Lambda)).value() / 0.8);
    const T II_SS = (u.d1 / u.value) * T(c) + (f.d1 / (f.value * u.value)) * T(s);
    return q.K_XSigma * T(c * c) + q.K_TSigma * T(s * s) + II_YY * II_SS;
}

// ---------------------------------------------------------------- cap metric
// dt^2 + ubar^2 dsigma_{S^2} + vbar^2 dtheta_{S^{n-1}}

struct CapParams {
    int n = 2;
    double rho = 0.0;
    double r = 0.0;      // rho^4
    LogScalar lam;       // neck output
    LogScalar c0, k, t0; // tanh(pi/12)/(16 lam), 1/(2 c0), pi/(6k)

    static double tanh12() { return std::tanh(std::numbers::pi / 12); }
    // k * A_i, dimensionless
    double kA(double h) const { return 8 * rho / (h * std::sinh(std::numbers::pi / 12)); }
    LogScalar A(double h) const { return LogScalar(rho) / (lam * LogScalar(h * std::cosh(std::numbers::pi / 12))); }
};

inline CapParams make_cap_params(int n, double rho, LogScalar lam) {
    if (n < 2) throw DomainError("cap: n must be at least 2");
    if (!(lam > LogScalar(0.0))) throw DomainError("cap: lambda must be positive");
    CapParams c;
    c.n = n;
    c.rho = rho;
    c.r = rho * rho * rho * rho;
    c.lam = lam;
    c.c0 = LogScalar(CapParams::tanh12() / 16) / lam;
    c.k = LogScalar(0.5) / c.c0;
    c.t0 = LogScalar(std::numbers::pi / 6) / c.k;
    return c;
}

struct CapCurvature {
    double K_TSig = 0, K_SigSig = 0, K_TTheta = 0, K_ThetaTheta = 0, K_SigTheta = 0;
    double Ric_T = 0, Ric_Sig = 0, Ric_Theta = 0;
};

namespace detail {
inline CapCurvature assemble_cap(int n, double tsig, double sigsig, double ttheta, double thth, double sigth) {
    CapCurvature c{tsig, sigsig, ttheta, thth, sigth, 0, 0, 0};
    const double m = n - 1;
    // two Sigma directions, n-1 Theta directions
    c.Ric_T = 2 * tsig + m * ttheta;
    c.Ric_Sig = sigsig + tsig + m * sigth;
    c.Ric_Theta = (m - 1) * thth + ttheta + 2 * sigth;
    return c;
}
} // namespace detail

// generic doubly warped product; any unit, the result is in the inverse square of that unit
inline CapCurvature cap_curvature(const Jet& ubar, const Jet& vbar, int n) {
    if (n < 2) throw DomainError("cap_curvature: n must be at least 2");
    if (!(ubar.value > 0)) throw DomainError("cap_curvature: ubar must be positive");
    if (!(vbar.value > 0)) throw DomainError("cap_curvature: vbar vanishes; use the closure limit");
    const double up = ubar.d1 / ubar.value, vp = vbar.d1 / vbar.value;
    return detail::assemble_cap(n, -ubar.d2 / ubar.value, 1 / (ubar.value * ubar.value) - up * up, -vbar.d2 / vbar.value,
                                (1 - vbar.d1 * vbar.d1) / (vbar.value * vbar.value), -up * vp);
}

// cap profiles in the variable s = k tbar, scaled by k: k ubar = kA cosh(s/2), k vbar = sin s
inline Jet cap_ubar_scaled(const CapParams& cap, double h, double s) {
    const double kA = cap.kA(h), c = std::cosh(s / 2), sh = std::sinh(s / 2);
    return {kA * c, kA * sh / 2, kA * c / 4};
}
inline Jet cap_vbar_scaled(double s) { return {std::sin(s), std::cos(s), -std::sin(s)}; }

// curvature in units of k^2 at s = k tbar in [0, pi/6]; closed forms, since 1 - cos^2 s cancels for small s
inline CapCurvature cap_curvature_at(const CapParams& cap, double h, double s) {
    if (s < 0 || s > std::numbers::pi / 6 + 1e-15) throw DomainError("cap_curvature_at: s outside [0, pi/6]");
    const Jet u = cap_ubar_scaled(cap, h, s);
    const double up = u.d1 / u.value;
    // tanh(s/2) cot(s)/2 = 1/4 - 5 s^2/48 + ...
    const double sigth = s < 1e-4 ? -0.25 + 5 * s * s / 48 : -up / std::tan(s);
    return detail::assemble_cap(cap.n, -0.25, 1 / (u.value * u.value) - up * up, 1.0, 1.0, sigth);
}

// ---------------------------------------------------------------- neck metric
// dt^2 + A^2 dx^2 + B^2 dsigma, A = t b [1 + (a-1) eta(x)], B = t b cos x

struct NeckCurvature {
    double K_TXXT = 0, K_TSST = 0, K_XSSX = 0, K_TSSX = 0, K_int = 0;
    double Ric_T = 0, Ric_X = 0, Ric_S = 0;
    // smallest eigenvalue of the Ricci form restricted to span(T, X)
    double ric_TX_min_eig() const {
        const double m = 0.5 * (Ric_T + Ric_X), d = 0.5 * (Ric_T - Ric_X);
        const double big = m + std::hypot(d, K_TSSX);
        // det / largest eigenvalue; the direct difference cancels when Ric_X >> Ric_T
        if (big > 0) return (Ric_T * Ric_X - K_TSSX * K_TSSX) / big;
        return m - std::hypot(d, K_TSSX);
    }
};

namespace detail {
// eta tan x and eta_x tan x, finite at x = +-pi/2 because eta and eta_x vanish there
struct EtaTan {
    double eta_tan, etax_tan;
};
inline EtaTan eta_tan(const Jet& eta, double x) {
    const double c = std::cos(x);
    if (std::fabs(c) >= 1e-4) {
        const double t = std::sin(x) / c;
        return {eta.value * t, eta.d1 * t};
    }
    // tan x ~ -1/(x -+ pi/2), eta ~ eta_xx (x -+ pi/2)^2 / 2
    return {-eta.d1 / 2, -eta.d2};
}
} // namespace detail

// la, lb: jets of ln a and ln b in s = ln t; every output is multiplied by t^2
inline NeckCurvature neck_curvature_log(const Jet& la, const Jet& lb, const Jet& eta, double x) {
    if (std::fabs(x) > std::numbers::pi / 2) throw DomainError("neck_curvature: x outside [-pi/2, pi/2]");
    const double a = std::exp(la.value), b = std::exp(lb.value);
    const double as = a * la.d1, ass = a * (la.d2 + la.d1 * la.d1);
    const double D = 1 + (a - 1) * eta.value;
    if (!(D > 0)) throw DomainError("neck_curvature: 1 + (a-1) eta must be positive");
    const double Ds = as * eta.value / D, Dss = ass * eta.value / D;
    // l = ln A, m = ln B as functions of s
    const double ls = 1 + lb.d1 + Ds, lss = lb.d2 + Dss - Ds * Ds;
    const double ms = 1 + lb.d1, mss = lb.d2;
    const auto et = detail::eta_tan(eta, x);
    NeckCurvature k;
    k.K_TXXT = -(lss + ls * ls - ls);
    k.K_TSST = -(mss + ms * ms - ms);
    k.K_int = (1 - (a - 1) * et.etax_tan / D) / (b * b * D * D);
    k.K_XSSX = k.K_int - ls * ms;
    k.K_TSSX = -as * et.eta_tan / (b * D * D);
    k.Ric_T = k.K_TXXT + k.K_TSST;
    k.Ric_X = k.K_TXXT + k.K_XSSX;
    k.Ric_S = k.K_TSST + k.K_XSSX;
    return k;
}

// plain-time version: a, b are jets in t
inline NeckCurvature neck_curvature(const Jet& a, const Jet& b, const Jet& eta, double t, double x) {
    if (!(t > 0) || !(a.value > 0) || !(b.value > 0)) throw DomainError("neck_curvature: t, a, b must be positive");
    auto to_log_time = [t](const Jet& f) {
        const double g1 = f.d1 / f.value, g2 = f.d2 / f.value - g1 * g1;
        return Jet{std::log(f.value), t * g1, t * g1 + t * t * g2};
    };
    NeckCurvature k = neck_curvature_log(to_log_time(a), to_log_time(b), eta, x);
    const double s = 1 / (t * t);
    for (double* p : {&k.K_TXXT, &k.K_TSST, &k.K_XSSX, &k.K_TSSX, &k.K_int, &k.Ric_T, &k.Ric_X, &k.Ric_S}) *p *= s;
    return k;
}

} // namespace warpcert
