#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "angular.hpp"
#include "curvature.hpp"
#include "errors.hpp"
#include "log_scalar.hpp"
#include "radial.hpp"

namespace warpcert {

struct BoundaryPoint {
    double t = 0.0;   // offset from the ball center t_i + 1
    LogScalar x;      // signed; |x| can be ~1e-160 or smaller
    double xi = 0.0;  // outward normal N = T cos xi + X sin xi
    double arc_param = 0.0;
    // computed from the normal itself; sin(xi) near xi = pi would lose ~1e-14
    double cos_xi = 1.0, sin_xi = 0.0;
};

// Geodesic circle of intrinsic radius `radius` around (t_c, 0) on a sphere of radius 1/Lambda.
// `tilt` is the latitude of the center, theta_c - Lambda for the ball of period i; u = cos(tilt + Lambda dt)/Lambda.
inline std::vector<BoundaryPoint> geodesic_circle(const LogScalar& Lambda, double radius, int samples,
                                                  const LogScalar& tilt = LogScalar(0.0)) {
    if (!(Lambda > LogScalar(0.0)) || !(radius > 0)) throw DomainError("geodesic_circle: Lambda and radius must be positive");
    if (samples < 3) throw DomainError("geodesic_circle: need at least 3 samples");
    if (!(Lambda * LogScalar(radius) < LogScalar(std::numbers::pi / 2)))
        throw DomainError("geodesic_circle: radius * Lambda must stay below pi/2");
    if (tilt.sign < 0 || !(tilt + Lambda * LogScalar(radius) < LogScalar(std::numbers::pi / 2)))
        throw DomainError("geodesic_circle: circle must stay in one hemisphere");

    std::vector<BoundaryPoint> out;
    out.reserve(static_cast<std::size_t>(samples));
    const bool flat = Lambda.logmag < std::log(1e-100);
    const double L = flat ? 0.0 : Lambda.value();
    const double rho = L * radius;
    const double sa = std::cos(tilt.value()), ca = std::sin(tilt.value()); // a = pi/2 - tilt is the colatitude
    const double sr = std::sin(rho), cr = std::cos(rho);
    // x-scale at the center: 1/u = Lambda / cos(tilt)
    const LogScalar inv_u0 = Lambda / LogScalar(std::cos(tilt.value()));

    for (int k = 0; k < samples; ++k) {
        const double phi = 2 * std::numbers::pi * k / samples;
        // the two axis crossings are exact, otherwise sin(pi) leaves a spurious x ~ 1e-16 rho
        const double cp = 2 * k == samples ? -1.0 : std::cos(phi);
        const double sp = 2 * k == samples ? 0.0 : std::sin(phi);
        BoundaryPoint b;
        b.arc_param = phi;
        if (flat) {
            // curvature corrections are O(Lambda radius), far below double resolution
            b.t = radius * cp;
            b.x = LogScalar(radius * sp) * inv_u0;
            b.xi = std::atan2(sp, cp);
            b.cos_xi = cp;
            b.sin_xi = sp;
        } else {
            // p = cos(rho) O + sin(rho)(cos phi e1 + sin phi e2); e1 points to larger colatitude
            const std::array<double, 3> p{cr * sa + sr * cp * ca, sr * sp, cr * ca - sr * cp * sa};
            const std::array<double, 3> n{-sr * sa + cr * cp * ca, cr * sp, -sr * ca - cr * cp * sa};
            const double sc = std::hypot(p[0], p[1]);
            // sin(c - a) = sin c cos a - cos c sin a = cos a (sin c - cos rho sin a) + sin rho cos phi sin^2 a,
            // with the first bracket rationalised; both sides are ~cos a when the tilt dwarfs rho
            const double sc_gap = (2 * cr * sa * sr * cp * ca + sr * sr * (cp * cp * ca * ca + sp * sp)) / (sc + cr * sa);
            const double dc = std::asin(std::clamp(ca * sc_gap + sr * cp * sa * sa, -1.0, 1.0));
            const double x = std::atan2(p[1], p[0]);
            const double cx = std::cos(x), sx = std::sin(x);
            const std::array<double, 3> T{p[2] * cx, p[2] * sx, -sc};
            const std::array<double, 3> X{-sx, cx, 0.0};
            const double nT = n[0] * T[0] + n[1] * T[1] + n[2] * T[2];
            const double nX = n[0] * X[0] + n[1] * X[1];
            b.t = dc / L;
            b.x = LogScalar(x);
            b.xi = std::atan2(nX, nT);
            const double nn = std::hypot(nX, nT);
            b.cos_xi = nT / nn;
            b.sin_xi = nX / nn;
        }
        out.push_back(b);
    }
    return out;
}

struct SecondFundamentalForms {
    LogScalar unit = LogScalar(1.0);  // entries are multiples of this
    std::vector<std::pair<std::string, double>> entries;

    double max_abs() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, std::fabs(e.second));
        return m;
    }
    double at(const std::string& name) const {
        for (const auto& e : entries)
            if (e.first == name) return e.second;
        throw DomainError("no frame direction " + name);
    }
};

// ---------------------------------------------------------------- removed balls

struct BallSample {
    BoundaryPoint point;
    double II_YY = 0.0;          // Lambda cot(4 Lambda/5)
    double II_SS_chain = 0.0;    // h0 + A (h0 - (u_t/u) cos xi)
    double II_SS_direct = 0.0;   // (u_t/u) cos xi + (f_x/(f u)) sin xi
    double excess_over_eps = 0.0; // (|II_SS| - h0)/eps_i
    double perelman_scaled = 0.0; // u^2 (K_int - h_i^2)
    bool round_region = false;
};

struct BallBoundaryReport {
    int period = 0;
    int samples = 0;
    double log_eps = 0.0;
    double h0 = 0.0;   // Lambda cot(4 Lambda/5)
    double h = 0.0;    // h0 + 3 eps_i
    std::vector<BallSample> points;
    // margins
    double lower_margin = std::numeric_limits<double>::infinity(); // max|II| - h0, >= 0
    double upper_margin = std::numeric_limits<double>::infinity(); // 3 - (|II_SS| - h0)/eps_i, chain route
    double direct_margin = std::numeric_limits<double>::infinity(); // (h - |II_direct|)/h0 + rounding slack
    double route_gap = 0.0;                                         // max |chain - direct| / h0
    double perelman_margin = std::numeric_limits<double>::infinity(); // min u^2 (K_int - h^2)
    double h_bracket_margin = 0.0;                                  // min(h - 1/2, 2 - h)
    double separation_margin = 0.0;                                 // pi u(t_i) - 8/5, saturated
    int worst_sample = -1;

    // log-domain numbers carry a relative error of about |ln v| 2^-52, so the slack grows with ln x and ln u
    static double direct_slack(const LogScalar& x, const LogScalar& u) {
        const double lx = x.sign == 0 ? 0.0 : std::fabs(x.logmag);
        return 8 * std::numeric_limits<double>::epsilon() * (4 + lx + std::fabs(u.logmag));
    }
    bool pass() const {
        return lower_margin >= 0 && upper_margin > 0 && direct_margin > 0 && perelman_margin > 0 &&
               h_bracket_margin > 0 && separation_margin > 0;
    }
};

inline double ball_h0(const Period& P) { return detail::x_cot_x(LogScalar(0.8) * P.Lambda).value() / 0.8; }

// The boundary sits where f(t, .) is a fixed profile: eps_i before the transition window,
// eps_{i+1} after it, and the round piece (A = 0) across it, by the support condition.
inline BallBoundaryReport ball_boundary_forms(const PeriodTable& table, const EpsSchedule& sch, int i, double R0,
                                              int samples) {
    if (i < 1 || i > table.i_max()) throw DomainError("ball_boundary_forms: period out of range");
    if (static_cast<int>(sch.log_eps.size()) < i + 1) throw DomainError("ball_boundary_forms: schedule too short");
    const Period& P = table.at(i);
    BallBoundaryReport rep;
    rep.period = i;
    rep.samples = samples;
    rep.log_eps = sch.at(i);
    rep.h0 = ball_h0(P);
    const LogScalar eps_i = LogScalar::from_log(rep.log_eps);
    rep.h = rep.h0 + 3 * eps_i.value();
    rep.h_bracket_margin = std::min(rep.h - 0.5, 2.0 - rep.h);
    rep.separation_margin = saturate(LogScalar(std::numbers::pi) * P.u - LogScalar(1.6));

    const AngularSolution before = solve_angular_params(sch.at(i), R0);
    const AngularSolution after = solve_angular_params(sch.at(i + 1), R0);
    const LogScalar h0 = LogScalar(rep.h0);

    const auto circle = geodesic_circle(P.Lambda, 0.8, samples, P.theta_c - P.Lambda);
    int k = 0;
    for (const BoundaryPoint& bp : circle) {
        BallSample s;
        s.point = bp;
        s.II_YY = rep.h0;
        const LogJet u = u_eval(table, {i, Phase::Arc, LogScalar(1.0 + bp.t)});
        const LogScalar g = u.d1 / u.value; // u_t/u
        const double c = bp.cos_xi, sn = bp.sin_xi;
        const LogScalar ax = abs(bp.x);

        const AngularSolution* sol = bp.t < -0.5 ? &before : bp.t > 0.5 ? &after : nullptr;
        AngularRatios r;
        LogScalar eps = eps_i;
        if (ax.sign == 0) {
            if (!sol) throw InfeasibleError("ball boundary meets the axis inside the transition window");
            r = ratios_axis(*sol, 0.0);
            eps = sol->eps_ls();
        } else if (sol) {
            r = angular_ratios(*sol, ax);
            eps = sol->eps_ls();
        } else {
            if (ax < before.quarter()) throw InfeasibleError("ball boundary crosses the deformation support");
            r = ratios_round(before, ax);
        }
        s.round_region = r.piece == AngularPiece::Round;

        // chain route: (cot x / u) sin xi = h0 - (u_t/u) cos xi on the round model
        const LogScalar A = LogScalar(r.A_over_eps) * eps;
        const LogScalar model_gap = h0 - g * LogScalar(c);
        const LogScalar dev = A * model_gap; // II_SS - h0
        s.II_SS_chain = (h0 + dev).value();
        s.excess_over_eps = ((abs(h0 + dev) - h0) / eps_i).value();

        // direct route from the profile jets; the sign of sin xi follows the sign of x.
        // On the axis Sigma degenerates and (f_x/f) sin xi is 0/0, so the chain value stands.
        if (ax.sign != 0) {
            const LogScalar fx_over_f = LogScalar(r.fx) / r.f;
            s.II_SS_direct = (g * LogScalar(c) + fx_over_f / u.value * LogScalar(std::fabs(sn))).value();
        } else {
            s.II_SS_direct = s.II_SS_chain;
        }

        // u^2 (K_XS cos^2 + K_TS sin^2 + h0 II_SS - h^2), the last terms grouped to avoid cancelling h0^2
        const LogScalar u2 = u.value * u.value;
        const LogScalar kxs = r.neg_fxx_over_f - u.d1 * u.d1;
        const LogScalar kts = -(u.d2 * u.value);
        const LogScalar tail = h0 * dev - LogScalar(6.0) * eps_i * h0 - LogScalar(9.0) * eps_i * eps_i;
        const LogScalar perel = kxs * LogScalar(c * c) + kts * LogScalar(sn * sn) + u2 * tail;
        s.perelman_scaled = perel.value();

        const double lower = std::max(rep.h0, std::fabs(s.II_SS_chain)) - rep.h0;
        const double upper = 3.0 - std::max(0.0, s.excess_over_eps);
        const double direct_m = (rep.h0 + 3 * eps_i.value() - std::fabs(s.II_SS_direct)) / rep.h0 +
                                BallBoundaryReport::direct_slack(ax, u.value);
        rep.lower_margin = std::min(rep.lower_margin, lower);
        rep.upper_margin = std::min(rep.upper_margin, upper);
        rep.direct_margin = std::min(rep.direct_margin, direct_m);
        rep.route_gap = std::max(rep.route_gap, std::fabs(s.II_SS_chain - s.II_SS_direct) / rep.h0);
        if (s.perelman_scaled < rep.perelman_margin) {
            rep.perelman_margin = s.perelman_scaled;
            rep.worst_sample = k;
        }
        rep.points.push_back(s);
        ++k;
    }
    return rep;
}

// ---------------------------------------------------------------- base slice t = t_1

struct BaseSliceReport {
    SecondFundamentalForms forms; // X and Sigma, unit 1
    double inv_t1_residual = 0.0;  // max relative |II - 1/t_1|
    double margin = std::numeric_limits<double>::infinity();       // min u^2 K_int - u^2/t_1^2
    double eta_margin = std::numeric_limits<double>::infinity();   // min (-f_xx/f) - (1 - eta)
    int grid = 0;
    bool pass() const { return inv_t1_residual <= 1e-12 && margin > 0; }
};

inline BaseSliceReport base_slice_forms(const PeriodTable& table, const AngularSolution& sol, int grid = 2001,
                                        double eta = 0.1) {
    if (grid < 2) throw DomainError("base_slice_forms: grid too small");
    const LogJet u = u_eval(table, {1, Phase::Arc, LogScalar(0.0)});
    const LogScalar t1 = table.at(1).t;
    const LogScalar II = u.d1 / u.value;
    BaseSliceReport rep;
    rep.grid = grid;
    rep.forms.unit = LogScalar(1.0) / t1;
    const double ratio = (II * t1).value();
    rep.forms.entries = {{"X", ratio}, {"Sigma", ratio}};
    rep.inv_t1_residual = std::fabs(ratio - 1.0);
    const LogScalar scale = u.value * u.value / (t1 * t1);
    // x log-spaced from far below b to pi/2
    const double lo = std::min(sol.ln_b.value() - 5, std::log(1e-300));
    const double hi = std::log(std::numbers::pi / 2);
    for (int k = 0; k < grid; ++k) {
        const LogScalar x = LogScalar::from_log(lo + (hi - lo) * k / (grid - 1));
        const AngularRatios r = angular_ratios(sol, k == grid - 1 ? LogScalar(std::numbers::pi / 2) : x);
        rep.margin = std::min(rep.margin, (r.neg_fxx_over_f - scale).value());
        rep.eta_margin = std::min(rep.eta_margin, (r.neg_fxx_over_f - LogScalar(1 - eta)).value());
    }
    return rep;
}

// ---------------------------------------------------------------- cap / product / gluing

struct CapBoundary {
    SecondFundamentalForms forms; // unit lambda
    LogScalar radius_sigma;       // ubar(t0) = rho / (lam h cosh... ) = A cosh(pi/12)
    LogScalar radius_theta;       // vbar(t0) = sin(pi/6)/k = c0
    double identity_residual = 0.0; // |(k/2) tanh(pi/12) / lam - 4|
};

inline CapBoundary cap_boundary_forms(const CapParams& cap, double h) {
    CapBoundary out;
    out.forms.unit = cap.lam;
    const LogScalar sig = cap.k * LogScalar(0.5 * CapParams::tanh12());
    const LogScalar th = cap.k * LogScalar(std::sqrt(3.0));
    out.forms.entries = {{"Sigma", (sig / cap.lam).value()}, {"Theta", (th / cap.lam).value()}};
    out.identity_residual = std::fabs((sig / cap.lam).value() - 4.0);
    out.radius_sigma = cap.A(h) * LogScalar(std::cosh(std::numbers::pi / 12));
    out.radius_theta = LogScalar(0.5) / cap.k;
    return out;
}

struct ProductBoundary {
    SecondFundamentalForms forms;
    LogScalar radius_sigma; // rho / (lam h)
    LogScalar radius_theta; // c0
};

inline ProductBoundary product_boundary_forms(double h, const LogScalar& lam, double rho = 0.0,
                                              const LogScalar& c0 = LogScalar(0.0)) {
    if (!(h >= 0.5 && h <= 2.0)) throw DomainError("product_boundary_forms: h outside [1/2, 2]");
    if (!(lam > LogScalar(0.0))) throw DomainError("product_boundary_forms: lambda must be positive");
    ProductBoundary p;
    p.forms.unit = lam;
    p.forms.entries = {{"Sigma", -h}, {"Theta", 0.0}};
    if (rho > 0) p.radius_sigma = LogScalar(rho) / (lam * LogScalar(h));
    p.radius_theta = c0;
    return p;
}

struct GluingReport {
    std::vector<std::pair<std::string, double>> margins; // in units of the shared unit
    double margin = std::numeric_limits<double>::infinity();
    double isometry_residual = 0.0;
    double isometry_tol = 1e-9;
    bool pass() const { return margin > 0 && isometry_residual <= isometry_tol; }
};

inline GluingReport gluing_check(const SecondFundamentalForms& concave, const SecondFundamentalForms& convex,
                                 double isometry_residual = 0.0, double isometry_tol = 1e-9) {
    if (concave.entries.size() != convex.entries.size()) throw DomainError("gluing_check: frames do not match");
    if (relative_gap(concave.unit, convex.unit) > 1e-12) throw DomainError("gluing_check: units differ");
    GluingReport rep;
    rep.isometry_residual = isometry_residual;
    rep.isometry_tol = isometry_tol;
    for (std::size_t k = 0; k < convex.entries.size(); ++k) {
        if (convex.entries[k].first != concave.entries[k].first) throw DomainError("gluing_check: frames do not match");
        const double m = convex.entries[k].second + concave.entries[k].second;
        rep.margins.emplace_back(convex.entries[k].first, m);
        rep.margin = std::min(rep.margin, m);
    }
    return rep;
}

// relative mismatch of the two boundary radii pairs
inline double boundary_isometry_residual(const CapBoundary& cap, const ProductBoundary& prod) {
    return std::max(relative_gap(cap.radius_sigma, prod.radius_sigma), relative_gap(cap.radius_theta, prod.radius_theta));
}

} // namespace warpcert
