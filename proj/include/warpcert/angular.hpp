#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "errors.hpp"
#include "jet.hpp"
#include "log_scalar.hpp"
#include "radial.hpp"

namespace warpcert {

// C2 step: 1 for s <= 0, 0 for s >= 1
struct BumpFunction {
    static double value(double s) {
        if (s <= 0) return 1.0;
        if (s >= 1) return 0.0;
        return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    }
    static double d1(double s) {
        if (s <= 0 || s >= 1) return 0.0;
        return -30.0 * s * s * (1 - s) * (1 - s);
    }
    static double d2(double s) {
        if (s <= 0 || s >= 1) return 0.0;
        return -60.0 * s * (1 - s) * (1 - 2 * s);
    }
    static Jet eval(const Jet& s) { return chain(s, value(s.value), d1(s.value), d2(s.value)); }
};

namespace series {

// (tan(y)/y - 1)/z with z = y^2, limit 1/3
inline double tan_ratio_m1_over_z(double z) {
    if (z < 1e-2) {
        static constexpr double c[] = {1.0 / 3, 2.0 / 15, 17.0 / 315, 62.0 / 2835, 1382.0 / 155925,
                                       21844.0 / 6081075, 929569.0 / 638512875};
        double acc = 0.0;
        for (int k = 6; k >= 0; --k) acc = acc * z + c[k];
        return acc;
    }
    const double y = std::sqrt(z);
    return (std::tan(y) / y - 1.0) / z;
}
inline double tan_ratio_m1(double z) { return z * tan_ratio_m1_over_z(z); }

// (1 - y cot y)/z, limit 1/3
inline double ycot_m1_over_z(double z) {
    if (z < 1e-2) return 1.0 / 3 + z * (1.0 / 45 + z * (2.0 / 945 + z * (1.0 / 4725 + z * 2.0 / 93555)));
    const double y = std::sqrt(z);
    return (1.0 - y / std::tan(y)) / z;
}
inline double ycot_m1(double z) { return -z * ycot_m1_over_z(z); }

// ln(sin(y)/y) with z = y^2
inline double log_sinc(double z) {
    if (z < 1e-2) return std::log1p(-z / 6 * (1 - z / 20 * (1 - z / 42 * (1 - z / 72))));
    const double y = std::sqrt(z);
    return std::log(std::sin(y) / y);
}

} // namespace series

// Saturating conversion for quantities that are positive and possibly astronomically large.
inline double saturate(const LogScalar& a, double cap = 1e300) {
    if (a.sign == 0) return 0.0;
    if (a.logmag > std::log(cap)) return a.sign * cap;
    return a.value();
}

// The matching constants. Everything that can leave double range is kept as a logarithm:
// l = exp(ln_l), b = exp(ln_b) with ln_l = K/eps a log-domain number.
struct AngularSolution {
    double log_eps = 0.0;
    double eps = 0.0;     // exp(log_eps), may underflow to 0
    double R0 = 0.0;
    double v = 1.0;       // y^2 / (3 eps), y = l b
    double log_y = 0.0;   // ln(l b)
    double kappa = 1.0;   // delta / eps^2
    double K = 0.0;       // eps ln l
    double W = 0.0;       // eps ln(eps/b), the log-width of the power piece
    LogScalar ln_l;       // ln l
    LogScalar ln_b;       // ln b (negative)

    LogScalar eps_ls() const { return LogScalar::from_log(log_eps); }
    double y() const { return std::exp(log_y); }
    double z() const { return 3 * eps * v; } // y^2
    LogScalar delta() const { return LogScalar(kappa) * LogScalar::from_log(2 * log_eps); }
    LogScalar quarter() const { return LogScalar::from_log(0.25 * log_eps); } // eps^{1/4}
    double cos_y() const { return std::cos(y()); }
};

// tan(eps+delta) = eps/(1-eps) solved for kappa = delta/eps^2 without cancellation
inline double solve_kappa(double eps) {
    const double tan_m = eps * series::tan_ratio_m1_over_z(eps * eps); // (tan eps - eps)/eps^2
    const double tan_e = eps + eps * eps * tan_m;
    const double num = 1.0 / (1.0 - eps) - tan_m;
    const double den = 1.0 + eps * tan_e / (1.0 - eps);
    const double w = eps * eps * num / den; // tan(delta)
    const double atan_ratio = w < 1e-8 ? 1.0 - w * w / 3 : std::atan(w) / w;
    return num / den * atan_ratio;
}

inline AngularSolution solve_angular_params(double log_eps, double R0) {
    if (!(R0 > 0 && R0 < 0.05)) throw DomainError("R0 must lie in (0, 1/20)");
    if (!(log_eps < std::log(0.1))) throw DomainError("eps too large for the angular profile");
    AngularSolution s;
    s.log_eps = log_eps;
    s.eps = std::exp(log_eps);
    s.R0 = R0;
    const double eps = s.eps;
    // G(v) = (tan y / y - 1)/eps - 1/(1-eps), y^2 = 3 eps v
    auto G = [eps](double v) {
        const double z = 3 * eps * v;
        const double t = 3 * v * series::tan_ratio_m1_over_z(z);
        return t - 1.0 / (1.0 - eps);
    };
    double hi = 2.0;
    if (eps > 0) hi = std::min(hi, 0.999 * (std::numbers::pi / 2) * (std::numbers::pi / 2) / (3 * eps));
    const double lo = 0.25;
    if (!(G(lo) < 0 && G(hi) > 0)) throw InfeasibleError("angular matching root not bracketed");
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(G, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    s.v = 0.5 * (r.first + r.second);
    s.log_y = 0.5 * (std::log(3.0) + log_eps + std::log(s.v));
    s.kappa = solve_kappa(eps);
    const double ek = eps * s.kappa;
    const double ed = eps * (1 + ek); // eps + delta
    s.W = series::log_sinc(s.z()) - std::log(R0) - std::log1p(ek) - series::log_sinc(ed * ed);
    s.K = s.W + eps * (s.log_y - log_eps);
    if (!(s.K > 0)) throw InfeasibleError("level matching gives l <= 1");
    s.ln_l = LogScalar::from_log(std::log(s.K) - log_eps);
    s.ln_b = LogScalar(s.log_y) - s.ln_l;
    return s;
}

inline AngularSolution solve_angular_params_eps(double eps, double R0) {
    if (!(eps > 0)) throw DomainError("eps must be positive");
    return solve_angular_params(std::log(eps), R0);
}

// residuals of the three matching equations (relative)
struct MatchingResiduals {
    double at_b;     // cos(y) vs (1-eps) sin(y)/y
    double at_eps;   // tan(eps+delta) vs eps/(1-eps)
    double level;    // log form of (sin y/l)(eps/b)^{1-eps} = R0 sin(eps+delta)
    double tan_root; // tan(y) vs y/(1-eps)
};

inline MatchingResiduals matching_residuals(const AngularSolution& s) {
    MatchingResiduals r{};
    const double y = s.y(), eps = s.eps;
    r.at_b = std::fabs(std::cos(y) - (1 - eps) * std::exp(series::log_sinc(y * y))) / std::cos(y);
    r.tan_root = std::fabs(std::tan(y) * (1 - eps) - y) / y;
    const double th = eps * (1 + eps * s.kappa);
    // tan(th)/eps = (1+eps kappa)(1 + tan_ratio_m1(th^2))
    const double lhs = (1 + eps * s.kappa) * (1 + series::tan_ratio_m1(th * th));
    r.at_eps = std::fabs(lhs * (1 - eps) - 1.0);
    // ln sin y - eps ln l + (1-eps)(ln eps - ln y)  vs  ln R0 + ln sin(eps+delta)
    const double eps_ln_l = (s.eps_ls() * s.ln_l).value();
    const double left = s.log_y + series::log_sinc(y * y) - eps_ln_l + (1 - eps) * (s.log_eps - s.log_y);
    const double right = std::log(s.R0) + s.log_eps + std::log1p(eps * s.kappa) + series::log_sinc(th * th);
    r.level = std::fabs(left - right) / std::max(1.0, std::fabs(right));
    return r;
}

// ------------------------------------------------------------------ evaluation

enum class AngularPiece { Axis = 1, Power = 2, Bump = 3, Round = 4 };

// Curvature-relevant combinations at one point of (0, pi/2].
struct AngularRatios {
    AngularPiece piece = AngularPiece::Round;
    double param = 0.0;   // sigma, w, bump s, or x
    LogScalar x;
    LogScalar f;
    double fx = 0.0;
    LogScalar fxx;
    LogScalar neg_fxx_over_f;   // -f_xx/f
    LogScalar gauss_term;       // (1 - f_x^2)/f^2
    double A_over_eps = 0.0;    // tan x (f_x/f - cot x) / eps, signed
};

// piece 1: x = sigma b, sigma in (0, 1]
inline AngularRatios ratios_axis(const AngularSolution& s, double sigma) {
    AngularRatios r;
    r.piece = AngularPiece::Axis;
    r.param = sigma;
    const LogScalar b = LogScalar::from_log(s.ln_b.value());
    r.x = LogScalar(sigma) * b;
    const double zy = sigma * sigma * s.z(); // (sigma y)^2
    const double sy = sigma * s.y();
    // f = sin(sigma y)/l, f_x = cos(sigma y), f_xx = -l sin(sigma y)
    const LogScalar inv_l = LogScalar::from_log(-s.ln_l.value());
    r.f = LogScalar(std::sin(sy)) * inv_l;
    r.fx = std::cos(sy);
    const LogScalar l2 = LogScalar::from_log(2 * s.ln_l.value());
    r.neg_fxx_over_f = l2;
    r.fxx = -(l2 * r.f);
    r.gauss_term = l2;
    // A = (1 + T)(1 + C) - 1 with T = tan x/x - 1 and C = sy cot(sy) - 1 = -zy P(zy)
    const double C_over_eps = -3 * s.v * sigma * sigma * series::ycot_m1_over_z(zy);
    double T_over_eps = 0.0;
    if (r.x.logmag > -300) {
        const double x = r.x.value();
        T_over_eps = std::exp(std::log(series::tan_ratio_m1(x * x)) - s.log_eps);
    } else {
        T_over_eps = std::exp(2 * r.x.logmag - s.log_eps - std::log(3.0));
    }
    r.A_over_eps = C_over_eps + T_over_eps * (1 + series::ycot_m1(zy));
    return r;
}

// piece 2: x = eps exp(-w/eps), w in [0, W]; f_x = cos(y) exp(w - W)
inline AngularRatios ratios_power(const AngularSolution& s, double w) {
    AngularRatios r;
    r.piece = AngularPiece::Power;
    r.param = w;
    const double eps = s.eps;
    const LogScalar w_over_eps = LogScalar(w) / s.eps_ls();
    const double wl = w_over_eps.value(); // may be +inf
    const double ln_x = s.log_eps - wl;
    r.x = LogScalar::from_log(ln_x);
    const double cy = s.cos_y();
    r.fx = cy * std::exp(w - s.W);
    const double ln_f = ln_x + std::log(r.fx) - std::log1p(-eps);
    r.f = LogScalar::from_log(ln_f);
    // -f_xx/f = eps(1-eps)/x^2
    r.neg_fxx_over_f = LogScalar::from_log(s.log_eps + std::log1p(-eps) - 2 * ln_x);
    r.fxx = -(r.neg_fxx_over_f * r.f);
    const double ys = s.y();
    const double one_m_fx = 2 * std::sin(ys / 2) * std::sin(ys / 2) - cy * std::expm1(w - s.W);
    r.gauss_term = LogScalar::from_log(std::log(one_m_fx) + std::log1p(r.fx) - 2 * ln_f);
    // A/eps = -1 + (1-eps)(tan x/x - 1)/eps, (tan x/x - 1) ~ x^2/3
    double corr = 0.0;
    if (ln_x > -300) {
        const double x = std::exp(ln_x);
        corr = (1 - eps) * series::tan_ratio_m1(x * x) / eps;
    } else {
        corr = std::exp(2 * ln_x - s.log_eps - std::log(3.0));
    }
    r.A_over_eps = -1.0 + corr;
    return r;
}

// piece 3: x = eps + s (eps^{1/4} - eps), f = R0 sin(x + delta phi(s))
inline AngularRatios ratios_bump(const AngularSolution& sol, double sb) {
    AngularRatios r;
    r.piece = AngularPiece::Bump;
    r.param = sb;
    const LogScalar E = sol.eps_ls();
    const LogScalar L = sol.quarter() - E;
    const LogScalar delta = sol.delta();
    r.x = E + LogScalar(sb) * L;
    const double ph = BumpFunction::value(sb);
    const LogScalar dphi1 = LogScalar(BumpFunction::d1(sb)) / L;
    const LogScalar dphi2 = LogScalar(BumpFunction::d2(sb)) / (L * L);
    const LogScalar th = r.x + delta * LogScalar(ph);
    const LogScalar sin_th = sin(th), cos_th = cos(th);
    const double g1 = (LogScalar(1.0) + delta * dphi1).value();
    const LogScalar g2 = delta * dphi2;
    const LogScalar R0(sol.R0);
    r.f = R0 * sin_th;
    r.fx = (R0 * cos_th).value() * g1;
    // -f_xx/f = g1^2 - cot(th) g2
    r.neg_fxx_over_f = LogScalar(g1 * g1) - cos_th / sin_th * g2;
    r.fxx = -(r.neg_fxx_over_f * r.f);
    r.gauss_term = LogScalar(1.0 - r.fx * r.fx) / (r.f * r.f);
    // A = tan x cot th delta phi' - sin(delta phi)/(sin th cos x)
    const LogScalar tan_x = sin(r.x) / cos(r.x);
    const LogScalar a1 = tan_x * cos_th / sin_th * delta * dphi1;
    const LogScalar a2 = sin(delta * LogScalar(ph)) / (sin_th * cos(r.x));
    r.A_over_eps = ((a1 - a2) / E).value();
    return r;
}

// piece 4: f = R0 sin x exactly
inline AngularRatios ratios_round(const AngularSolution& sol, const LogScalar& x) {
    AngularRatios r;
    r.piece = AngularPiece::Round;
    r.param = x.value();
    r.x = x;
    const LogScalar R0(sol.R0);
    const LogScalar sx = sin(x);
    const double cx = cos(x).value();
    r.f = R0 * sx;
    r.fx = sol.R0 * cx;
    r.fxx = -r.f;
    r.neg_fxx_over_f = LogScalar(1.0);
    r.gauss_term = LogScalar(1.0 - r.fx * r.fx) / (r.f * r.f);
    r.A_over_eps = 0.0;
    return r;
}

// locate a log-domain x in (0, pi/2]
inline AngularRatios angular_ratios(const AngularSolution& s, const LogScalar& x) {
    if (x.sign <= 0 || x > LogScalar(std::numbers::pi / 2 * (1 + 1e-15))) throw DomainError("angular_ratios expects x in (0, pi/2]");
    if (x >= s.quarter()) return ratios_round(s, x);
    const LogScalar E = s.eps_ls();
    if (x >= E) return ratios_bump(s, ((x - E) / (s.quarter() - E)).value());
    if (x.logmag >= s.ln_b.value()) {
        // w = eps (ln eps - ln x)
        const double w = (s.eps_ls() * LogScalar(s.log_eps - x.logmag)).value();
        return ratios_power(s, std::min(w, s.W));
    }
    return ratios_axis(s, std::exp(x.logmag - s.ln_b.value()));
}

// Jet in x for representable x in [0, pi]; symmetric about pi/2.
inline Jet f_eval(const AngularSolution& s, double x) {
    if (!(x >= 0 && x <= std::numbers::pi)) throw DomainError("f_eval expects x in [0, pi]");
    if (x > std::numbers::pi / 2) {
        const Jet m = f_eval(s, std::numbers::pi - x);
        return {m.value, -m.d1, m.d2};
    }
    if (x == 0) return {0.0, 1.0, 0.0};
    const double q = std::exp(0.25 * s.log_eps);
    if (x >= q) return s.R0 * sin(Jet::variable(x));
    if (x >= s.eps) {
        const double L = q - s.eps;
        const double delta = s.kappa * s.eps * s.eps;
        const Jet X = Jet::variable(x);
        return s.R0 * sin(X + delta * BumpFunction::eval((X - s.eps) / L));
    }
    const double lb = s.ln_b.value();
    if (std::log(x) >= lb) {
        // f(eps) (x/eps)^{1-eps}
        const double f_eps = s.R0 * std::sin(s.eps * (1 + s.eps * s.kappa));
        const double v = f_eps * std::exp((1 - s.eps) * (std::log(x) - s.log_eps));
        return {v, (1 - s.eps) * v / x, -s.eps * (1 - s.eps) * v / (x * x)};
    }
    const double l = std::exp(s.ln_l.value());
    return {std::sin(l * x) / l, std::cos(l * x), -l * std::sin(l * x)};
}

// ------------------------------------------------------------------ certification

struct PropMargin {
    double min_value = std::numeric_limits<double>::infinity(); // saturated
    AngularPiece piece = AngularPiece::Round;
    double param = 0.0;
    double x = 0.0;
    int samples = 0;
    void update(double m, const AngularRatios& r) {
        ++samples;
        if (m < min_value) { min_value = m; piece = r.piece; param = r.param; x = r.x.value(); }
    }
};

struct CurvatureBoundsReport {
    double eta = 0.1;
    PropMargin curvature; // -f_xx/f - (1-eta)
    PropMargin gauss;     // (1-f_x^2)/f^2 - (1-eta)
    bool pass() const { return curvature.min_value > 0 && gauss.min_value > 0; }
};

struct DeviationReport {
    double max_A_over_eps = 0.0; // success iff < 2
    PropMargin margin;           // 2 - A/eps
    bool pass() const { return margin.min_value > 0; }
};

// Composite grid: 1/8 axis piece, 1/4 power piece, 1/4 bump piece, rest round, endpoints included.
template <class F>
void for_each_angular_sample(const AngularSolution& s, int grid, F&& fn) {
    if (grid < 16) throw DomainError("angular grid too small");
    const int n1 = grid / 8, n2 = grid / 4, n3 = grid / 4, n4 = grid - n1 - n2 - n3;
    for (int k = 1; k <= n1; ++k) fn(ratios_axis(s, static_cast<double>(k) / n1));
    for (int k = 0; k < n2; ++k) fn(ratios_power(s, s.W * k / (n2 - 1)));
    for (int k = 0; k < n3; ++k) fn(ratios_bump(s, static_cast<double>(k) / (n3 - 1)));
    const LogScalar q = s.quarter();
    const LogScalar span = LogScalar(std::numbers::pi / 2) - q;
    for (int k = 0; k < n4; ++k) fn(ratios_round(s, q + span * LogScalar(static_cast<double>(k) / (n4 - 1))));
}

inline CurvatureBoundsReport verify_curvature_bounds(const AngularSolution& s, double eta, int grid) {
    if (!(eta > 0 && eta < 0.75)) throw DomainError("eta must lie in (0, 3/4)");
    CurvatureBoundsReport rep;
    rep.eta = eta;
    for_each_angular_sample(s, grid, [&](const AngularRatios& r) {
        rep.curvature.update(saturate(r.neg_fxx_over_f - LogScalar(1 - eta)), r);
        rep.gauss.update(saturate(r.gauss_term - LogScalar(1 - eta)), r);
    });
    return rep;
}

inline DeviationReport verify_deviation(const AngularSolution& s, int grid) {
    DeviationReport rep;
    for_each_angular_sample(s, grid, [&](const AngularRatios& r) {
        const double a = std::fabs(r.A_over_eps);
        rep.max_A_over_eps = std::max(rep.max_A_over_eps, a);
        rep.margin.update(2.0 - a, r);
    });
    return rep;
}

// ------------------------------------------------------------------ schedule

struct EpsSchedule {
    std::vector<double> log_eps; // periods 1..i_max+1
    std::vector<int> halvings;   // support-condition tightening per period
    std::vector<double> support_margin; // 4/5 - (eps^{1/4} u(t_i+3/2) + 1/2)

    double at(int i) const { return log_eps.at(static_cast<std::size_t>(i - 1)); }

    // ln eps(t) as a jet in t
    Jet log_eps_jet(const RadialPosition& pos) const {
        const double hi = at(pos.period);
        const double lo = at(pos.period + 1 <= static_cast<int>(log_eps.size()) ? pos.period + 1 : pos.period);
        if (pos.phase == Phase::PowerLaw) return Jet::constant(lo);
        const double tau = pos.tau.value();
        if (tau <= 0.5) return Jet::constant(hi);
        if (tau >= 1.5) return Jet::constant(lo);
        const Jet ph = BumpFunction::eval(Jet::variable(tau - 0.5));
        return lo + (hi - lo) * ph;
    }
};

inline EpsSchedule build_eps_schedule(const PeriodTable& table, double eps0) {
    if (!(eps0 > 0 && eps0 < 0.1)) throw DomainError("eps0 must lie in (0, 0.1)");
    EpsSchedule sch;
    double prev = std::numeric_limits<double>::infinity();
    const double ln2 = std::log(2.0);
    for (int i = 1; i <= table.i_max() + 1; ++i) {
        const Period& P = table.at(i);
        double le = std::min({std::log(eps0), -std::log(100.0) - 2 * log(P.u), prev - ln2});
        const LogScalar u32 = u_eval(table, {i, Phase::Arc, LogScalar(1.5)}).value;
        int halvings = 0;
        auto excess = [&] { return (LogScalar::from_log(0.25 * le) * u32).value() + 0.5 - 0.8; };
        // jump close to the threshold eps^{1/4} u = 3/10 first; u can be e^{10^4}
        const double target = 4 * (std::log(0.3) - log(u32));
        if (le >= target) {
            const int jump = std::max(0, static_cast<int>(std::floor((le - target) / ln2)) - 1);
            le -= jump * ln2;
            halvings = jump;
        }
        while (excess() >= 0) {
            le -= ln2;
            if (++halvings > 100000000) throw InfeasibleError("eps schedule: support condition cannot be met");
        }
        sch.log_eps.push_back(le);
        sch.halvings.push_back(halvings);
        sch.support_margin.push_back(-excess());
        prev = le;
    }
    return sch;
}

inline PeriodTable with_schedule(PeriodTable table, const EpsSchedule& sch) {
    for (std::size_t i = 0; i < table.periods.size() && i < sch.log_eps.size(); ++i) {
        table.periods[i].log_eps = sch.log_eps[i];
        table.periods[i].h = compute_h(table.periods[i]);
    }
    return table;
}

// f(t, x) as a jet in t at fixed x: exactly constant where eps(t) is
inline Jet f_time_jet(const EpsSchedule& sch, const RadialPosition& pos, double x, double R0) {
    const Jet le = sch.log_eps_jet(pos);
    const double f0 = f_eval(solve_angular_params(le.value, R0), x).value;
    if (le.d1 == 0.0 && le.d2 == 0.0) return {f0, 0.0, 0.0};
    // df/d(ln eps) by central differences, then the chain rule
    const double h = 1e-3;
    const double fp = f_eval(solve_angular_params(le.value + h, R0), x).value;
    const double fm = f_eval(solve_angular_params(le.value - h, R0), x).value;
    const double g1 = (fp - fm) / (2 * h), g2 = (fp - 2 * f0 + fm) / (h * h);
    return {f0, g1 * le.d1, g2 * le.d1 * le.d1 + g1 * le.d2};
}

} // namespace warpcert
