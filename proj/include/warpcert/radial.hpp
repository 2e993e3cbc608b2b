#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "jet.hpp"
#include "log_scalar.hpp"

namespace warpcert {

struct ConstructionParams {
    double gamma = 0.25;
    double c1 = 0.9;
    double c2 = 0.85;
    LogScalar t1 = LogScalar(100.0);
    int i_max = 3;

    double p() const { return 0.5 * (1 + gamma); } // value exponent
    double q() const { return 0.5 * (1 - gamma); } // derivative decay

    void validate() const {
        if (!(gamma > 0 && gamma < 0.5)) throw DomainError("gamma must lie in (0, 1/2)");
        if (!(c2 > 0 && c2 < c1 && c1 < 1)) throw DomainError("need 0 < c2 < c1 < 1");
        if (!(t1 > LogScalar(1.0))) throw DomainError("t1 must exceed 1");
        if (i_max < 1) throw DomainError("i_max must be positive");
    }
};

enum class Phase { Arc, PowerLaw };

inline const char* phase_name(Phase ph) { return ph == Phase::Arc ? "arc" : "power-law"; }

struct RadialPosition {
    int period = 1; // 1-based
    Phase phase = Phase::Arc;
    LogScalar tau;  // offset from the left end of the phase
};

// One period. The arc on [t_i, t_i+2] is u = cos(theta_c - Lambda tau)/Lambda with
// theta_c = asin(u'_i), the same curve as sin(Lambda(tau+psi))/Lambda.
struct Period {
    LogScalar t, u, uprime;
    LogScalar Lambda, theta_c, psi;
    bool has_power_law = false;
    LogScalar t_knee, u_knee, R; // R = u_t(t_i+2) (t_i+2)^q, constant along the power law
    double log_eps = std::numeric_limits<double>::quiet_NaN();
    double h = std::numeric_limits<double>::quiet_NaN();

    double eps() const { return std::exp(log_eps); }
    // pi/2 - Lambda(psi+2)
    LogScalar arc_margin() const { return theta_c - LogScalar(2.0) * Lambda; }
};

// periods[0..i_max-1] are the verified periods; periods[i_max] carries only the arc of
// period i_max+1, needed by the support condition of the last verified period.
struct PeriodTable {
    ConstructionParams params;
    std::vector<Period> periods;

    int i_max() const { return params.i_max; }
    const Period& at(int i) const { return periods.at(static_cast<std::size_t>(i - 1)); }
    LogScalar t_end() const { return at(i_max() + 1).t; }
};

namespace detail {

// ln(e^x - 1) for x > 0
inline double log_expm1(double x) { return x > 30 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x)); }

// ln(1 + r) for r >= 0
inline double log1p_ls(const LogScalar& r) {
    if (r.sign == 0) return 0.0;
    if (r.logmag < 30) return std::log1p(r.value());
    return r.logmag + std::log1p(std::exp(-r.logmag));
}

// (base + tau)^p - base^p, accurate for tau << base as well as tau >> base
inline LogScalar power_increment(const LogScalar& base, const LogScalar& tau, double p) {
    if (tau.sign == 0) return {};
    const double x = p * log1p_ls(tau / base);
    return LogScalar::from_log(p * log(base) + log_expm1(x));
}

inline LogScalar one_minus_square(const LogScalar& a) { return LogScalar(1.0) - a * a; }

inline LogScalar x_cot_x(const LogScalar& x) {
    if (x.sign == 0 || x.logmag < -20) return LogScalar(1.0);
    const double v = x.value();
    return LogScalar(v / std::tan(v));
}

} // namespace detail

// matching constants of a sine arc starting at (u, u'): sin(Lambda psi) = sqrt(1-u'^2), Lambda u = sqrt(1-u'^2)
inline void arc_constants(Period& P) {
    if (!(P.uprime < LogScalar(1.0)) || P.uprime.sign < 0 || P.u.sign <= 0)
        throw InfeasibleError("arc start needs u > 0 and 0 <= u' < 1");
    P.theta_c = asin(P.uprime);
    P.Lambda = sqrt(detail::one_minus_square(P.uprime)) / P.u;
    P.psi = (LogScalar(std::numbers::pi / 2) - P.theta_c) / P.Lambda;
}

namespace detail {

inline void fill_arc(Period& P) {
    arc_constants(P);
    const LogScalar m = P.arc_margin();
    if (m.sign <= 0)
        throw InfeasibleError("Lambda(psi+2) < pi/2 fails at t_i = " + std::to_string(log(P.t)) + " (log)");
}

} // namespace detail

// ln t_{i+1} = ln t_i + (1/gamma)(ln(4/((1-gamma)c2^2)) + (1-gamma) ln t_i)
inline std::vector<LogScalar> build_sequence(const ConstructionParams& params) {
    params.validate();
    std::vector<LogScalar> t{params.t1};
    const double c = std::log(4.0 / ((1 - params.gamma) * params.c2 * params.c2));
    for (int i = 1; i <= params.i_max; ++i) {
        const double lt = log(t.back());
        LogScalar next = LogScalar::from_log(lt + (c + (1 - params.gamma) * lt) / params.gamma);
        if (!(t.back() + LogScalar(2.0) < next)) throw InternalError("t sequence not increasing");
        t.push_back(next);
    }
    return t;
}

inline double compute_h(const Period& P) {
    const LogScalar x = LogScalar(0.8) * P.Lambda;
    return 1.25 * detail::x_cot_x(x).value() + 3.0 * P.eps();
}

// log_eps may be empty (radial data only) or hold i_max+1 entries
inline PeriodTable build_periods(const ConstructionParams& params, const std::vector<double>& log_eps = {}) {
    const auto ts = build_sequence(params);
    const double p = params.p(), q = params.q();
    PeriodTable table{params, {}};
    Period P;
    P.t = ts[0];
    P.u = LogScalar(params.c1) * pow(ts[0], p);
    P.uprime = LogScalar(params.c1) * pow(ts[0], -q);
    for (int i = 1; i <= params.i_max + 1; ++i) {
        detail::fill_arc(P);
        if (i <= params.i_max) {
            const LogScalar phi = P.arc_margin();
            P.has_power_law = true;
            P.t_knee = P.t + LogScalar(2.0);
            P.u_knee = cos(phi) / P.Lambda;
            P.R = sin(phi) * pow(P.t_knee, q);
            if (P.R.sign <= 0) throw InfeasibleError("u_t vanishes at the knee");
        }
        if (log_eps.size() > static_cast<std::size_t>(i - 1)) {
            P.log_eps = log_eps[static_cast<std::size_t>(i - 1)];
            P.h = compute_h(P);
        }
        table.periods.push_back(P);
        if (i <= params.i_max) {
            Period N;
            N.t = ts[static_cast<std::size_t>(i)];
            N.u = P.u_knee + (P.R / LogScalar(p)) * detail::power_increment(P.t_knee, N.t - P.t_knee, p);
            N.uprime = P.R * pow(N.t, -q);
            P = N;
        }
    }
    return table;
}

inline LogScalar phase_length(const PeriodTable& table, int i, Phase ph) {
    if (ph == Phase::Arc) return LogScalar(2.0);
    const Period& P = table.at(i);
    if (!P.has_power_law) throw DomainError("period has no power-law phase");
    return table.at(i + 1).t - P.t_knee;
}

inline LogScalar global_t(const PeriodTable& table, const RadialPosition& pos) {
    const Period& P = table.at(pos.period);
    return (pos.phase == Phase::Arc ? P.t : P.t_knee) + pos.tau;
}

// u, u_t, u_tt in log domain
inline LogJet u_eval(const PeriodTable& table, const RadialPosition& pos) {
    if (pos.period < 1 || pos.period > table.i_max() + 1) throw DomainError("period index out of range");
    const Period& P = table.at(pos.period);
    if (pos.tau.sign < 0 || pos.tau > phase_length(table, pos.period, pos.phase) * LogScalar(1 + 1e-15))
        throw DomainError("tau outside phase");
    if (pos.phase == Phase::Arc) {
        const LogScalar phi = P.theta_c - P.Lambda * pos.tau;
        const LogScalar c = cos(phi);
        return {c / P.Lambda, sin(phi), -(P.Lambda * c)};
    }
    const double p = table.params.p(), q = table.params.q();
    const LogScalar t = P.t_knee + pos.tau;
    const LogScalar ut = P.R * pow(t, -q);
    return {P.u_knee + (P.R / LogScalar(p)) * detail::power_increment(P.t_knee, pos.tau, p), ut,
            -(LogScalar(q) * ut / t)};
}

// locate a global time inside [t_1, t_{i_max+1}]
inline RadialPosition locate(const PeriodTable& table, const LogScalar& t) {
    if (t < table.at(1).t || t > table.t_end()) throw DomainError("time outside the constructed range");
    for (int i = 1; i <= table.i_max(); ++i) {
        const Period& P = table.at(i);
        if (t <= P.t_knee) return {i, Phase::Arc, t - P.t};
        if (t <= table.at(i + 1).t) return {i, Phase::PowerLaw, t - P.t_knee};
    }
    return {table.i_max(), Phase::PowerLaw, phase_length(table, table.i_max(), Phase::PowerLaw)};
}

// ---------------------------------------------------------------- verification

struct MarginEntry {
    std::string name;
    double margin = std::numeric_limits<double>::infinity();
    double slack = 0.0; // non-strict inequalities pass when margin >= -slack
    int period = 0;
    Phase phase = Phase::Arc;
    double tau = 0.0; // local offset (plain double; may saturate)
    int samples = 0;

    bool pass() const { return margin > -slack; }
    void update(double m, int i, Phase ph, const LogScalar& t) {
        ++samples;
        if (m < margin) { margin = m; period = i; phase = ph; tau = t.value(); }
    }
};

struct UBoundsReport {
    MarginEntry deriv_lower{"u_t t^q >= c2"};
    MarginEntry deriv_upper{"u_t t^q <= c1"};
    MarginEntry value_lower{"u t^-p >= c2"};
    MarginEntry value_upper{"u t^-p <= c1"};
    MarginEntry value_upper_integrated{"u t^-p <= 2 c1/(1+gamma)"};
    MarginEntry arc_feasible{"Lambda(psi+2) < pi/2"}; // as (pi/2 - Lambda(psi+2))/theta_c
    MarginEntry concavity{"u_tt < 0"};
    MarginEntry arc_monotone{"u_t t^q non-increasing on arcs"};
    MarginEntry c1_value{"C0 jump"};
    MarginEntry c1_deriv{"C1 jump"};
    double max_second_jump = 0.0; // reported only
    double c1_tolerance = 1e-10;

    std::vector<const MarginEntry*> all() const {
        return {&deriv_lower, &deriv_upper, &value_lower, &value_upper, &value_upper_integrated,
                &arc_feasible, &concavity, &arc_monotone, &c1_value, &c1_deriv};
    }
    // everything except the literal c1 value bound
    bool certified() const {
        for (auto* m : all())
            if (m != &value_upper && !m->pass()) return false;
        return true;
    }
    bool literal() const { return certified() && value_upper.pass(); }
};

inline double relative_gap(const LogScalar& a, const LogScalar& b) {
    const LogScalar scale = abs(a) > abs(b) ? abs(a) : abs(b);
    if (scale.sign == 0) return 0.0;
    return (abs(a - b) / scale).value();
}

// one grid point of verify_u_bounds, for dumps
struct USample {
    int period = 0;
    Phase phase = Phase::Arc;
    LogScalar tau, t;
    LogJet u;
    double deriv_ratio = 0.0; // u_t t^q
    double value_ratio = 0.0; // u t^-p
};

inline UBoundsReport verify_u_bounds(const PeriodTable& table, int grid_density = 256, double c1_tolerance = 1e-10,
                                     const std::function<void(const USample&)>& observer = {}) {
    if (grid_density < 2) throw DomainError("grid density must be at least 2");
    const auto& pr = table.params;
    const double p = pr.p(), q = pr.q();
    const double upper_int = 2 * pr.c1 / (1 + pr.gamma);
    UBoundsReport rep;
    rep.c1_tolerance = c1_tolerance;
    rep.deriv_upper.slack = 1e-12 * pr.c1;
    rep.value_upper.slack = 1e-12 * pr.c1;
    rep.arc_monotone.slack = 1e-14;
    rep.c1_value.slack = rep.c1_deriv.slack = 0.0;
    rep.c1_value.margin = rep.c1_deriv.margin = c1_tolerance;

    auto sample = [&](int i, Phase ph, const LogScalar& tau, double* ratio_out) {
        RadialPosition pos{i, ph, tau};
        const LogJet u = u_eval(table, pos);
        const LogScalar t = global_t(table, pos);
        const double dr = (u.d1 * pow(t, q)).value();
        const double vr = (u.value * pow(t, -p)).value();
        rep.deriv_lower.update(dr - pr.c2, i, ph, tau);
        rep.deriv_upper.update(pr.c1 - dr, i, ph, tau);
        rep.value_lower.update(vr - pr.c2, i, ph, tau);
        rep.value_upper.update(pr.c1 - vr, i, ph, tau);
        rep.value_upper_integrated.update(upper_int - vr, i, ph, tau);
        // sign is exact in log domain; magnitude is reported relative to u/t^2 scale
        rep.concavity.update(u.d2.sign < 0 ? std::min(1.0, (abs(u.d2) / u.value * t * t).value()) : -1.0, i, ph, tau);
        if (ratio_out) *ratio_out = dr;
        if (observer) observer({i, ph, tau, t, u, dr, vr});
    };

    for (int i = 1; i <= table.i_max(); ++i) {
        const Period& P = table.at(i);
        // relative to theta_c so the margin stays representable
        rep.arc_feasible.update((P.arc_margin() / P.theta_c).value(), i, Phase::Arc, LogScalar(2.0));
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k < grid_density; ++k) {
            const LogScalar tau(2.0 * k / (grid_density - 1));
            double r = 0;
            sample(i, Phase::Arc, tau, &r);
            if (k > 0) rep.arc_monotone.update((prev - r) / prev, i, Phase::Arc, tau);
            prev = r;
        }
        // log-spaced in t on the power law
        const double l0 = log(P.t_knee), l1 = log(table.at(i + 1).t);
        for (int k = 0; k < grid_density; ++k) {
            const double lt = l0 + (l1 - l0) * k / (grid_density - 1);
            LogScalar tau = k == 0 ? LogScalar(0.0)
                                   : (k == grid_density - 1 ? table.at(i + 1).t - P.t_knee
                                                            : LogScalar::from_log(lt) - P.t_knee);
            if (tau.sign < 0) tau = LogScalar(0.0);
            sample(i, Phase::PowerLaw, tau, nullptr);
        }
        // junctions: t_i + 2 and t_{i+1}
        const LogJet a = u_eval(table, {i, Phase::Arc, LogScalar(2.0)});
        const LogJet b = u_eval(table, {i, Phase::PowerLaw, LogScalar(0.0)});
        const LogJet c = u_eval(table, {i, Phase::PowerLaw, phase_length(table, i, Phase::PowerLaw)});
        const LogJet d = u_eval(table, {i + 1, Phase::Arc, LogScalar(0.0)});
        rep.c1_value.update(c1_tolerance - relative_gap(a.value, b.value), i, Phase::PowerLaw, LogScalar(0.0));
        rep.c1_deriv.update(c1_tolerance - relative_gap(a.d1, b.d1), i, Phase::PowerLaw, LogScalar(0.0));
        rep.c1_value.update(c1_tolerance - relative_gap(c.value, d.value), i + 1, Phase::Arc, LogScalar(0.0));
        rep.c1_deriv.update(c1_tolerance - relative_gap(c.d1, d.d1), i + 1, Phase::Arc, LogScalar(0.0));
        rep.max_second_jump = std::max({rep.max_second_jump, relative_gap(a.d2, b.d2), relative_gap(c.d2, d.d2)});
    }
    return rep;
}

struct T1Search {
    LogScalar t1;
    int doublings = 0;
    std::vector<std::string> rejected; // reason for each smaller candidate
};

// smallest 100 * 2^k passing the certified bounds
inline T1Search select_t1(double gamma, double c1, double c2, int i_max, int grid_density = 256) {
    T1Search out;
    for (int k = 0; k < 64; ++k) {
        ConstructionParams pr{gamma, c1, c2, LogScalar(100.0) * pow(LogScalar(2.0), k), i_max};
        pr.validate();
        std::string why;
        try {
            const auto table = build_periods(pr);
            const auto rep = verify_u_bounds(table, grid_density);
            if (rep.certified()) {
                out.t1 = pr.t1;
                out.doublings = k;
                return out;
            }
            for (auto* m : rep.all())
                if (m != &rep.value_upper && !m->pass()) { why = m->name; break; }
        } catch (const InfeasibleError& e) {
            why = e.what();
        }
        out.rejected.push_back("100*2^" + std::to_string(k) + ": " + why);
    }
    throw InfeasibleError("no feasible t1 below 2^64");
}

} // namespace warpcert
