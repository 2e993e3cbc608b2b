#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "angular.hpp"
#include "errors.hpp"
#include "log_scalar.hpp"
#include "radial.hpp"

namespace warpcert {

class FitRefused : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------- log-domain quadrature

namespace detail {

using Gauss20 = boost::math::quadrature::gauss<double, 20>;

// integral over [a, b] of exp(g(s)) by 20-point Gauss, summed with a shift
inline LogScalar gauss_log(const std::function<double(double)>& g, double a, double b) {
    const auto& x = Gauss20::abscissa();
    const auto& w = Gauss20::weights();
    const double m = 0.5 * (a + b), r = 0.5 * (b - a);
    std::vector<std::pair<double, double>> terms; // (log value, weight)
    terms.reserve(2 * x.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x.size(); ++k) {
        for (int sgn : {1, -1}) {
            if (k == 0 && sgn < 0 && x[0] == 0.0) continue;
            const double v = g(m + sgn * r * x[k]);
            terms.emplace_back(v, w[k]);
            top = std::max(top, v);
        }
    }
    if (top == -std::numeric_limits<double>::infinity()) return {};
    double sum = 0;
    for (const auto& [v, wk] : terms) sum += wk * std::exp(v - top);
    return LogScalar::from_log(top + std::log(sum * r));
}

} // namespace detail

// integral of exp(g(s)) over [a, b], split so that no piece is wider than `step`
inline LogScalar integrate_log(const std::function<double(double)>& g, double a, double b, double step = 1.0) {
    if (!(b >= a)) throw DomainError("integrate_log: reversed interval");
    if (b == a) return {};
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / step)));
    LogScalar total;
    for (int k = 0; k < n; ++k) total = total + detail::gauss_log(g, a + (b - a) * k / n, a + (b - a) * (k + 1) / n);
    return total;
}

// ---------------------------------------------------------------- model

// Everything the growth estimates need. Periods past the verified range carry u only; their
// eps lies far below 1e-8, where the angular integral is 2 R0 to double precision.
struct GrowthModel {
    PeriodTable table;
    std::vector<double> log_eps; // per period, may be shorter than the table
    double R0 = 0.04;
    int n = 2;
    LogScalar c0 = LogScalar(1.0);
    double diam_allowance = 3.2;     // per period: detours around the two removed balls
    double vol_allowance_factor = 2; // multiple of the removed-ball volume, per period

    double gamma() const { return table.params.gamma; }
    // area of the unit S^{n-1}
    double omega() const { return 2 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n); }
    LogScalar fiber() const { return LogScalar(omega()) * pow(c0, n - 1); }
    LogScalar ball_volume_allowance() const {
        return LogScalar(vol_allowance_factor * 2 * 4.0 / 3.0 * std::numbers::pi * 0.512) * fiber();
    }
};

// int_0^pi f dx for the profile at eps; below 1e-8 the deformation is invisible next to 2 R0
inline double angular_mass(double log_eps, double R0) {
    if (log_eps < std::log(1e-8)) return 2 * R0;
    const AngularSolution s = solve_angular_params(log_eps, R0);
    const double q = std::exp(0.25 * log_eps);
    auto f = [&](double x) { return f_eval(s, x).value; };
    const double inner = detail::Gauss20::integrate(f, 0.0, s.eps) + detail::Gauss20::integrate(f, s.eps, q);
    return 2 * (R0 * std::cos(q) + inner);
}

namespace detail {

struct MassCache {
    double R0;
    std::map<double, double> memo;
    double operator()(double le) {
        auto it = memo.find(le);
        if (it != memo.end()) return it->second;
        return memo[le] = angular_mass(le, R0);
    }
};

// ln eps(t) at a radial position; past the schedule the value is only known to be tiny
inline double model_log_eps(const GrowthModel& m, const RadialPosition& pos) {
    const int have = static_cast<int>(m.log_eps.size());
    if (pos.period + 1 > have) return -1e9;
    EpsSchedule sch;
    sch.log_eps = m.log_eps;
    return sch.log_eps_jet(pos).value;
}

// ln(u^2 F) at a radial position
inline double log_density(const GrowthModel& m, MassCache& mass, const RadialPosition& pos) {
    const LogScalar u = u_eval(m.table, pos).value;
    return 2 * u.logmag + std::log(mass(model_log_eps(m, pos)));
}

} // namespace detail

struct VolumeSample {
    LogScalar t;
    LogScalar volume;   // smooth part
    LogScalar allowance;
};

// cumulative volume at increasing times inside [t_1, t_end]; one pass over the table
inline std::vector<VolumeSample> volume_samples(const GrowthModel& m, std::vector<LogScalar> times, double step = 0.5) {
    std::sort(times.begin(), times.end(), [](const LogScalar& a, const LogScalar& b) { return a < b; });
    const PeriodTable& T = m.table;
    if (!times.empty() && (times.front() < T.at(1).t || times.back() > T.t_end()))
        throw DomainError("volume: time outside the constructed range");
    detail::MassCache mass{m.R0, {}};
    const LogScalar scale = LogScalar(2 * std::numbers::pi) * m.fiber();
    std::vector<VolumeSample> out;
    LogScalar acc;
    std::size_t next = 0;
    int balls = 0;

    auto emit_until = [&](const LogScalar& t_hi, const std::function<LogScalar(const LogScalar&)>& partial) {
        while (next < times.size() && !(times[next] > t_hi)) {
            const LogScalar v = (acc + partial(times[next])) * scale;
            out.push_back({times[next], v, LogScalar(static_cast<double>(balls)) * m.ball_volume_allowance()});
            ++next;
        }
    };

    for (int i = 1; i <= T.i_max(); ++i) {
        const Period& P = T.at(i);
        // arc, in the local offset tau
        auto arc_int = [&](double tau_hi) {
            if (tau_hi <= 0) return LogScalar();
            LogScalar s;
            for (auto [a, b] : {std::pair{0.0, std::min(tau_hi, 0.5)}, std::pair{0.5, std::min(tau_hi, 1.5)},
                                std::pair{1.5, tau_hi}}) {
                if (b <= a) continue;
                s = s + integrate_log([&](double tau) { return detail::log_density(m, mass, {i, Phase::Arc, LogScalar(tau)}); },
                                      a, b, 0.25);
            }
            return s;
        };
        emit_until(P.t_knee, [&](const LogScalar& t) { return arc_int((t - P.t).value()); });
        acc = acc + arc_int(2.0);
        ++balls;
        // power law, in s = ln t
        const double s0 = log(P.t_knee), s1 = log(T.at(i + 1).t);
        auto pl = [&](double s) {
            const LogScalar t = LogScalar::from_log(s);
            const LogScalar tau = t > P.t_knee ? t - P.t_knee : LogScalar(0.0);
            return detail::log_density(m, mass, {i, Phase::PowerLaw, tau}) + s;
        };
        double s_done = s0;
        while (next < times.size() && !(times[next] > T.at(i + 1).t)) {
            const double s_t = std::max(s0, log(times[next]));
            acc = acc + integrate_log(pl, s_done, s_t, step);
            s_done = s_t;
            emit_until(times[next], [](const LogScalar&) { return LogScalar(); });
        }
        acc = acc + integrate_log(pl, s_done, s1, step);
    }
    emit_until(T.t_end(), [](const LogScalar&) { return LogScalar(); });
    return out;
}

inline LogScalar volume_of_ball(const GrowthModel& m, const LogScalar& t) {
    const auto v = volume_samples(m, {t});
    return v.front().volume + v.front().allowance;
}

// pi u(t) + pi c0 + allowance per started period
inline LogScalar diameter_bound(const GrowthModel& m, const LogScalar& t, double allowance_scale = 1.0) {
    const RadialPosition pos = locate(m.table, t);
    const LogScalar u = u_eval(m.table, pos).value;
    const int started = pos.period - 1 + (pos.phase == Phase::PowerLaw || pos.tau > LogScalar(1.0) ? 1 : 0);
    return LogScalar(std::numbers::pi) * (u + m.c0) + LogScalar(allowance_scale * m.diam_allowance * started);
}

// ---------------------------------------------------------------- fitting

struct GrowthFit {
    std::vector<double> abscissae; // ln t
    std::vector<double> ordinates; // ln q
    double slope = 0, intercept = 0, max_residual = 0;
};

inline constexpr double kMinLnTSpan = 1000.0; // three decades of ln t

inline GrowthFit fit_growth_exponent(const std::vector<std::pair<LogScalar, LogScalar>>& pts) {
    if (pts.size() < 8) throw FitRefused("growth fit needs at least 8 points");
    GrowthFit f;
    for (const auto& [t, q] : pts) {
        if (t.sign <= 0 || q.sign <= 0) throw FitRefused("growth fit needs positive t and q");
        f.abscissae.push_back(t.logmag);
        f.ordinates.push_back(q.logmag);
    }
    const auto [lo, hi] = std::minmax_element(f.abscissae.begin(), f.abscissae.end());
    if (!(*lo > 0) || *hi / *lo < kMinLnTSpan)
        throw FitRefused("growth fit needs ln t to span three decades, got ratio " + std::to_string(*hi / std::max(*lo, 1e-300)));
    const double n = static_cast<double>(pts.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) { mx += f.abscissae[k]; my += f.ordinates[k]; }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        sxx += (f.abscissae[k] - mx) * (f.abscissae[k] - mx);
        sxy += (f.abscissae[k] - mx) * (f.ordinates[k] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t k = 0; k < pts.size(); ++k)
        f.max_residual = std::max(f.max_residual, std::fabs(f.ordinates[k] - f.intercept - f.slope * f.abscissae[k]));
    return f;
}

// ---------------------------------------------------------------- sampling plan

// smallest period count whose power-law phases give ln t_end / ln t_knee(1) >= span
inline int periods_for_span(const ConstructionParams& p, double span = kMinLnTSpan, int cap = 40) {
    for (int im = 1; im <= cap; ++im) {
        ConstructionParams q = p;
        q.i_max = im;
        const auto ts = build_sequence(q);
        if (log(ts.back()) / log(ts.front() + LogScalar(2.0)) >= span) return im;
    }
    throw InfeasibleError("growth: ln t span not reached within " + std::to_string(cap) + " periods");
}

// times uniform in ln ln t over the power-law phases; arcs (surgery windows) are skipped
inline std::vector<LogScalar> growth_sample_times(const PeriodTable& T, int count) {
    if (count < 2) throw DomainError("growth: need at least 2 samples");
    const double a = std::log(log(T.at(1).t_knee)), b = std::log(log(T.t_end()));
    std::vector<LogScalar> out;
    for (int k = 0; k < count; ++k) {
        const LogScalar t = LogScalar::from_log(std::exp(a + (b - a) * k / (count - 1)));
        const RadialPosition pos = locate(T, k == count - 1 ? T.t_end() : t);
        if (pos.phase == Phase::PowerLaw) out.push_back(k == count - 1 ? T.t_end() : t);
    }
    return out;
}

struct GrowthWindow {
    int period;
    double ln_t_lo, ln_t_hi;
};

struct GrowthResult {
    GrowthFit vol, diam;
    double vol_target = 0, diam_target = 0;
    double diam_slope_doubled_allowance = 0;
    double vol_slope_doubled_allowance = 0;
    int periods = 0;
    int verified_periods = 0;
    std::vector<GrowthWindow> excluded; // arc windows, in ln t
    double ln_t_span = 0;               // ln t_max / ln t_min over the samples
    double vol_error() const { return std::fabs(vol.slope - vol_target); }
    double diam_error() const { return std::fabs(diam.slope - diam_target); }
    bool pass(double tol = 0.05) const { return vol_error() < tol && diam_error() < tol; }
};

inline GrowthResult growth_fits(const GrowthModel& m, int samples = 240) {
    GrowthResult r;
    r.periods = m.table.i_max();
    r.verified_periods = std::max(0, static_cast<int>(m.log_eps.size()) - 1);
    r.vol_target = 2 + m.gamma();
    r.diam_target = 0.5 * (1 + m.gamma());
    for (int i = 1; i <= m.table.i_max(); ++i) {
        const Period& P = m.table.at(i);
        r.excluded.push_back({i, log(P.t), log(P.t_knee)});
    }
    const auto times = growth_sample_times(m.table, samples);
    const auto vols = volume_samples(m, times);
    std::vector<std::pair<LogScalar, LogScalar>> vp, vp2, dp, dp2;
    for (const auto& v : vols) {
        vp.emplace_back(v.t, v.volume + v.allowance);
        vp2.emplace_back(v.t, v.volume + LogScalar(2.0) * v.allowance);
        dp.emplace_back(v.t, diameter_bound(m, v.t));
        dp2.emplace_back(v.t, diameter_bound(m, v.t, 2.0));
    }
    r.vol = fit_growth_exponent(vp);
    r.diam = fit_growth_exponent(dp);
    r.vol_slope_doubled_allowance = fit_growth_exponent(vp2).slope;
    r.diam_slope_doubled_allowance = fit_growth_exponent(dp2).slope;
    r.ln_t_span = r.vol.abscissae.back() / r.vol.abscissae.front();
    return r;
}

} // namespace warpcert
