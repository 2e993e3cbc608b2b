#pragma once

// Forward-mode jets against Richardson central differences, per profile family.
// Each family is sampled where its values are plain doubles; the jet code is the
// same code that runs in log domain elsewhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "angular.hpp"
#include "curvature.hpp"
#include "finite_diff.hpp"
#include "neck.hpp"
#include "radial.hpp"

namespace warpcert {

struct JetFdFamily {
    explicit JetFdFamily(std::string n = {}) : name(std::move(n)) {}

    std::string name;
    int points = 0;
    double max_rel_err = 0.0;
    double worst_at = 0.0;
    double tolerance = 1e-6;
    // one row per sample: abscissa, value, jet d1, jet d2, fd d1, fd d2, relative error
    std::vector<std::array<double, 7>> rows;

    bool pass() const { return points > 0 && max_rel_err < tolerance; }
    double margin() const { return tolerance - max_rel_err; }

    // error of each derivative order relative to max(|jet|, |value| kappa^order);
    // kappa is the inverse length of the family at the sample
    void add(double x, const Jet& jet, const FdResult& fd, double kappa) {
        const double s1 = std::max(std::fabs(jet.d1), std::fabs(jet.value) * kappa);
        const double s2 = std::max(std::fabs(jet.d2), std::fabs(jet.value) * kappa * kappa);
        const double e = std::max(std::fabs(fd.d1 - jet.d1) / s1, std::fabs(fd.d2 - jet.d2) / s2);
        rows.push_back({x, jet.value, jet.d1, jet.d2, fd.d1, fd.d2, e});
        ++points;
        if (!(e <= max_rel_err)) {
            max_rel_err = e;
            worst_at = x;
        }
    }
};

constexpr std::uint64_t kJetFdSeed = 0x5eed2024ULL;

// u on a table with u(t_1) = 10: period-1 arcs in tau, power laws within e^6 of each knee
inline JetFdFamily jet_fd_u(ConstructionParams params, int points, double tol, std::uint64_t seed = kJetFdSeed) {
    params.t1 = LogScalar(std::pow(10 / params.c1, 1 / params.p()));
    const PeriodTable table = build_periods(params);
    JetFdFamily fam{"u"};
    fam.tolerance = tol;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    const int arcs = points / 3;
    for (int k = 0; k < arcs; ++k) {
        const double tau = 2 * U(rng);
        const LogJet j = u_eval(table, {1, Phase::Arc, LogScalar(tau)});
        const auto fd = fd_derivatives(
            [&](double s) { return u_eval(table, {1, Phase::Arc, LogScalar(s)}).value.value(); }, tau, 1e-3);
        fam.add((table.at(1).t + LogScalar(tau)).value(), {j.value.value(), j.d1.value(), j.d2.value()}, fd,
                table.at(1).Lambda.value());
    }
    for (int k = arcs; k < points; ++k) {
        const int i = 1 + (k - arcs) % table.i_max();
        const double knee = table.at(i).t_knee.value();
        const double t = std::exp(std::log(knee) + 6 * U(rng));
        auto at = [&](double s) { return u_eval(table, {i, Phase::PowerLaw, LogScalar(s - knee)}); };
        const LogJet j = at(t);
        const auto fd = fd_derivatives([&](double s) { return at(s).value.value(); }, t, 1e-3 * (t - knee));
        fam.add(t, {j.value.value(), j.d1.value(), j.d2.value()}, fd, 1 / t);
    }
    return fam;
}

// f at eps = 0.05, where every piece is representable; junctions b, eps, eps^{1/4} excluded
inline JetFdFamily jet_fd_f(double R0, int points, double tol, std::uint64_t seed = kJetFdSeed + 1) {
    const AngularSolution s = solve_angular_params_eps(0.05, R0);
    const double b = std::exp(s.ln_b.value()), q = std::pow(s.eps, 0.25), pi = std::numbers::pi;
    struct Range {
        double lo, hi;
        bool log;
    };
    const Range ranges[] = {{0, b, false},       {std::log(b), std::log(s.eps), true}, {s.eps, q, false},
                            {q, pi / 2, false}, {pi / 2, pi - q, false}};
    JetFdFamily fam{"f"};
    fam.tolerance = tol;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    for (int k = 0; k < points; ++k) {
        const Range& r = ranges[k % 5];
        const double u = U(rng);
        const double x = r.log ? std::exp(r.lo + u * (r.hi - r.lo)) : r.lo + u * (r.hi - r.lo);
        const double lo = r.log ? std::exp(r.lo) : r.lo, hi = r.log ? std::exp(r.hi) : r.hi;
        const double h = std::min(1e-3 * (r.log ? x : hi - lo), 0.04 * std::min(x - lo, hi - x));
        const auto fd = fd_derivatives([&](double y) { return f_eval(s, y).value; }, x, h);
        // the axis piece sin(lx)/l has length scale 1/l
        const double kappa = k % 5 == 0 ? std::exp(s.ln_l.value()) : 1 / std::min(x, pi - x);
        fam.add(x, f_eval(s, x), fd, kappa);
    }
    return fam;
}

// a and b in plain t: half on the first piece [t0, 2t0], half log-spread beyond it up to 1e100;
// past that a''(t) ~ a/t^2 runs into subnormals, and the log-time jets take over
inline std::pair<JetFdFamily, JetFdFamily> jet_fd_ab(const NeckSolution& sol, int points, double tol,
                                                     std::uint64_t seed = kJetFdSeed + 2) {
    JetFdFamily fa{"a"}, fb{"b"};
    fa.tolerance = fb.tolerance = tol;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    const double t0 = sol.t0, l2 = std::log(2 * t0 * 1.02);
    for (int k = 0; k < points; ++k) {
        const double t = k % 2 ? t0 * (1.02 + 0.95 * U(rng)) : std::exp(l2 + (std::min(sol.s_inf(), 230.0) - l2 - 0.1) * U(rng));
        const double h = 1e-3 * (t > 2 * t0 ? t : t0);
        const auto [a, b] = ab_eval(sol, t);
        fa.add(t, a, fd_derivatives([&](double v) { return ab_eval(sol, v).first.value; }, t, h), 1 / t);
        fb.add(t, b, fd_derivatives([&](double v) { return ab_eval(sol, v).second.value; }, t, h), 1 / t);
    }
    return {fa, fb};
}

// cap profiles in s = k tbar on [0.01, pi/6]; s = 0 is the closure point
inline std::pair<JetFdFamily, JetFdFamily> jet_fd_cap(const CapParams& cap, double h_ball, int points, double tol,
                                                      std::uint64_t seed = kJetFdSeed + 3) {
    JetFdFamily fu{"cap_ubar"}, fv{"cap_vbar"};
    fu.tolerance = fv.tolerance = tol;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.01, std::numbers::pi / 6);
    for (int k = 0; k < points; ++k) {
        const double s = U(rng);
        fu.add(s, cap_ubar_scaled(cap, h_ball, s),
               fd_derivatives([&](double y) { return cap_ubar_scaled(cap, h_ball, y).value; }, s, 1e-3), 1.0);
        fv.add(s, cap_vbar_scaled(s), fd_derivatives([](double y) { return cap_vbar_scaled(y).value; }, s, 1e-3), 1 / s);
    }
    return {fu, fv};
}

} // namespace warpcert
