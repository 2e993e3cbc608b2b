#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "curvature.hpp"
#include "errors.hpp"
#include "jet.hpp"
#include "log_scalar.hpp"

namespace warpcert {

using EtaFn = std::function<Jet(double)>;

// ---------------------------------------------------------------- input profile
// g = dt^2 + B(t)^2 dsigma on [0, L], rewritten as r^2 cos^2 x dsigma + A(x)^2 dx^2

struct BProfile {
    // B, B', B'', B''' at t
    std::function<std::array<double, 4>(double)> B;
    double length = 0.0;
};

struct EtaProfile {
    EtaFn eta;
    EtaFn A; // jet of A(x)
    double a_inf = 1.0;
    double r = 0.0;
    double t_max = 0.0;
    bool degenerate = false; // round input, A constant
    double closing_residual = 0.0;
};

namespace detail {
inline double solve_bracket(const std::function<double(double)>& g, double lo, double hi) {
    std::uintmax_t it = 200;
    const double glo = g(lo), ghi = g(hi);
    if (glo == 0) return lo;
    if (ghi == 0) return hi;
    if ((glo > 0) == (ghi > 0)) {
        // roots at an endpoint can be lost in rounding (poles of the profile)
        const double m = std::min(std::fabs(glo), std::fabs(ghi));
        if (m < 1e-14) return std::fabs(glo) <= std::fabs(ghi) ? lo : hi;
        throw InternalError("root not bracketed");
    }
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52), it);
    return 0.5 * (r.first + r.second);
}
} // namespace detail

// A(x) = |dt/dx| with r cos x = B(t); no closing-up checks
inline EtaFn extract_A(const BProfile& P, double r, double t_max) {
    return [P, r, t_max](double x) -> Jet {
        const double h = std::numbers::pi / 2;
        if (x <= -h) x = -h;
        if (x >= h) x = h;
        auto at = [&](double y) -> Jet {
            const double target = r * std::cos(y);
            const double t = y < 0 ? detail::solve_bracket([&](double s) { return P.B(s)[0] - target; }, 0.0, t_max)
                                   : detail::solve_bracket([&](double s) { return P.B(s)[0] - target; }, t_max, P.length);
            const auto b = P.B(t);
            const double A = -r * std::sin(y) / b[1];
            const double Ax = (-r * std::cos(y) - b[2] * A * A) / b[1];
            const double Nx = r * std::sin(y) - b[3] * A * A * A - 2 * b[2] * A * Ax;
            return {A, Ax, (Nx - b[2] * A * Ax) / b[1]};
        };
        constexpr double d = 1e-4;
        if (std::fabs(x) >= d) return at(x);
        // removable 0/0 at the maximum of B: interpolate across
        const Jet lo = at(-d), hi = at(d);
        const double w = (x + d) / (2 * d), H = 2 * d;
        // cubic Hermite on value (slopes d1) and on d1 (slopes d2)
        auto herm = [&](double y0, double m0, double y1, double m1) {
            const double w2 = w * w, w3 = w2 * w;
            return (2 * w3 - 3 * w2 + 1) * y0 + (w3 - 2 * w2 + w) * H * m0 + (-2 * w3 + 3 * w2) * y1 + (w3 - w2) * H * m1;
        };
        return {herm(lo.value, lo.d1, hi.value, hi.d1), herm(lo.d1, lo.d2, hi.d1, hi.d2), lo.d2 + w * (hi.d2 - lo.d2)};
    };
}

inline EtaProfile profile_to_eta(const BProfile& P, double r, double tol = 1e-8) {
    if (!(P.length > 0) || !(r > 0)) throw DomainError("profile_to_eta: invalid length or r");
    const auto b0 = P.B(0.0), bL = P.B(P.length);
    const double residual = std::max({std::fabs(b0[0]), std::fabs(bL[0]), std::fabs(b0[1] - 1), std::fabs(bL[1] + 1),
                                      std::fabs(b0[2]), std::fabs(bL[2])});
    if (residual > tol) throw DomainError("profile_to_eta: profile does not close up smoothly");
    EtaProfile E;
    E.r = r;
    E.closing_residual = residual;
    E.t_max = detail::solve_bracket([&](double t) { return P.B(t)[1]; }, 0.0, P.length);
    const double Bmax = P.B(E.t_max)[0];
    if (std::fabs(Bmax - r) > tol * r) throw DomainError("profile_to_eta: max B differs from r");
    E.A = extract_A(P, r, E.t_max);
    // a_inf: coarse scan then Brent
    const double h = std::numbers::pi / 2;
    double best = -h, bestv = 0;
    for (int k = 0; k <= 256; ++k) {
        const double x = -h + 2 * h * k / 256;
        const double v = E.A(x).value;
        if (v > bestv) bestv = v, best = x;
    }
    const double lo = std::max(-h, best - 2 * h / 256), hi = std::min(h, best + 2 * h / 256);
    auto m = boost::math::tools::brent_find_minima([&](double x) { return -E.A(x).value; }, lo, hi, 50);
    E.a_inf = std::max(bestv, -m.second) / r;
    if (E.a_inf - 1 < 1e-9) {
        E.degenerate = true;
        E.eta = [](double) { return Jet{0, 0, 0}; };
    } else {
        const EtaFn A = E.A;
        const double ai = E.a_inf;
        E.eta = [A, r, ai](double x) {
            const Jet a = A(x);
            const double s = 1 / (r * (ai - 1));
            return Jet{(a.value / r - 1) / (ai - 1), a.d1 * s, a.d2 * s};
        };
    }
    return E;
}

// integral of A over [-pi/2, pi/2]; equals the length of the input profile
inline double integrate_A(const EtaFn& A, int pieces = 32) {
    const double h = std::numbers::pi / 2;
    double s = 0;
    for (int k = 0; k < pieces; ++k) {
        const double a = -h + 2 * h * k / pieces, b = -h + 2 * h * (k + 1) / pieces;
        s += boost::math::quadrature::gauss<double, 20>::integrate([&](double x) { return A(x).value; }, a, b);
    }
    return s;
}

// ---------------------------------------------------------------- neck parameters

struct NeckInput {
    double r = 0, R = 0, rho = 0;
    EtaFn eta;
    double a_inf = 1;

    void validate() const {
        if (!(r > 0 && r < 1)) throw DomainError("neck: r must lie in (0,1)");
        if (!(R > r && R < 1)) throw DomainError("neck: R must lie in (r,1)");
        if (!(rho > std::sqrt(r) && rho < R && rho < 0.25)) throw DomainError("neck: need sqrt(r) < rho < min(R, 1/4)");
        if (!(a_inf >= R / r * (1 - 1e-12))) throw DomainError("neck: a_inf must be at least R/r");
        if (!eta) throw DomainError("neck: missing eta profile");
    }
    // Gauss curvature of the input metric at x
    double input_curvature(double x) const {
        const Jet e = eta(x);
        const double D = 1 + (a_inf - 1) * e.value;
        const auto et = detail::eta_tan(e, x);
        return (1 - (a_inf - 1) * et.etax_tan / D) / (r * r * D * D);
    }
};

// smooth prolate input used for the cap: eta = cos^2 x, r = rho^4, total length pi R with R = 2 rho
inline NeckInput prolate_model_input(double rho) {
    NeckInput in;
    in.rho = rho;
    in.r = rho * rho * rho * rho;
    in.R = 2 * rho;
    in.a_inf = 1 + 2 * (2 * rho - in.r) / in.r;
    in.eta = [](double x) { return Jet{std::cos(x) * std::cos(x), -std::sin(2 * x), -2 * std::cos(2 * x)}; };
    return in;
}

struct EpsChoice {
    double eps_n = 0;
    int halvings = 0;
    double grid_margin = 0; // min over x of 2 eps ln(r/rho) + ln K_g
};

// (1/2) ln(1/(r a_inf)) / ln(rho/r): the eta-maximum condition with a factor-two margin
inline double eps_n_formula(double r, double a_inf, double rho) {
    return 0.5 * std::log(1 / (r * a_inf)) / std::log(rho / r);
}

inline EpsChoice choose_eps_n(const NeckInput& in, int grid = 257) {
    in.validate();
    const double ra = in.r * in.a_inf;
    if (!(ra < 1)) throw InfeasibleError("neck: r a_inf must be below 1");
    const double L = std::log(in.rho / in.r);
    EpsChoice c;
    c.eps_n = std::clamp(eps_n_formula(in.r, in.a_inf, in.rho), 1e-300, 1 - 1e-12);
    std::vector<double> lnK(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k) {
        const double x = -std::numbers::pi / 2 + std::numbers::pi * k / (grid - 1);
        const double K = in.input_curvature(x);
        if (!(K > 0)) throw InfeasibleError("neck: input curvature not positive at x = " + std::to_string(x));
        lnK[static_cast<std::size_t>(k)] = std::log(K);
    }
    for (; c.halvings <= 40; ++c.halvings, c.eps_n /= 2) {
        c.grid_margin = std::numeric_limits<double>::infinity();
        for (double v : lnK) c.grid_margin = std::min(c.grid_margin, v - 2 * c.eps_n * L);
        if (c.grid_margin > 0) return c;
    }
    throw InfeasibleError("neck: rescaled input curvature stays <= 1 after 40 halvings of eps_n");
}

inline double neck_C(double t0) { return 1 + 1 / (4 * std::log(2 * t0)); }

// ln t_inf from (1+d)(C - ln(2t0)/ln t_inf)/C = 1
inline LogScalar solve_t_inf(double t0, double delta_n) {
    if (!(t0 >= 2) || !(delta_n > 0)) throw DomainError("solve_t_inf: need t0 >= 2 and delta > 0");
    const double l2 = std::log(2 * t0), C = neck_C(t0);
    return LogScalar::from_log(l2 * (1 + delta_n) / (C * delta_n));
}

inline double t_inf_residual(double t0, double delta_n, const LogScalar& t_inf) {
    const double l2 = std::log(2 * t0), C = neck_C(t0);
    return std::fabs((1 + delta_n) * (C - l2 / log(t_inf)) / C - 1);
}

struct NeckSolution {
    double alpha = 0, beta = 0, eps_n = 0, delta_n = 0, t0 = 0;
    LogScalar t_inf, lam;
    double ln_rho = 0, ln_r = 0, a_inf = 1, C = 1;
    double s0() const { return std::log(t0); }
    double s_inf() const { return log(t_inf); }
    double log2t0() const { return std::log(2 * t0); }
    double ln_b_inf() const { return ln_r + eps_n * (ln_rho - ln_r); }
};

inline NeckSolution make_neck_solution(const NeckInput& in, double eps_n, double delta_n, double t0) {
    in.validate();
    if (!(eps_n > 0 && eps_n < 1)) throw DomainError("neck: eps_n must lie in (0,1)");
    if (!(delta_n > 0 && delta_n <= eps_n / 2 * (1 + 1e-15))) throw DomainError("neck: delta_n must lie in (0, eps_n/2]");
    NeckSolution s;
    s.eps_n = eps_n;
    s.delta_n = delta_n;
    s.t0 = t0;
    s.ln_rho = std::log(in.rho);
    s.ln_r = std::log(in.r);
    s.a_inf = in.a_inf;
    s.C = neck_C(t0);
    const double L = s.ln_rho - s.ln_r;
    // chosen so that a(t_inf) = a_inf and b(t_inf) = r (rho/r)^eps hold together
    s.alpha = std::log(in.a_inf) / ((1 - eps_n) * L);
    s.beta = (1 + delta_n) * (1 - eps_n) * L / s.C;
    s.t_inf = solve_t_inf(t0, delta_n);
    s.lam = LogScalar::from_log(s.s_inf() + s.ln_b_inf() - s.ln_r - std::log(t0));
    return s;
}

// jets of ln a and ln b in s = ln t
struct ABLog {
    Jet la, lb;
};

inline ABLog ab_eval_log(const NeckSolution& sol, double s) {
    const double s0 = sol.s0(), s1 = sol.s_inf(), l2 = sol.log2t0();
    if (s < s0 - 1e-12 * s0 || s > s1 + 1e-12 * s1) throw DomainError("ab_eval: t outside [t0, t_inf]");
    s = std::clamp(s, s0, s1);
    Jet lb;
    if (s <= l2) {
        const double t0 = sol.t0, dt = t0 * std::expm1(s - s0), t = t0 + dt, k = sol.beta / (2 * t0 * t0 * l2);
        lb = {sol.ln_rho - k * dt * dt / 2, -k * t * dt, -k * (t * dt + t * t)};
    } else {
        const double lb2 = sol.ln_rho - sol.beta / (4 * l2);
        lb = {lb2 - sol.beta + sol.beta * l2 / s, -sol.beta * l2 / (s * s), 2 * sol.beta * l2 / (s * s * s)};
    }
    const Jet la{-sol.alpha * (lb.value - sol.ln_rho), -sol.alpha * lb.d1, -sol.alpha * lb.d2};
    return {la, lb};
}

// plain jets in t; t must be a representable double
inline std::pair<Jet, Jet> ab_eval(const NeckSolution& sol, double t) {
    const ABLog g = ab_eval_log(sol, std::log(t));
    auto back = [t](const Jet& l) {
        const double v = std::exp(l.value);
        return Jet{v, v * l.d1 / t, v * (l.d2 - l.d1 + l.d1 * l.d1) / (t * t)};
    };
    return {back(g.la), back(g.lb)};
}

// ---------------------------------------------------------------- Ric > 0 on the neck

struct RicciClaimReport {
    // all curvature margins are multiplied by t^2
    double ric_T = 0, ric_X = 0, ric_S = 0, ric_TX_eig = 0;
    double phi_min = 0;          // min of ln(t^2 K_int)
    double phi_t0 = 0, phi_tinf = 0; // at the eta-maximum slice
    double endpoint_margin = 0;  // per x-slice: interior min of phi minus endpoint min
    double mixed_ratio = 0;      // max |K_TSSX| / Ric_T
    int grid_t = 0, grid_x = 0;
    double worst_s = 0, worst_x = 0;
    std::string worst;
    bool pass() const {
        return ric_T > 0 && ric_X > 0 && ric_S > 0 && ric_TX_eig > 0 && phi_min > 2 && endpoint_margin > -1e-12;
    }
    double margin() const { return std::min({ric_T, ric_X, ric_S, ric_TX_eig, phi_min - 2}); }
};

// log-spaced nodes on [s0, s_inf] plus a uniform-in-t block on [t0, 2t0] where b'/b has its first piece
inline std::vector<double> ricci_claim_s_nodes(const NeckSolution& sol, int grid_t) {
    std::vector<double> s;
    const double s0 = sol.s0(), s1 = sol.s_inf();
    for (int k = 0; k < grid_t; ++k) s.push_back(s0 + (s1 - s0) * k / (grid_t - 1));
    const int extra = std::max(8, grid_t / 8);
    for (int k = 1; k < extra; ++k) s.push_back(std::log(sol.t0 * (1 + static_cast<double>(k) / extra)));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline RicciClaimReport ricci_claim_verify(const NeckInput& in, const NeckSolution& sol, int grid_t = 512, int grid_x = 257) {
    RicciClaimReport R;
    const auto snodes = ricci_claim_s_nodes(sol, grid_t);
    R.grid_t = static_cast<int>(snodes.size());
    R.grid_x = grid_x;
    const double inf = std::numeric_limits<double>::infinity();
    R.ric_T = R.ric_X = R.ric_S = R.ric_TX_eig = R.phi_min = R.endpoint_margin = inf;
    std::vector<ABLog> ab;
    ab.reserve(snodes.size());
    for (double s : snodes) ab.push_back(ab_eval_log(sol, s));
    auto note = [&](double v, double& slot, const char* name, double s, double x) {
        if (v < slot) {
            slot = v;
            if (v <= 0) R.worst = name, R.worst_s = s, R.worst_x = x;
        }
    };
    for (int j = 0; j < grid_x; ++j) {
        const double x = -std::numbers::pi / 2 + std::numbers::pi * j / (grid_x - 1);
        const Jet e = in.eta(x);
        double interior = inf, ends = inf;
        for (std::size_t k = 0; k < snodes.size(); ++k) {
            const NeckCurvature K = neck_curvature_log(ab[k].la, ab[k].lb, e, x);
            note(K.Ric_T, R.ric_T, "Ric_T", snodes[k], x);
            note(K.Ric_X, R.ric_X, "Ric_X", snodes[k], x);
            note(K.Ric_S, R.ric_S, "Ric_S", snodes[k], x);
            note(K.ric_TX_min_eig(), R.ric_TX_eig, "Ric_TX", snodes[k], x);
            if (K.Ric_T > 0) R.mixed_ratio = std::max(R.mixed_ratio, std::fabs(K.K_TSSX) / K.Ric_T);
            const double phi = K.K_int > 0 ? std::log(K.K_int) : -inf;
            R.phi_min = std::min(R.phi_min, phi);
            if (k == 0 || k + 1 == snodes.size())
                ends = std::min(ends, phi);
            else
                interior = std::min(interior, phi);
        }
        R.endpoint_margin = std::min(R.endpoint_margin, interior - ends);
    }
    // slice through the eta-maximum
    double xm = 0, em = -1;
    for (int j = 0; j < grid_x; ++j) {
        const double x = -std::numbers::pi / 2 + std::numbers::pi * j / (grid_x - 1);
        if (in.eta(x).value > em) em = in.eta(x).value, xm = x;
    }
    R.phi_t0 = std::log(neck_curvature_log(ab.front().la, ab.front().lb, in.eta(xm), xm).K_int);
    R.phi_tinf = std::log(neck_curvature_log(ab.back().la, ab.back().lb, in.eta(xm), xm).K_int);
    if (R.phi_min <= 2 && R.worst.empty()) R.worst = "phi";
    return R;
}

// ---------------------------------------------------------------- boundary geometry

struct BoundaryClaimReport {
    double inner_II_X = 0, inner_II_S = 0;          // before rescaling, times t0 (both -1)
    double inner_residual = 0;                      // |rescaled II + lambda| / lambda
    double inner_radius_residual = 0;               // rescaled radius vs rho / lambda
    double outer_profile_residual = 0;              // sup |rescaled A - input A| / r
    double outer_II_min = 0;                        // smallest rescaled normal curvature
    double outer_leading = 0;                       // (rho/r)^eps
    bool pass() const {
        return inner_residual < 1e-10 && inner_radius_residual < 1e-10 && outer_profile_residual < 1e-8 && outer_II_min > 1;
    }
};

inline BoundaryClaimReport boundary_claim_verify(const NeckInput& in, const NeckSolution& sol, int grid_x = 257) {
    BoundaryClaimReport R;
    const ABLog a0 = ab_eval_log(sol, sol.s0()), a1 = ab_eval_log(sol, sol.s_inf());
    const double a_t0 = std::exp(a0.la.value);
    // t A_t / A and t B_t / B at t0 (independent of x since a'(t0) = 0 and a(t0) = 1)
    const double lsA0 = 1 + a0.lb.d1 + a_t0 * a0.la.d1 * in.eta(0.0).value / (1 + (a_t0 - 1) * in.eta(0.0).value);
    const double lsB0 = 1 + a0.lb.d1;
    R.inner_II_X = -lsA0;
    R.inner_II_S = -lsB0;
    // rescaling by mu = r / (t_inf b_inf): curvatures times 1/mu, lengths times mu
    const LogScalar inv_mu = LogScalar::from_log(sol.s_inf() + a1.lb.value - sol.ln_r);
    const LogScalar IIx = LogScalar(lsA0) * inv_mu / LogScalar(sol.t0);
    const LogScalar IIs = LogScalar(lsB0) * inv_mu / LogScalar(sol.t0);
    R.inner_residual = std::max(relative_gap(IIx, sol.lam), relative_gap(IIs, sol.lam));
    const LogScalar radius = LogScalar(sol.t0) * LogScalar::from_log(a0.lb.value) / inv_mu;
    R.inner_radius_residual = relative_gap(radius, LogScalar(in.rho) / sol.lam);
    // outer boundary: rescaled A = r [1 + (a(t_inf) - 1) eta], rescaled B = r cos x
    const double a_end = std::exp(a1.la.value);
    const double lead = std::exp(a1.lb.value - sol.ln_r);
    R.outer_leading = lead;
    R.outer_II_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid_x; ++j) {
        const double x = -std::numbers::pi / 2 + std::numbers::pi * j / (grid_x - 1);
        const Jet e = in.eta(x);
        const double D = 1 + (a_end - 1) * e.value;
        R.outer_profile_residual = std::max(R.outer_profile_residual, std::fabs(D - (1 + (in.a_inf - 1) * e.value)));
        const double lsA = 1 + a1.lb.d1 + a_end * a1.la.d1 * e.value / D, lsB = 1 + a1.lb.d1;
        R.outer_II_min = std::min({R.outer_II_min, lead * lsA, lead * lsB});
    }
    return R;
}

// ---------------------------------------------------------------- parameter search

struct NeckBuild {
    NeckSolution sol;
    EpsChoice eps;
    RicciClaimReport ricci_claim;
    BoundaryClaimReport boundary_claim;
    int t0_doublings = 0;
    int delta_halvings = 0;
};

inline NeckBuild build_neck(const NeckInput& in, int grid_t = 512, int grid_x = 257, double t0_start = 16,
                            double t0_cap = 0x1p48) {
    NeckBuild B;
    B.eps = choose_eps_n(in, grid_x);
    double delta = B.eps.eps_n / 2;
    for (B.delta_halvings = 0; B.delta_halvings <= 40; ++B.delta_halvings, delta /= 2) {
        bool found = false;
        double t0 = t0_start;
        for (B.t0_doublings = 0; t0 <= t0_cap; ++B.t0_doublings, t0 *= 2) {
            B.sol = make_neck_solution(in, B.eps.eps_n, delta, t0);
            if (!(B.sol.alpha > 1 && B.sol.alpha < 2)) throw InfeasibleError("neck: alpha outside (1,2)");
            B.ricci_claim = ricci_claim_verify(in, B.sol, grid_t, grid_x);
            if (B.ricci_claim.pass()) {
                found = true;
                break;
            }
        }
        if (!found)
            throw InfeasibleError("neck: no t0 up to the cap passes Ric > 0; worst " + B.ricci_claim.worst + " margin " +
                                  std::to_string(B.ricci_claim.margin()));
        B.boundary_claim = boundary_claim_verify(in, B.sol, grid_x);
        if (B.boundary_claim.pass()) return B;
    }
    throw InfeasibleError("neck: outer boundary not convex enough after 40 halvings of delta");
}

// ---------------------------------------------------------------- cap constants

inline double cap_rho_rhs(int n) { return 100.0 * n / (CapParams::tanh12() * CapParams::tanh12()); }

// largest rho = 2^-j / 10 with (1 - 64 rho^2)/rho^2 >= 100 n / tanh^2(pi/12)
inline double choose_cap_rho(int n) {
    if (n < 2) throw DomainError("cap: n must be at least 2");
    const double rhs = cap_rho_rhs(n);
    for (int j = 0; j < 60; ++j) {
        const double rho = std::ldexp(0.1, -j);
        if ((1 - 64 * rho * rho) / (rho * rho) >= rhs) return rho;
    }
    throw InternalError("cap: no rho found");
}

struct CapBuild {
    CapParams cap;
    NeckInput input;
    NeckBuild neck;
};

inline CapBuild choose_cap_constants(int n, int grid_t = 512, int grid_x = 257) {
    CapBuild C;
    const double rho = choose_cap_rho(n);
    C.input = prolate_model_input(rho);
    C.neck = build_neck(C.input, grid_t, grid_x);
    C.cap = make_cap_params(n, rho, C.neck.sol.lam);
    return C;
}

} // namespace warpcert
