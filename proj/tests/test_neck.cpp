#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "warpcert/finite_diff.hpp"
#include "warpcert/neck.hpp"

using namespace warpcert;

namespace {
constexpr double kPi = std::numbers::pi;

// B = sin t - k sin^3 t: odd about 0 and pi, so it closes up smoothly; max B = 1 - k at pi/2
BProfile cubic_profile(double k) {
    BProfile P;
    P.length = kPi;
    P.B = [k](double t) {
        const double s = std::sin(t), c = std::cos(t);
        return std::array<double, 4>{s - k * s * s * s, c - 3 * k * s * s * c, -s - k * (6 * s * c * c - 3 * s * s * s),
                                     -c - k * (6 * c * c * c - 21 * s * s * c)};
    };
    return P;
}

// built once: the full t0 search for the cap model
const CapBuild& cap2() {
    static const CapBuild c = choose_cap_constants(2);
    return c;
}
} // namespace

TEST(Profile, CubicProfileDerivativesAreConsistent) {
    const auto P = cubic_profile(0.2);
    for (double t : {0.3, 1.1, 2.0}) {
        for (int j = 0; j < 3; ++j) {
            auto fd = fd_derivatives([&](double s) { return P.B(s)[static_cast<std::size_t>(j)]; }, t, 1e-3);
            EXPECT_NEAR(fd.d1, P.B(t)[static_cast<std::size_t>(j + 1)], 1e-8);
        }
    }
}

TEST(Profile, RoundInputIsDegenerate) {
    const double r = 0.3;
    BProfile P;
    P.length = kPi * r;
    P.B = [r](double t) {
        return std::array<double, 4>{r * std::sin(t / r), std::cos(t / r), -std::sin(t / r) / r, -std::cos(t / r) / (r * r)};
    };
    const auto E = profile_to_eta(P, r);
    EXPECT_TRUE(E.degenerate);
    EXPECT_NEAR(E.a_inf, 1.0, 1e-9);
    for (double x : {-1.5, -0.7, 0.0, 0.4, 1.2}) EXPECT_NEAR(E.A(x).value, r, 1e-8);
    EXPECT_NEAR(integrate_A(E.A), kPi * r, 1e-8 * kPi * r);
}

TEST(Profile, ExtractionMatchesInverseFunction) {
    const double k = 0.2, r = 1 - k;
    const auto P = cubic_profile(k);
    const auto E = profile_to_eta(P, r);
    EXPECT_FALSE(E.degenerate);
    // oracle: t(x) by bisection on r cos x = B(t), A = dt/dx by central differences
    auto t_of = [&](double x) {
        double lo = x < 0 ? 0.0 : kPi / 2, hi = x < 0 ? kPi / 2 : kPi;
        const double target = r * std::cos(x);
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (lo + hi);
            const bool below = P.B(m)[0] < target;
            if ((x < 0) == below) lo = m; else hi = m;
        }
        return 0.5 * (lo + hi);
    };
    for (double x : {-1.4, -0.9, -0.3, 0.25, 0.8, 1.3}) {
        const double h = 1e-5;
        const double A = (t_of(x + h) - t_of(x - h)) / (2 * h);
        EXPECT_NEAR(E.A(x).value, A, 1e-7);
        auto fd = fd_derivatives([&](double y) { return E.A(y).value; }, x, 1e-3);
        EXPECT_NEAR(E.A(x).d1, fd.d1, 1e-6);
        EXPECT_NEAR(E.A(x).d2, fd.d2, 1e-5);
    }
    EXPECT_NEAR(integrate_A(E.A), kPi, 1e-8 * kPi);
    // normalisation
    EXPECT_NEAR(E.eta(-kPi / 2).value, 0.0, 1e-12);
    EXPECT_NEAR(E.eta(kPi / 2).value, 0.0, 1e-12);
    EXPECT_NEAR(E.eta(kPi / 2).d1, 0.0, 1e-9);
    double emax = 0;
    for (int j = 0; j <= 400; ++j) emax = std::max(emax, E.eta(-kPi / 2 + kPi * j / 400).value);
    EXPECT_NEAR(emax, 1.0, 1e-9);
    EXPECT_GE(E.a_inf, 1 / r);
}

// the rescaled ball boundary profile is a cone at the poles: extraction gives a constant A, validation refuses it
TEST(Profile, ConeProfileRejected) {
    const double R0 = 0.04, c = std::cos(0.08);
    BProfile P;
    P.length = kPi * c;
    P.B = [=](double t) {
        return std::array<double, 4>{R0 * c * std::sin(t / c), R0 * std::cos(t / c), -R0 * std::sin(t / c) / c,
                                     -R0 * std::cos(t / c) / (c * c)};
    };
    EXPECT_THROW(profile_to_eta(P, R0 * c), DomainError);
    const auto A = extract_A(P, R0 * c, kPi * c / 2);
    for (double x : {-1.2, -0.5, 0.3, 1.0}) EXPECT_NEAR(A(x).value, c, 1e-8);
}

TEST(NeckParams, EpsFormulaExample) {
    EXPECT_NEAR(eps_n_formula(1e-4, 2.0, 1e-2), 0.5 * std::log(5000.0) / std::log(100.0), 1e-15);
    EXPECT_NEAR(eps_n_formula(1e-4, 2.0, 1e-2), 0.925, 1e-3);
    // increasing as a_inf decreases towards 1
    EXPECT_GT(eps_n_formula(1e-4, 1.0, 1e-2), eps_n_formula(1e-4, 2.0, 1e-2));
}

TEST(NeckParams, EpsChoicePassesGrid) {
    const auto in = prolate_model_input(0.0125);
    const auto c = choose_eps_n(in);
    EXPECT_EQ(c.halvings, 0);
    EXPECT_GT(c.grid_margin, 0.0);
    const double L = std::log(in.rho / in.r);
    for (int j = 0; j <= 100; ++j) {
        const double x = -kPi / 2 + kPi * j / 100;
        EXPECT_GT(std::exp(-2 * c.eps_n * L) * in.input_curvature(x), 1.0);
    }
}

TEST(NeckParams, TInfExample) {
    const LogScalar t = solve_t_inf(10, 0.05);
    EXPECT_NEAR(log(t), 58.07, 0.01);
    EXPECT_LT(t_inf_residual(10, 0.05, t), 1e-12);
    double prev = 1e300;
    for (int k = 1; k <= 10; ++k) {
        const double lt = log(solve_t_inf(10, 0.05 * k));
        EXPECT_LT(lt, prev);
        prev = lt;
    }
    EXPECT_THROW(solve_t_inf(1.0, 0.1), DomainError);
}

TEST(NeckParams, InputValidation) {
    auto in = prolate_model_input(0.0125);
    in.rho = 0.3;
    EXPECT_THROW(in.validate(), DomainError);
    in = prolate_model_input(0.0125);
    in.a_inf = 1.5;
    EXPECT_THROW(in.validate(), DomainError);
}

TEST(AB, EndpointValues) {
    const auto in = prolate_model_input(0.0125);
    const auto e = choose_eps_n(in);
    const auto s = make_neck_solution(in, e.eps_n, e.eps_n / 2, 0x1p29);
    const auto a0 = ab_eval_log(s, s.s0());
    EXPECT_NEAR(a0.la.value, 0.0, 1e-15);
    EXPECT_NEAR(a0.lb.value, std::log(0.0125), 1e-15);
    EXPECT_EQ(a0.la.d1, 0.0);
    EXPECT_EQ(a0.lb.d1, 0.0);
    const auto a1 = ab_eval_log(s, s.s_inf());
    EXPECT_NEAR(a1.la.value, std::log(in.a_inf), 1e-8 * std::log(in.a_inf));
    EXPECT_NEAR(a1.lb.value, std::log(in.r) + e.eps_n * std::log(in.rho / in.r), 1e-8);
    EXPECT_GT(s.alpha, 1.0);
    EXPECT_LT(s.alpha, 2.0);
    EXPECT_NEAR(log(s.lam), s.s_inf() + a1.lb.value - std::log(in.r) - std::log(s.t0), 1e-10);
    EXPECT_THROW(ab_eval_log(s, s.s0() - 1), DomainError);
}

// ln a(t_inf) as the integral of a'/a over [t0, t_inf], not the closed form
TEST(AB, IntegratedLogDerivative) {
    const auto in = prolate_model_input(0.0125);
    const auto e = choose_eps_n(in);
    const auto s = make_neck_solution(in, e.eps_n, e.eps_n / 2, 0x1p29);
    double total = 0;
    auto piece = [&](double lo, double hi) {
        return boost::math::quadrature::gauss<double, 30>::integrate([&](double v) { return ab_eval_log(s, v).la.d1; }, lo, hi);
    };
    total += piece(s.s0(), s.log2t0());
    const double span = s.s_inf() - s.log2t0();
    for (int k = 0; k < 64; ++k) total += piece(s.log2t0() + span * k / 64, s.log2t0() + span * (k + 1) / 64);
    EXPECT_NEAR(total, std::log(in.a_inf), 1e-10);
}

TEST(AB, JetsMatchFiniteDifferences) {
    const auto in = prolate_model_input(0.0125);
    const auto e = choose_eps_n(in);
    const auto s = make_neck_solution(in, e.eps_n, e.eps_n / 2, 16);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0, 1);
    for (int k = 0; k < 300; ++k) {
        // half the samples on the first piece, half log-spread over the rest
        const double t = k % 2 ? 16 * (1 + 0.95 * U(rng) + 0.02) : std::exp(std::log(33.0) + (s.s_inf() - std::log(33.0) - 0.1) * U(rng));
        const auto [a, b] = ab_eval(s, t);
        const double h = t > 32 ? 1e-3 * t : 1e-3 * 16;
        auto fa = fd_derivatives([&](double v) { return ab_eval(s, v).first.value; }, t, h);
        auto fb = fd_derivatives([&](double v) { return ab_eval(s, v).second.value; }, t, h);
        EXPECT_NEAR(fa.d1, a.d1, 1e-6 * std::fabs(a.d1) + 1e-14 * a.value / t) << t;
        EXPECT_NEAR(fb.d1, b.d1, 1e-6 * std::fabs(b.d1) + 1e-14 * b.value / t) << t;
        EXPECT_NEAR(fa.d2, a.d2, 1e-6 * std::fabs(a.d2) + 1e-9 * a.value / (t * t)) << t;
        EXPECT_NEAR(fb.d2, b.d2, 1e-6 * std::fabs(b.d2) + 1e-9 * b.value / (t * t)) << t;
    }
}

TEST(AB, ContinuousAcrossDoubledT0) {
    const auto in = prolate_model_input(0.0125);
    const auto e = choose_eps_n(in);
    const auto s = make_neck_solution(in, e.eps_n, e.eps_n / 2, 1000);
    const double l2 = s.log2t0();
    const auto lo = ab_eval_log(s, l2 * (1 - 1e-14)), hi = ab_eval_log(s, l2 * (1 + 1e-14));
    EXPECT_NEAR(lo.lb.value, hi.lb.value, 1e-12);
    EXPECT_NEAR(lo.lb.d1, hi.lb.d1, 1e-10);
    EXPECT_NEAR(lo.la.d1, hi.la.d1, 1e-10);
}

TEST(AB, MonotoneAndFirstIntegral) {
    const auto& s = cap2().neck.sol;
    double pa = -1e300, pb = 1e300;
    for (int k = 0; k <= 1000; ++k) {
        const double v = s.s0() + (s.s_inf() - s.s0()) * k / 1000;
        const auto g = ab_eval_log(s, v);
        EXPECT_GE(g.la.value, pa);
        EXPECT_LE(g.lb.value, pb);
        pa = g.la.value;
        pb = g.lb.value;
        EXPECT_NEAR(g.la.value + s.alpha * g.lb.value, s.alpha * s.ln_rho, 1e-12 * std::fabs(s.alpha * s.ln_rho));
    }
}

TEST(RicciClaim, SmallT0FailsAndSearchEscalates) {
    const auto in = prolate_model_input(0.0125);
    const auto e = choose_eps_n(in);
    const auto s = make_neck_solution(in, e.eps_n, e.eps_n / 2, 16);
    EXPECT_FALSE(ricci_claim_verify(in, s, 128, 65).pass());
    EXPECT_GT(cap2().neck.t0_doublings, 0);
    EXPECT_LE(cap2().neck.sol.t0, 0x1p48);
}

TEST(RicciClaim, CertifiedAtChosenT0) {
    const auto& B = cap2().neck;
    const auto& R = B.ricci_claim;
    EXPECT_TRUE(R.pass());
    EXPECT_GT(R.ric_T, 0.0);
    EXPECT_GT(R.ric_X, 0.0);
    EXPECT_GT(R.ric_S, 0.0);
    EXPECT_GT(R.ric_TX_eig, 0.0);
    EXPECT_GE(R.grid_t, 512);
    EXPECT_EQ(R.grid_x, 257);
    // endpoint values of phi at the eta-maximum
    EXPECT_NEAR(R.phi_t0, -2 * std::log(0.0125), 1e-10);
    EXPECT_GE(R.phi_tinf, 2.0);
    EXPECT_GE(R.endpoint_margin, -1e-12);
    // the same t0 halved fails
    const auto& in = cap2().input;
    const auto half = make_neck_solution(in, B.sol.eps_n, B.sol.delta_n, B.sol.t0 / 2);
    EXPECT_FALSE(ricci_claim_verify(in, half).pass());
}

TEST(BoundaryClaim, BoundaryIdentities) {
    const auto& R = cap2().neck.boundary_claim;
    EXPECT_TRUE(R.pass());
    EXPECT_DOUBLE_EQ(R.inner_II_X, -1.0);
    EXPECT_DOUBLE_EQ(R.inner_II_S, -1.0);
    EXPECT_LT(R.inner_residual, 1e-10);
    EXPECT_LT(R.inner_radius_residual, 1e-10);
    EXPECT_LT(R.outer_profile_residual, 1e-8);
    EXPECT_GT(R.outer_II_min, 1.0);
    const double lead = std::pow(cap2().input.rho / cap2().input.r, cap2().neck.sol.eps_n);
    EXPECT_NEAR(R.outer_leading, lead, 1e-9 * lead);
    EXPECT_NEAR(R.outer_II_min / lead, 1.0, 10 / cap2().neck.sol.s_inf());
}

TEST(Cap, RhoChoice) {
    EXPECT_DOUBLE_EQ(choose_cap_rho(2), 0.0125);
    const double rhs = cap_rho_rhs(2);
    EXPECT_NEAR(rhs, 200 / std::pow(std::tanh(kPi / 12), 2), 1e-9);
    const double bound = 1 / std::sqrt(rhs + 64);
    EXPECT_NEAR(bound, 0.0180, 5e-4);
    EXPECT_LE(choose_cap_rho(2), bound);
    EXPECT_GT(2 * choose_cap_rho(2), bound);
    for (int n = 2; n <= 8; ++n) {
        const double rho = choose_cap_rho(n);
        EXPECT_GE((1 - 64 * rho * rho) / (rho * rho), cap_rho_rhs(n));
    }
    EXPECT_THROW(choose_cap_rho(1), DomainError);
}

TEST(Cap, ConstantsFromNeck) {
    const auto& C = cap2().cap;
    EXPECT_EQ(C.n, 2);
    EXPECT_DOUBLE_EQ(C.r, std::pow(0.0125, 4));
    EXPECT_NEAR(log(C.k * C.c0), std::log(0.5), 1e-12);
    EXPECT_NEAR(log(C.k * LogScalar(std::tanh(kPi / 12) / 2)), log(LogScalar(4.0) * C.lam), 1e-12);
    // vbar(t0) = sin(pi/6)/k = c0
    EXPECT_NEAR(log(LogScalar(std::sin(kPi / 6)) / C.k), log(C.c0), 1e-12);
    EXPECT_GT(log(C.lam), 100.0);
}
