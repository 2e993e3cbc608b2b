#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "warpcert/boundary.hpp"

using namespace warpcert;

namespace {
constexpr double kPi = std::numbers::pi;

using V3 = std::array<double, 3>;
double dot(const V3& a, const V3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// embedding of (t offset, x) on the unit sphere, center at colatitude a
V3 embed(double L, double a, const BoundaryPoint& b) {
    const double c = a + L * b.t, x = b.x.value();
    return {std::sin(c) * std::cos(x), std::sin(c) * std::sin(x), std::cos(c)};
}

double polygon_length(double L, double radius, int n, double tilt = 0.0) {
    const auto pts = geodesic_circle(LogScalar(L), radius, n, LogScalar(tilt));
    const double a = kPi / 2 - tilt;
    double len = 0;
    for (int k = 0; k < n; ++k) {
        const V3 p = embed(L, a, pts[static_cast<std::size_t>(k)]);
        const V3 q = embed(L, a, pts[static_cast<std::size_t>((k + 1) % n)]);
        len += std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) + (p[2] - q[2]) * (p[2] - q[2]));
    }
    return len / L;
}

struct Default {
    PeriodTable table;
    EpsSchedule sch;
};

const Default& dflt() {
    static const Default d = [] {
        const auto s1 = select_t1(0.25, 0.9, 0.85, 3);
        Default out;
        out.table = build_periods({0.25, 0.9, 0.85, s1.t1, 3});
        out.sch = build_eps_schedule(out.table, 1e-4);
        out.table = with_schedule(out.table, out.sch);
        return out;
    }();
    return d;
}
} // namespace

TEST(GeodesicCircle, CircumferenceExample) {
    const double exact = 2 * kPi / 0.1 * std::sin(0.08);
    EXPECT_NEAR(polygon_length(0.1, 0.8, 8192), exact, 1e-6);
}

TEST(GeodesicCircle, CircumferenceErrorIsSecondOrder) {
    const double exact = 2 * kPi / 0.3 * std::sin(0.3 * 1.2);
    double prev = 0;
    for (int n : {64, 128, 256, 512}) {
        const double err = std::fabs(polygon_length(0.3, 1.2, n, 0.2) - exact);
        if (prev > 0) {
            EXPECT_NEAR(prev / err, 4.0, 0.05);
        }
        prev = err;
    }
}

TEST(GeodesicCircle, PointsAtTheRightDistance) {
    const double L = 0.5, tilt = 0.3, a = kPi / 2 - tilt;
    const V3 O{std::sin(a), 0.0, std::cos(a)};
    for (const auto& b : geodesic_circle(LogScalar(L), 0.8, 97, LogScalar(tilt))) {
        const V3 p = embed(L, a, b);
        const V3 cr{O[1] * p[2] - O[2] * p[1], O[2] * p[0] - O[0] * p[2], O[0] * p[1] - O[1] * p[0]};
        EXPECT_NEAR(std::atan2(std::sqrt(dot(cr, cr)), dot(O, p)) / L, 0.8, 1e-13);
    }
}

TEST(GeodesicCircle, NormalIsOutwardRadial) {
    const double L = 0.5, tilt = 0.3, a = kPi / 2 - tilt;
    const V3 O{std::sin(a), 0.0, std::cos(a)};
    for (const auto& b : geodesic_circle(LogScalar(L), 0.8, 61, LogScalar(tilt))) {
        const V3 p = embed(L, a, b);
        // tangent direction away from O: -(O - (O.p) p)
        const double op = dot(O, p);
        V3 n{op * p[0] - O[0], op * p[1] - O[1], op * p[2] - O[2]};
        const double nn = std::sqrt(dot(n, n));
        for (auto& v : n) v /= nn;
        const double c = a + L * b.t, x = b.x.value();
        const V3 T{std::cos(c) * std::cos(x), std::cos(c) * std::sin(x), -std::sin(c)};
        const V3 X{-std::sin(x), std::cos(x), 0.0};
        EXPECT_NEAR(std::cos(b.xi), dot(n, T), 1e-12);
        EXPECT_NEAR(std::sin(b.xi), dot(n, X), 1e-12);
        EXPECT_NEAR(b.cos_xi, std::cos(b.xi), 1e-15);
        EXPECT_NEAR(b.sin_xi, std::sin(b.xi), 1e-15);
    }
}

TEST(GeodesicCircle, StartPointIsPureT) {
    const auto pts = geodesic_circle(LogScalar(0.1), 0.8, 16, LogScalar(0.05));
    EXPECT_EQ(pts[0].xi, 0.0);
    EXPECT_NEAR(pts[0].t, 0.8, 1e-14);
    EXPECT_EQ(pts[0].x.sign, 0);
}

TEST(GeodesicCircle, FrameAngleWindsOnce) {
    const auto pts = geodesic_circle(LogScalar(0.7), 0.8, 400, LogScalar(0.2));
    double total = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        double d = pts[(k + 1) % pts.size()].xi - pts[k].xi;
        if (d > kPi) d -= 2 * kPi;
        if (d < -kPi) d += 2 * kPi;
        EXPECT_LT(std::fabs(d), 0.1);
        total += d;
        EXPECT_LE(std::fabs(pts[k].xi), kPi);
    }
    EXPECT_NEAR(total, 2 * kPi, 1e-12);
}

TEST(GeodesicCircle, FlatLimitAgreesWithSphericalPath) {
    // 2e-100 still takes the spherical path; the flat formula must agree to rounding
    const double L = 2e-100;
    const auto pts = geodesic_circle(LogScalar(L), 0.8, 24, LogScalar(3e-100));
    for (const auto& b : pts) {
        EXPECT_NEAR(b.t, 0.8 * std::cos(b.arc_param), 1e-13);
        EXPECT_NEAR(std::remainder(b.xi - b.arc_param, 2 * kPi), 0.0, 1e-13);
        EXPECT_NEAR(b.x.value() / L, 0.8 * std::sin(b.arc_param), 1e-13);
    }
    const LogScalar tiny = LogScalar::from_log(-5000);
    for (const auto& b : geodesic_circle(tiny, 0.8, 24, tiny)) {
        EXPECT_NEAR(b.t, 0.8 * std::cos(b.arc_param), 1e-15);
        if (b.x.sign != 0) {
            EXPECT_NEAR(b.x.logmag + 5000, std::log(std::fabs(0.8 * std::sin(b.arc_param))), 1e-9);
        }
    }
}

TEST(GeodesicCircle, RejectsOversizedRadius) {
    EXPECT_THROW(geodesic_circle(LogScalar(1.0), 1.6, 16), DomainError);
    EXPECT_THROW(geodesic_circle(LogScalar(1.0), 0.5, 2), DomainError);
    EXPECT_THROW(geodesic_circle(LogScalar(0.1), -1.0, 16), DomainError);
}

TEST(BallBoundary, HExample) {
    Period P;
    P.Lambda = LogScalar(0.1);
    const double h0 = ball_h0(P);
    EXPECT_NEAR(h0, 0.1 / std::tan(0.08), 1e-14);
    // h = 0.1 cot(0.08) + 3e-4 = 1.24763...
    EXPECT_NEAR(h0 + 3e-4, 1.2476321948616, 1e-12);
    EXPECT_GT(h0 + 3e-4, 0.5);
    EXPECT_LT(h0 + 3e-4, 2.0);
}

TEST(BallBoundary, RoundModelGivesExactlyH0) {
    // with f = sin x the direct formula collapses to Lambda cot(4 Lambda/5)
    const auto& d = dflt();
    const Period& P = d.table.at(1);
    const double h0 = ball_h0(P);
    for (const auto& b : geodesic_circle(P.Lambda, 0.8, 72, P.theta_c - P.Lambda)) {
        if (b.x.sign == 0) continue;
        const LogJet u = u_eval(d.table, {1, Phase::Arc, LogScalar(1.0 + b.t)});
        const LogScalar cot_x = LogScalar(1.0 / std::tan(b.x.value()));
        const LogScalar II = u.d1 / u.value * LogScalar(b.cos_xi) + cot_x / u.value * LogScalar(b.sin_xi);
        EXPECT_NEAR(II.value() / h0, 1.0, 1e-11);
    }
}

TEST(BallBoundary, AllPeriodsCertified) {
    const auto& d = dflt();
    for (int i = 1; i <= 3; ++i) {
        const auto rep = ball_boundary_forms(d.table, d.sch, i, 0.04, 720);
        EXPECT_TRUE(rep.pass()) << "period " << i << " upper " << rep.upper_margin << " direct " << rep.direct_margin
                                << " perelman " << rep.perelman_margin;
        EXPECT_GE(rep.lower_margin, 0.0);
        EXPECT_LE(rep.upper_margin, 3.0);
        EXPECT_LT(rep.route_gap, 1e-12);
        EXPECT_GT(rep.h, 0.5);
        EXPECT_LT(rep.h, 2.0);
        EXPECT_EQ(rep.points.size(), 720u);
        EXPECT_GT(rep.separation_margin, 0.0);
    }
}

TEST(BallBoundary, ChainDeviationMatchesProfileOracle) {
    // a synthetic period with u < 1/2, so that coarse eps (plain double jets of f) still
    // satisfies the support condition
    PeriodTable table;
    table.params.i_max = 1;
    Period P;
    P.t = LogScalar(0.0);
    P.Lambda = LogScalar(1.2);
    P.theta_c = LogScalar(1.5);
    table.periods = {P, P};
    EpsSchedule sch;
    sch.log_eps = {std::log(0.05), std::log(0.04)};
    const auto rep = ball_boundary_forms(table, sch, 1, 0.04, 240);
    const AngularSolution s1 = solve_angular_params(sch.at(1), 0.04);
    const AngularSolution s2 = solve_angular_params(sch.at(2), 0.04);
    int checked = 0;
    for (const auto& p : rep.points) {
        const double x = std::fabs(p.point.x.value());
        if (x == 0) continue;
        const Jet f = f_eval(p.point.t < 0 ? s1 : s2, x);
        const LogJet u = u_eval(table, {1, Phase::Arc, LogScalar(1.0 + p.point.t)});
        const double II = (u.d1 / u.value).value() * p.point.cos_xi +
                          f.d1 / f.value / u.value.value() * std::fabs(p.point.sin_xi);
        EXPECT_NEAR(p.II_SS_chain, II, 1e-12 * rep.h0);
        EXPECT_NEAR(p.II_SS_direct, II, 1e-12 * rep.h0);
        if (!p.round_region) ++checked;
    }
    // some samples must reach the deformed pieces for the oracle to mean anything
    EXPECT_GT(checked, 10);
    EXPECT_GT(rep.upper_margin, 0.0);
}

TEST(BaseSlice, InverseT1AndMargin) {
    const auto& d = dflt();
    const auto sol = solve_angular_params(d.sch.at(1), 0.04);
    const auto rep = base_slice_forms(d.table, sol);
    EXPECT_TRUE(rep.pass());
    EXPECT_NEAR(rep.forms.at("X"), 1.0, 1e-12);
    EXPECT_NEAR(rep.forms.at("Sigma"), 1.0, 1e-12);
    EXPECT_NEAR(log(rep.forms.unit), -log(d.table.at(1).t), 1e-12);
    EXPECT_GT(rep.margin, 0.0);
    EXPECT_GE(rep.eta_margin, 0.0);
}

TEST(CapBoundary, IdentitiesAndRadii) {
    for (int n : {2, 3, 5}) {
        const LogScalar lam = LogScalar::from_log(362.6);
        const double rho = 0.0125, h = 1.25;
        const CapParams cap = make_cap_params(n, rho, lam);
        const auto cb = cap_boundary_forms(cap, h);
        EXPECT_NEAR(cb.forms.at("Sigma"), 4.0, 1e-12);
        EXPECT_NEAR(cb.forms.at("Theta"), std::sqrt(3.0) * 8 / std::tanh(kPi / 12), 1e-10);
        EXPECT_LT(cb.identity_residual, 1e-12);
        EXPECT_GT(cb.forms.at("Theta"), 0.0);
        const auto pb = product_boundary_forms(h, lam, rho, cap.c0);
        EXPECT_LT(boundary_isometry_residual(cb, pb), 1e-9);
    }
}

TEST(ProductBoundary, Examples) {
    const auto p = product_boundary_forms(1.0, LogScalar(0.05));
    EXPECT_NEAR(p.forms.at("Sigma") * p.forms.unit.value(), -0.05, 1e-15);
    EXPECT_EQ(p.forms.at("Theta"), 0.0);
    EXPECT_EQ(product_boundary_forms(2.0, LogScalar(0.05)).forms.at("Sigma"), -2.0);
    EXPECT_EQ(product_boundary_forms(0.5, LogScalar(0.05)).forms.at("Sigma"), -0.5);
    EXPECT_THROW(product_boundary_forms(2.5, LogScalar(0.05)), DomainError);
    EXPECT_THROW(product_boundary_forms(1.0, LogScalar(0.0)), DomainError);
}

TEST(Gluing, CapAgainstProduct) {
    const LogScalar lam = LogScalar::from_log(362.6);
    const CapParams cap = make_cap_params(2, 0.0125, lam);
    for (double h : {0.5, 1.25, 2.0}) {
        const auto cb = cap_boundary_forms(cap, h);
        const auto pb = product_boundary_forms(h, lam, 0.0125, cap.c0);
        const auto g = gluing_check(pb.forms, cb.forms, boundary_isometry_residual(cb, pb));
        EXPECT_TRUE(g.pass());
        EXPECT_NEAR(g.margins[0].second, 4 - h, 1e-12);
        EXPECT_NEAR(g.margins[1].second, cb.forms.at("Theta"), 0.0);
    }
}

TEST(Gluing, SymmetricIsBoundaryCase) {
    SecondFundamentalForms a, b;
    a.entries = {{"Sigma", 1.5}, {"Theta", 0.3}};
    b.entries = {{"Sigma", -1.5}, {"Theta", -0.3}};
    const auto g = gluing_check(b, a);
    EXPECT_EQ(g.margin, 0.0);
    EXPECT_FALSE(g.pass());
}

TEST(Gluing, ContractErrors) {
    SecondFundamentalForms a, b;
    a.entries = {{"Sigma", 1.0}, {"Theta", 1.0}};
    b.entries = {{"Theta", 1.0}, {"Sigma", 1.0}};
    EXPECT_THROW(gluing_check(a, b), DomainError);
    b.entries.pop_back();
    EXPECT_THROW(gluing_check(a, b), DomainError);
    b = a;
    b.unit = LogScalar(2.0);
    EXPECT_THROW(gluing_check(a, b), DomainError);
    a.unit = LogScalar(1.0);
    EXPECT_GT(gluing_check(a, a).margin, 0.0);
}
