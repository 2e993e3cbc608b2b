#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "warpcert/finite_diff.hpp"
#include "warpcert/jet.hpp"
#include "warpcert/log_scalar.hpp"

using namespace warpcert;

TEST(FiniteDiff, Cubic) {
    auto r = fd_derivatives([](double t) { return t * t * t; }, 2.0, 1e-3);
    EXPECT_NEAR(r.d1, 12.0, 1e-8);
    EXPECT_NEAR(r.d2, 12.0, 1e-8);
}

TEST(FiniteDiff, SineAtZero) {
    auto r = fd_derivatives([](double t) { return std::sin(t); }, 0.0);
    EXPECT_NEAR(r.d1, 1.0, 1e-8);
    EXPECT_NEAR(r.d2, 0.0, 1e-8);
}

TEST(FiniteDiff, ExpAgainstJet) {
    auto r = fd_derivatives([](double t) { return std::exp(t); }, 1.0);
    Jet j = exp(Jet::variable(1.0));
    EXPECT_NEAR(r.d1, j.d1, 1e-8);
    EXPECT_NEAR(r.d2, j.d2, 1e-7);
    EXPECT_DOUBLE_EQ(j.d1, std::exp(1.0));
}

TEST(FiniteDiff, NonFiniteNamesAbscissa) {
    try {
        fd_derivatives([](double t) { return t > 1.0005 ? std::log(-1.0) : t; }, 1.0, 1e-3);
        FAIL();
    } catch (const EvaluationError& e) {
        EXPECT_NEAR(e.abscissa, 1.001, 1e-12);
    }
    EXPECT_THROW(fd_derivatives([](double t) { return t; }, 0.0, 0.0), DomainError);
}

TEST(Jet, LiftRules) {
    Jet c = Jet::constant(3.0), v = Jet::variable(3.0);
    EXPECT_EQ(c.d1, 0.0);
    EXPECT_EQ(c.d2, 0.0);
    EXPECT_EQ(v.d1, 1.0);
    EXPECT_EQ(v.d2, 0.0);
}

TEST(Jet, ChainRuleComposite) {
    // h = sin(x^2) at x = 0.7
    const double x = 0.7;
    Jet h = sin(Jet::variable(x) * Jet::variable(x));
    EXPECT_NEAR(h.d1, 2 * x * std::cos(x * x), 1e-15);
    EXPECT_NEAR(h.d2, 2 * std::cos(x * x) - 4 * x * x * std::sin(x * x), 1e-14);
}

TEST(Jet, QuotientAndPow) {
    const double x = 1.3;
    Jet X = Jet::variable(x);
    Jet q = (X * X + 1.0) / X;
    EXPECT_NEAR(q.d1, 1 - 1 / (x * x), 1e-14);
    EXPECT_NEAR(q.d2, 2 / (x * x * x), 1e-14);
    Jet p = pow(X, 2.5);
    EXPECT_NEAR(p.d2, 2.5 * 1.5 * std::pow(x, 0.5), 1e-13);
}

// every elementary jet against the fd oracle at random abscissae
TEST(Jet, ElementaryFunctionsMatchFd) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.1, 1.3);
    using Fn = Jet (*)(const Jet&);
    const Fn fns[] = {
        [](const Jet& x) { return exp(x); },  [](const Jet& x) { return log(x); },
        [](const Jet& x) { return sin(x); },  [](const Jet& x) { return cos(x); },
        [](const Jet& x) { return tan(x); },  [](const Jet& x) { return sinh(x); },
        [](const Jet& x) { return cosh(x); }, [](const Jet& x) { return tanh(x); },
        [](const Jet& x) { return atan(x); }, [](const Jet& x) { return sqrt(x); },
        [](const Jet& x) { return pow(x, -1.7); }};
    for (auto fn : fns) {
        for (int k = 0; k < 100; ++k) {
            const double t = U(rng);
            Jet j = fn(Jet::variable(t));
            auto r = fd_derivatives([&](double s) { return fn(Jet::constant(s)).value; }, t);
            EXPECT_LT(std::fabs(r.d1 - j.d1), 1e-6 * (std::fabs(j.d1) + 1e-3));
            EXPECT_LT(std::fabs(r.d2 - j.d2), 1e-6 * (std::fabs(j.d2) + 1e-3));
        }
    }
}

TEST(LogScalar, PowExamples) {
    LogScalar a = LogScalar::from_log(std::log(4.0));
    EXPECT_NEAR(pow(a, 0.5).logmag, std::log(2.0), 1e-15);
    LogScalar big = pow(LogScalar::from_log(100.0), 10.0);
    EXPECT_EQ(big.logmag, 1000.0);
    EXPECT_EQ(big.sign, 1);
    EXPECT_TRUE(std::isinf(big.value()));
    EXPECT_NEAR(logscalar_pow(LogScalar(100.0), 1 / 0.25).logmag, 4 * std::log(100.0), 1e-13);
    EXPECT_THROW(pow(LogScalar(-1.0), 2.0), DomainError);
    EXPECT_THROW(pow(LogScalar(0.0), 2.0), DomainError);
}

TEST(LogScalar, RoundTripAndSigns) {
    // round trip is exact up to |ln v| ulps of the stored logarithm
    for (double v : {3.5, -2.25, 1e-30, 1.0, -7e300, 1e-300})
        EXPECT_NEAR(LogScalar(v).value(), v, 4e-16 * (1 + std::fabs(std::log(std::fabs(v)))) * std::fabs(v));
    EXPECT_EQ(LogScalar(0.0).value(), 0.0);
    EXPECT_NEAR((LogScalar(5.0) - LogScalar(7.0)).value(), -2.0, 1e-14);
    EXPECT_NEAR((LogScalar(-5.0) + LogScalar(7.0)).value(), 2.0, 1e-14);
    EXPECT_TRUE((LogScalar(3.0) - LogScalar(3.0)).is_zero());
    EXPECT_TRUE(LogScalar(-3.0) < LogScalar(-2.0));
    EXPECT_TRUE(LogScalar(0.0) < LogScalar(1e-300));
    EXPECT_TRUE(LogScalar::from_log(800) > LogScalar::from_log(799));
    // near-cancellation keeps relative accuracy of the difference
    LogScalar d = LogScalar(1.0 + 1e-9) - LogScalar(1.0);
    EXPECT_NEAR(d.value(), 1e-9, 1e-15);
}

TEST(LogScalar, AddBeyondRange) {
    LogScalar a = LogScalar::from_log(1000.0), b = LogScalar::from_log(1000.0 + std::log(3.0));
    EXPECT_NEAR((a + b).logmag, 1000.0 + std::log(4.0), 1e-12);
    EXPECT_NEAR((b - a).logmag, 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogScalar, MultiplicationAssociativeCommutative) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> L(-700, 700);
    for (int k = 0; k < 1000; ++k) {
        LogScalar a = LogScalar::from_log(L(rng)), b = LogScalar::from_log(L(rng), -1), c = LogScalar::from_log(L(rng));
        EXPECT_NEAR(((a * b) * c).logmag, (a * (b * c)).logmag, 1e-12);
        EXPECT_NEAR((a * b).logmag, (b * a).logmag, 1e-12);
        EXPECT_EQ(((a * b) * c).sign, -1);
    }
}

TEST(LogJet, MatchesDoubleJet) {
    Jet x = Jet::variable(2.0);
    Jet d = pow(x * x + 1.0, 1.5) / x;
    LogJet X = LogJet::variable(LogScalar(2.0));
    LogJet l = pow(X * X + LogScalar(1.0), 1.5) / X;
    EXPECT_NEAR(l.value.value(), d.value, 1e-13);
    EXPECT_NEAR(l.d1.value(), d.d1, 1e-13);
    EXPECT_NEAR(l.d2.value(), d.d2, 1e-13);
    Jet lg = log(l);
    EXPECT_NEAR(lg.d1, d.d1 / d.value, 1e-13);
}
