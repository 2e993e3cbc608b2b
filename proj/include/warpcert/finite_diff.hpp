#pragma once

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace warpcert {

struct FdResult {
    double d1;
    double d2;
};

inline double default_fd_step(double t) {
    return std::pow(std::numeric_limits<double>::epsilon(), 0.2) * (std::fabs(t) + 1.0);
}

// Central differences at h and 2h, one Richardson level.
template <class F>
FdResult fd_derivatives(F&& f, double t, double step) {
    if (!(step > 0)) throw DomainError("fd_derivatives: step must be positive");
    auto eval = [&](double x) {
        const double v = f(x);
        if (!std::isfinite(v)) throw EvaluationError("fd_derivatives: non-finite value", x);
        return v;
    };
    const double f0 = eval(t);
    const double p1 = eval(t + step), m1 = eval(t - step);
    const double p2 = eval(t + 2 * step), m2 = eval(t - 2 * step);
    const double d1h = (p1 - m1) / (2 * step);
    const double d1H = (p2 - m2) / (4 * step);
    const double d2h = (p1 - 2 * f0 + m1) / (step * step);
    const double d2H = (p2 - 2 * f0 + m2) / (4 * step * step);
    return {(4 * d1h - d1H) / 3, (4 * d2h - d2H) / 3};
}

template <class F>
FdResult fd_derivatives(F&& f, double t) {
    return fd_derivatives(f, t, default_fd_step(t));
}

} // namespace warpcert
