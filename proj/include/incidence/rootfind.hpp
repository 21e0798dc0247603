#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "incidence/errors.hpp"

namespace incidence {

struct RootOptions {
    double tol = 1e-10;    // absolute tolerance on x (we solve in log space, so this is relative)
    int max_iter = 200;
    int max_expand = 200;  // bracket-expansion doublings
};

// Illinois-damped false position on a bracketing interval: superlinear on
// smooth monotone functions, with a guaranteed shrinking bracket. Requires
// f(lo), f(hi) with opposite signs.
inline double solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                              double flo, double fhi, const RootOptions& opt = {}) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) {
        std::ostringstream d;
        d << "no sign change: f(" << lo << ")=" << flo << ", f(" << hi << ")=" << fhi;
        throw SolverError("root not bracketed", d.str());
    }
    int side = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        if (hi - lo < opt.tol) return 0.5 * (lo + hi);
        double x = (flo * hi - fhi * lo) / (flo - fhi);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        double fx = f(x);
        if (fx == 0.0) return x;
        if (!std::isfinite(fx)) {
            std::ostringstream d;
            d << "non-finite f at x=" << x;
            throw SolverError("objective not finite inside bracket", d.str());
        }
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
            if (side == +1) flo *= 0.5;
            side = +1;
        } else {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        }
    }
    return 0.5 * (lo + hi);
}

// Root of an increasing function of x, bracket found by doubling steps away
// from x0. `step` is the initial half-width.
inline double solve_increasing(const std::function<double(double)>& f, double x0,
                               double step = 1.0, const RootOptions& opt = {}) {
    double f0 = f(x0);
    if (f0 == 0.0) return x0;
    double lo = x0, hi = x0, flo = f0, fhi = f0;
    if (f0 > 0) {  // walk left
        for (int k = 0; k < opt.max_expand && flo > 0; ++k) {
            hi = lo;
            fhi = flo;
            lo -= step;
            flo = f(lo);
            step *= 2;
        }
        if (flo > 0) throw SolverError("bracket expansion failed (left)", "x reached " + std::to_string(lo));
    } else {  // walk right
        for (int k = 0; k < opt.max_expand && fhi < 0; ++k) {
            lo = hi;
            flo = fhi;
            hi += step;
            fhi = f(hi);
            step *= 2;
        }
        if (fhi < 0) throw SolverError("bracket expansion failed (right)", "x reached " + std::to_string(hi));
    }
    return solve_bracketed(f, lo, hi, flo, fhi, opt);
}

// Same machinery for a decreasing function.
inline double solve_decreasing(const std::function<double(double)>& f, double x0,
                               double step = 1.0, const RootOptions& opt = {}) {
    return solve_increasing([&f](double x) { return -f(x); }, x0, step, opt);
}

// Root of a monotone function on a fixed interval (a, b), approaching the
// endpoints geometrically. Returns NaN if there is no sign change, which
// callers treat as "no solution in range" rather than an error.
inline double solve_on_interval(const std::function<double(double)>& f, double a, double b,
                                const RootOptions& opt = {}) {
    double span = b - a;
    double lo = a + 1e-12 * span, hi = b - 1e-12 * span;
    double flo = f(lo), fhi = f(hi);
    // If an endpoint evaluation blew up, pull inward until it is finite.
    for (int k = 0; k < 60 && !std::isfinite(flo); ++k) {
        lo = a + (lo - a) * 4.0;
        if (lo >= hi) return std::numeric_limits<double>::quiet_NaN();
        flo = f(lo);
    }
    for (int k = 0; k < 60 && !std::isfinite(fhi); ++k) {
        hi = b - (b - hi) * 4.0;
        if (hi <= lo) return std::numeric_limits<double>::quiet_NaN();
        fhi = f(hi);
    }
    if (!std::isfinite(flo) || !std::isfinite(fhi)) return std::numeric_limits<double>::quiet_NaN();
    if ((flo > 0) == (fhi > 0)) return std::numeric_limits<double>::quiet_NaN();
    return solve_bracketed(f, lo, hi, flo, fhi, opt);
}

}  // namespace incidence
