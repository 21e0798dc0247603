#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace incidence {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    double f_tol = 1e-8;        // stop when the best value drops below this
    double simplex_tol = 1e-7;  // ... or the simplex diameter does
    int max_iter = 600;
    double initial_step = 0.1;  // relative to the box width per coordinate
};

// Standard downhill simplex (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5). The objective is responsible for penalizing points it
// dislikes; this routine is box-agnostic.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& step,
                                    const NelderMeadOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        double v = f(x);
        return std::isfinite(v) ? v : 1e300;
    };

    std::vector<std::vector<double>> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 0; i < n; ++i) xs[i + 1][i] += (step[i] != 0.0 ? step[i] : 1e-8);
    for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

    NelderMeadResult res;
    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        // order vertices
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<std::vector<double>> xs2(n + 1);
        std::vector<double> fs2(n + 1);
        for (int i = 0; i <= n; ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs.swap(xs2);
        fs.swap(fs2);

        double diam = 0;
        for (int i = 1; i <= n; ++i)
            for (int j = 0; j < n; ++j) diam = std::max(diam, std::fabs(xs[i][j] - xs[0][j]));
        if (fs[0] < opt.f_tol || diam < opt.simplex_tol) {
            res.converged = true;
            break;
        }

        std::vector<double> c(n, 0.0);  // centroid of all but the worst
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c[j] += xs[i][j] / n;

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (int j = 0; j < n; ++j) p[j] = c[j] + t * (c[j] - xs[n][j]);
            return p;
        };

        std::vector<double> xr = blend(1.0);
        double fr = eval(xr);
        if (fr < fs[0]) {
            std::vector<double> xe = blend(2.0);
            double fe = eval(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            bool outside = fr < fs[n];
            std::vector<double> xc = outside ? blend(0.5) : blend(-0.5);
            double fc = eval(xc);
            if (fc < (outside ? fr : fs[n])) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    for (int j = 0; j < n; ++j) xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
                    fs[i] = eval(xs[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (fs[i] < fs[best]) best = i;
    res.x = xs[best];
    res.fx = fs[best];
    res.iterations = iter;
    res.evaluations = evals;
    return res;
}

// Latin hypercube draw: `count` points in [0,1)^dim, one per stratum along
// each axis. Deterministic given the engine state.
inline std::vector<std::vector<double>> latin_hypercube(int count, int dim,
                                                        std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
    for (int d = 0; d < dim; ++d) {
        std::vector<int> strata(count);
        for (int i = 0; i < count; ++i) strata[i] = i;
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int i = 0; i < count; ++i) pts[i][d] = (strata[i] + u(rng)) / count;
    }
    return pts;
}

}  // namespace incidence
