#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "incidence/economy.hpp"
#include "incidence/errors.hpp"
#include "incidence/report.hpp"

using namespace incidence;

namespace {

EconomyParams random_params(std::mt19937_64& rng, bool with_tax = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EconomyParams p;
    p.s_L = 0.2 + 0.6 * u(rng);
    p.s_K = 1.0 - p.s_L;
    p.rho = -2.0 + 2.9 * u(rng);
    p.eps = 0.5 + 49.5 * u(rng);
    p.eta = 1.1 + 3.9 * u(rng);
    p.theta = with_tax ? 1.0 + 0.5 * u(rng) : 1.0;
    p.tau_rev = with_tax ? 0.2 * u(rng) : 0.0;
    return p;
}

double total_cost(double L, double Q, const EconomyParams& p) {
    // K eliminated through the isoquant; NaN when (L, Q) is infeasible.
    double K;
    if (std::fabs(p.rho) < 1e-6) {
        K = std::exp((std::log(Q) - p.s_L * std::log(L)) / p.s_K);
    } else {
        double t = std::pow(Q, p.rho) - p.s_L * std::pow(L, p.rho);
        if (t <= 0) return std::numeric_limits<double>::quiet_NaN();
        K = std::pow(t / p.s_K, 1.0 / p.rho);
    }
    return p.theta * p.w0 * std::pow(L, 1.0 + 1.0 / p.eps) + p.r * K;
}

// Brute-force cost oracle: coarse grid over log L, then one refinement pass
// between the neighbors of the best coarse point. Never touches the solver.
double grid_cost_oracle(double Q, const EconomyParams& p, int n = 2000) {
    double lo = std::log(Q) - 8.0, hi = std::log(Q) + 8.0;
    for (int pass = 0; pass < 2; ++pass) {
        double best = std::numeric_limits<double>::infinity();
        int best_i = -1;
        for (int i = 0; i <= n; ++i) {
            double logL = lo + (hi - lo) * i / n;
            double c = total_cost(std::exp(logL), Q, p);
            if (std::isfinite(c) && c < best) {
                best = c;
                best_i = i;
            }
        }
        REQUIRE(best_i >= 0);
        double step = (hi - lo) / n;
        double c_lo = lo + step * (best_i - 1), c_hi = lo + step * (best_i + 1);
        lo = c_lo;
        hi = c_hi;
        if (pass == 1) return best;
    }
    return 0;
}

double grid_profit_oracle(const EconomyParams& p, int n = 2000) {
    FirmEquilibrium ref = profit_maximize(p);  // only to center the window
    double lo = std::log(ref.Q) - 3.0, hi = std::log(ref.Q) + 3.0;
    double best = 0;
    for (int pass = 0; pass < 2; ++pass) {
        best = -std::numeric_limits<double>::infinity();
        int best_i = -1;
        for (int i = 0; i <= n; ++i) {
            double Q = std::exp(lo + (hi - lo) * i / n);
            auto cm = cost_minimize(Q, p);
            double price = p.A * std::pow(Q, -1.0 / p.eta);
            double prof = (1.0 - p.tau_rev) * price * Q - cm.cost;
            if (prof > best) {
                best = prof;
                best_i = i;
            }
        }
        REQUIRE(best_i >= 0);
        double step = (hi - lo) / n;
        double c_lo = lo + step * (best_i - 1), c_hi = lo + step * (best_i + 1);
        lo = c_lo;
        hi = c_hi;
    }
    return best;
}

}  // namespace

TEST_CASE("labor supply wage") {
    CHECK(labor_supply_wage(1.0, 1.0, 2.78) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(labor_supply_wage(2.0, 1.0, 1e9) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(labor_supply_wage(2.0, 1.0, 2.78) ==
          doctest::Approx(std::pow(2.0, 1.0 / 2.78)).epsilon(1e-14));
    CHECK(labor_supply_wage(2.0, 1.0, 2.78) == doctest::Approx(1.2832).epsilon(1e-4));
    // strictly increasing
    CHECK(labor_supply_wage(3.0, 1.0, 2.78) > labor_supply_wage(2.0, 1.0, 2.78));
    CHECK_THROWS_AS(labor_supply_wage(0.0, 1.0, 2.0), ConfigError);
    CHECK_THROWS_AS(labor_supply_wage(1.0, -1.0, 2.0), ConfigError);
}

TEST_CASE("ces output") {
    CHECK(ces_output(1, 1, 0.5, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ces_output(4, 1, 0.5, 0.5, 1e-9) == doctest::Approx(2.0).epsilon(1e-7));
    // rho = -1 against a near-limit evaluation of the same aggregate
    double direct = ces_output(2, 3, 0.3, 0.7, -1.0);
    double harmonic = 1.0 / (0.3 / 2.0 + 0.7 / 3.0);
    CHECK(direct == doctest::Approx(harmonic).epsilon(1e-12));
    CHECK(direct == doctest::Approx(ces_output(2, 3, 0.3, 0.7, -1.0 + 1e-9)).epsilon(1e-7));
    CHECK_THROWS_AS(ces_output(1, 1, 0.5, 0.5, 1.0), ConfigError);
}

TEST_CASE("ces constant returns to scale") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int i = 0; i < 50; ++i) {
        double L = u(rng), K = u(rng), c = u(rng);
        double sL = 0.2 + 0.12 * (i % 5);
        double rho = -2.0 + 0.28 * (i % 10);
        double lhs = ces_output(c * L, c * K, sL, 1 - sL, rho);
        double rhs = c * ces_output(L, K, sL, 1 - sL, rho);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("markdown") {
    CHECK(markdown(2.78) == doctest::Approx(1.0 / 2.78).epsilon(1e-15));
    CHECK(markdown(2.78) == doctest::Approx(0.3597).epsilon(2e-4));
    CHECK(markdown(1e12) == doctest::Approx(0.0).epsilon(1e-11));
    CHECK(markdown(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(markdown(0.0), ConfigError);
}

TEST_CASE("cost minimize: symmetric calibration returns L = K = Q") {
    EconomyParams p;
    p.s_L = p.s_K = 0.5;
    p.rho = 0.4;
    p.eps = 2.78;
    p.theta = 1.0;
    double Q = 2.0;
    p.w0 = p.r / ((1.0 + 1.0 / p.eps) * std::pow(Q, 1.0 / p.eps));
    auto cm = cost_minimize(Q, p);
    CHECK(cm.L == doctest::Approx(Q).epsilon(1e-9));
    CHECK(cm.K == doctest::Approx(Q).epsilon(1e-9));
}

TEST_CASE("cost minimize matches brute-force grid oracle") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 12; ++i) {
        EconomyParams p = random_params(rng);
        auto cm = cost_minimize(1.0, p);
        double oracle = grid_cost_oracle(1.0, p);
        CHECK(cm.cost == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(cm.cost <= oracle * (1.0 + 1e-12));  // solver can only do better
    }
}

TEST_CASE("cost minimize: lambda equals the envelope derivative") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 12; ++i) {
        EconomyParams p = random_params(rng);
        double Q = 0.5 + 2.0 * (i % 4);
        auto cm = cost_minimize(Q, p);
        double h = 1e-5 * Q;
        double dc = (cost_minimize(Q + h, p).cost - cost_minimize(Q - h, p).cost) / (2 * h);
        CHECK(cm.lambda == doctest::Approx(dc).epsilon(1e-4));
    }
}

TEST_CASE("cost minimize: first-order condition ratio holds") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        EconomyParams p = random_params(rng);
        auto cm = cost_minimize(1.7, p);
        double lhs = p.theta * p.w0 * (1.0 + 1.0 / p.eps) * std::pow(cm.L, 1.0 / p.eps) / p.r;
        double rhs = (p.s_L / p.s_K) * std::pow(cm.L / cm.K, p.rho - 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
}

TEST_CASE("profit maximize: competitive limit and Lerner identity") {
    EconomyParams p;
    p.eta = 1e9;
    p.tau_rev = 0.0;
    FirmEquilibrium eq = profit_maximize(p);
    CHECK(eq.p == doctest::Approx(eq.lambda).epsilon(1e-6));

    EconomyParams q;
    q.eta = 2.0;
    q.tau_rev = 0.0;
    FirmEquilibrium el = profit_maximize(q);
    CHECK(el.p / el.lambda == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(el.profit > 0.0);
    CHECK_THROWS_AS(
        [] {
            EconomyParams bad;
            bad.eta = 0.9;
            return profit_maximize(bad);
        }(),
        ConfigError);
}

TEST_CASE("profit maximize matches brute-force grid oracle") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 10; ++i) {
        EconomyParams p = random_params(rng);
        FirmEquilibrium eq = profit_maximize(p);
        double oracle = grid_profit_oracle(p);
        CHECK(eq.profit == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(eq.profit >= oracle - 1e-10 * (1.0 + std::fabs(oracle)));
    }
}

TEST_CASE("equilibrium satisfies model invariants") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        EconomyParams p = random_params(rng);
        FirmEquilibrium eq = profit_maximize(p);
        CHECK(eq.Q == doctest::Approx(ces_output(eq.L, eq.K, p.s_L, p.s_K, p.rho)).epsilon(1e-9));
        CHECK(eq.w == doctest::Approx(labor_supply_wage(eq.L, p.w0, p.eps)).epsilon(1e-12));
        // MRPL condition: theta * w0 * (1+1/eps) * L^(1/eps) = lambda * f_L
        double mel = p.theta * p.w0 * (1.0 + 1.0 / p.eps) * std::pow(eq.L, 1.0 / p.eps);
        double f_L = p.s_L * std::pow(eq.L, p.rho - 1.0) * std::pow(eq.Q, 1.0 - p.rho);
        CHECK(mel == doctest::Approx(eq.lambda * f_L).epsilon(1e-8));
    }
}

TEST_CASE("industry equilibrium: degenerate shares") {
    EconomyParams p;
    p.m = 0.0;
    TaxPolicy treated{1.0, 0.10};
    TaxPolicy control{1.2, 0.0};
    IndustryEquilibrium ind = industry_equilibrium(p, treated, control);
    EconomyParams solo = p;
    solo.theta = control.theta;
    solo.tau_rev = control.tau_rev;
    FirmEquilibrium ref = profit_maximize(solo);
    CHECK(ind.control.Q == doctest::Approx(ref.Q).epsilon(1e-10));
    CHECK(ind.control.p == doctest::Approx(ref.p).epsilon(1e-10));
    CHECK(ind.aggregate_Q == doctest::Approx(ref.Q).epsilon(1e-10));

    p.m = 1.0;
    IndustryEquilibrium ind1 = industry_equilibrium(p, treated, control);
    EconomyParams solo1 = p;
    solo1.theta = treated.theta;
    solo1.tau_rev = treated.tau_rev;
    FirmEquilibrium ref1 = profit_maximize(solo1);
    CHECK(ind1.treated.Q == doctest::Approx(ref1.Q).epsilon(1e-10));
    CHECK(ind1.treated.profit == doctest::Approx(ref1.profit).epsilon(1e-10));
}

TEST_CASE("industry equilibrium: both FOCs hold at the common price") {
    EconomyParams p;
    p.m = 0.5;
    TaxPolicy treated{p.theta, 0.10};
    TaxPolicy control{p.theta, 0.0};
    IndustryEquilibrium ind = industry_equilibrium(p, treated, control);
    double mu = 1.0 - 1.0 / p.eta;
    CHECK((1.0 - treated.tau_rev) * ind.p_index * mu ==
          doctest::Approx(ind.treated.lambda).epsilon(1e-8));
    CHECK((1.0 - control.tau_rev) * ind.p_index * mu ==
          doctest::Approx(ind.control.lambda).epsilon(1e-8));
    CHECK(ind.aggregate_Q ==
          doctest::Approx(0.5 * ind.treated.Q + 0.5 * ind.control.Q).epsilon(1e-12));
    CHECK(ind.p_index == doctest::Approx(p.A * std::pow(ind.aggregate_Q, -1.0 / p.eta)).epsilon(1e-9));
    // the taxed block contracts
    CHECK(ind.treated.Q < ind.control.Q);
}

TEST_CASE("determinism: identical params give bit-identical equilibria") {
    std::mt19937_64 rng(99);
    EconomyParams p = random_params(rng);
    FirmEquilibrium a = profit_maximize(p);
    FirmEquilibrium b = profit_maximize(p);
    CHECK(a.L == b.L);
    CHECK(a.K == b.K);
    CHECK(a.Q == b.Q);
    CHECK(a.w == b.w);
    CHECK(a.p == b.p);
    CHECK(a.lambda == b.lambda);
    CHECK(a.profit == b.profit);
}

TEST_CASE("continuity: small parameter perturbations move the solution smoothly") {
    EconomyParams base;
    base.theta = 1.2;
    base.tau_rev = 0.05;
    FirmEquilibrium eq0 = profit_maximize(base);
    auto relgap = [](double a, double b) { return std::fabs(a - b) / std::fabs(b); };
    for (int which = 0; which < 4; ++which) {
        EconomyParams p = base;
        switch (which) {
            case 0: p.eps *= 1.000001; break;
            case 1: p.rho += 1e-6; break;
            case 2: p.eta *= 1.000001; break;
            case 3: p.theta *= 1.000001; break;
        }
        FirmEquilibrium eq = profit_maximize(p);
        CHECK(relgap(eq.L, eq0.L) < 1e-4);
        CHECK(relgap(eq.K, eq0.K) < 1e-4);
        CHECK(relgap(eq.Q, eq0.Q) < 1e-4);
    }
}

TEST_CASE("params survive a JSON round trip; unknown keys are rejected") {
    EconomyParams p;
    p.eps = 3.1;
    p.eta = 0.5;
    p.rho = -0.7;
    p.theta = 1.31;
    p.tau_rev = 0.015;
    p.m = 0.2;
    p.s_L = 0.4;
    p.s_K = 0.6;
    p.market_mode = MarketMode::price_taking;
    EconomyParams q = economy_params_from_json(to_json(p));
    CHECK(q.eps == p.eps);
    CHECK(q.eta == p.eta);
    CHECK(q.rho == p.rho);
    CHECK(q.theta == p.theta);
    CHECK(q.tau_rev == p.tau_rev);
    CHECK(q.m == p.m);
    CHECK(q.s_L == p.s_L);
    CHECK(q.market_mode == p.market_mode);
    json bad = to_json(p);
    bad["mystery"] = 1;
    CHECK_THROWS_AS(economy_params_from_json(bad), ConfigError);
    json invalid = to_json(p);
    invalid["eps"] = -1.0;
    CHECK_THROWS_AS(economy_params_from_json(invalid), ConfigError);
}

TEST_CASE("price-taking mode solves eta below one") {
    EconomyParams p;
    p.market_mode = MarketMode::price_taking;
    p.eta = 0.11;
    FirmEquilibrium eq = profit_maximize(p);
    CHECK((1.0 - p.tau_rev) * eq.p == doctest::Approx(eq.lambda).epsilon(1e-8));
    CHECK(eq.p == doctest::Approx(p.A * std::pow(eq.Q, -1.0 / p.eta)).epsilon(1e-9));
}
