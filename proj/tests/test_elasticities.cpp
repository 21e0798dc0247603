#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "incidence/elasticities.hpp"
#include "incidence/errors.hpp"

using namespace incidence;

namespace {

// Shephard-type oracle for eps_lambda_theta: differentiate the cost function
// twice numerically (marginal cost by centered differences in Q at each
// perturbed theta), never touching the component under test.
double cross_derivative_oracle(const EconomyParams& p, double Q) {
    const double h = 1e-4;
    auto log_mc = [&](double theta) {
        TaxPolicy pol{theta, p.tau_rev};
        double hq = 1e-5 * Q;
        double up = cost_minimize(Q + hq, p, pol).cost;
        double dn = cost_minimize(Q - hq, p, pol).cost;
        return std::log((up - dn) / (2 * hq));
    };
    return (log_mc(p.theta * std::exp(h)) - log_mc(p.theta * std::exp(-h))) / (2 * h);
}

}  // namespace

TEST_CASE("numeric elasticity rejects degenerate steps") {
    EconomyParams p;
    FiniteDiffOptions fd;
    fd.h = 0.0;
    CHECK_THROWS_AS(numeric_elasticity(TargetVar::L, ShockVar::theta, p, fd), ConfigError);
    // tau shock needs a positive tau to place a log step
    CHECK_THROWS_AS(numeric_elasticity(TargetVar::L, ShockVar::tau_rev, p), ConfigError);
}

TEST_CASE("competitive benchmark: employment elasticity -1.5 at unit shares") {
    EconomyParams p;
    p.eps = 1e6;
    p.rho = 0.0;
    p.eta = 2.0;
    double e = numeric_elasticity(TargetVar::L, ShockVar::theta, p);
    CHECK(e == doctest::Approx(-1.5).epsilon(0.01));
}

TEST_CASE("revenue elasticity roughly zero at the small Brazilian rates") {
    EconomyParams p;
    p.tau_rev = 0.015;
    p.m = 0.015;
    p.eta = 2.0;
    p.eps = 2.78;
    p.rho = 0.3;
    p.theta = 1.2;
    CHECK(std::fabs(numeric_elasticity(TargetVar::revenue, ShockVar::tau_rev, p)) < 0.01);
    CHECK(std::fabs(numeric_elasticity(TargetVar::K, ShockVar::tau_rev, p)) < 0.01);
    CHECK(std::fabs(numeric_elasticity(TargetVar::L, ShockVar::tau_rev, p)) < 0.01);
}

TEST_CASE("analytic revenue-tax elasticities") {
    EconomyParams p;
    p.tau_rev = 0.0;
    auto [nu0, xi0] = revenue_tax_elasticities_analytic(p);
    CHECK(nu0 == 0.0);
    CHECK(xi0 == 0.0);

    p.tau_rev = 0.3;
    p.m = 0.6;
    p.eta = 1.0;
    p.market_mode = MarketMode::price_taking;
    auto [nu1, xi1] = revenue_tax_elasticities_analytic(p);
    CHECK(nu1 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(xi1 < 0.0);

    p.m = 1.0;
    p.tau_rev = 0.015;
    p.eta = 2.0;
    auto [nu, xi] = revenue_tax_elasticities_analytic(p);
    CHECK(nu == doctest::Approx(0.015 / 0.985 * (-1.0)).epsilon(1e-12));
    CHECK(nu == doctest::Approx(-0.015228).epsilon(1e-4));
    CHECK(xi == doctest::Approx(-0.030457).epsilon(1e-4));
}

TEST_CASE("analytic (nu, xi) match the numeric oracle at m=1, competitive labor") {
    EconomyParams p;
    p.m = 1.0;
    p.tau_rev = 0.015;
    p.eta = 2.0;
    p.eps = 1e5;
    auto [nu, xi] = revenue_tax_elasticities_analytic(p);
    double nu_num = numeric_elasticity(TargetVar::revenue, ShockVar::tau_rev, p);
    double xi_num = numeric_elasticity(TargetVar::K, ShockVar::tau_rev, p);
    double ze_num = numeric_elasticity(TargetVar::L, ShockVar::tau_rev, p);
    CHECK(nu_num / nu == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(xi_num / xi == doctest::Approx(1.0).epsilon(1e-3));
    // chi -> 1: capital and labor respond identically without monopsony
    CHECK(ze_num / xi_num == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("monopsony wedge in the revenue-tax response is surfaced, not hidden") {
    // At finite eps the model's own-response deviates from the closed form by
    // the factor 1/(1 + eta * eps_lambda_Q); the report carries both numbers.
    EconomyParams p;
    p.m = 1.0;
    p.tau_rev = 0.015;
    p.eta = 2.0;
    p.eps = 2.78;
    ElasticityReport rep = compute_elasticity_report(p);
    double wedge = 1.0 + p.eta * rep.components.eps_lambda_Q;
    CHECK(rep.nu_numeric * wedge == doctest::Approx(rep.nu_analytic).epsilon(0.02));
    CHECK(std::isfinite(rep.chi_implied));
}

TEST_CASE("payroll components: competitive CRS flattens marginal cost") {
    EconomyParams p;
    p.eps = 1e6;
    p.rho = -0.5;
    auto c = payroll_tax_components(p);
    CHECK(std::fabs(c.eps_lambda_Q) < 1e-3);
}

TEST_CASE("payroll components: finite, with a cost-share bound") {
    EconomyParams p;
    p.rho = 0.0;
    p.eps = 2.78;
    p.eta = 2.0;
    auto c = payroll_tax_components(p);
    CHECK(std::isfinite(c.eps_lambda_theta));
    CHECK(std::isfinite(c.eps_Q_theta));
    CHECK(std::isfinite(c.eps_lambda_Q));
    CHECK(c.eps_lambda_theta > 0.0);
    CHECK(c.eps_lambda_theta < 1.0);
}

TEST_CASE("eps_lambda_theta equals the cost-function cross-derivative oracle") {
    EconomyParams p;
    p.rho = 0.3;
    p.eps = 2.78;
    p.eta = 2.0;
    p.theta = 1.2;
    FirmEquilibrium eq = profit_maximize(p);
    auto c = payroll_tax_components(p);
    CHECK(c.eps_lambda_theta == doctest::Approx(cross_derivative_oracle(p, eq.Q)).epsilon(1e-4));
}

TEST_CASE("labor FOC composition identity at named points") {
    EconomyParams p;
    p.rho = 0.0;
    p.eps = 2.78;
    p.eta = 2.0;
    p.tau_rev = 0.0;
    CHECK(verify_composition_eq14(p) < 1e-4);
    p.rho = -1.0;
    p.eps = 1.0;
    p.eta = 3.0;
    CHECK(verify_composition_eq14(p) < 1e-4);
    p.eps = 1e6;
    p.rho = 0.5;
    CHECK(verify_composition_eq14(p) < 1e-3);
}

TEST_CASE("labor FOC composition identity holds in price-taking mode too") {
    EconomyParams p;
    p.market_mode = MarketMode::price_taking;
    p.eta = 0.5;
    p.eps = 2.78;
    p.rho = 0.3;
    p.theta = 1.2;
    CHECK(verify_composition_eq14(p) < 1e-4);
    p.eta = 0.11;
    p.rho = -1.0;
    CHECK(verify_composition_eq14(p) < 1e-4);
}

TEST_CASE("labor FOC composition identity on a random parameter grid") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        EconomyParams p;
        p.eps = 0.5 + 49.5 * u(rng);
        p.rho = -2.0 + 2.9 * u(rng);
        p.eta = 1.1 + 3.9 * u(rng);
        p.s_L = 0.25 + 0.5 * u(rng);
        p.s_K = 1.0 - p.s_L;
        p.theta = 1.0 + 0.4 * u(rng);
        CHECK(verify_composition_eq14(p) < 1e-4);
    }
}

TEST_CASE("sign properties under markup mode") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 25; ++i) {
        EconomyParams p;
        p.eps = 0.5 + 20 * u(rng);
        p.rho = -2.0 + 2.9 * u(rng);
        p.eta = 1.1 + 3.9 * u(rng);
        p.theta = 1.0 + 0.4 * u(rng);
        CHECK(numeric_elasticity(TargetVar::L, ShockVar::theta, p) < 0.0);
        CHECK(numeric_elasticity(TargetVar::Q, ShockVar::theta, p) < 0.0);
    }
}

TEST_CASE("competitive limit formulas") {
    auto [eL, eK] = competitive_limit_elasticities(0.5, 0.5, 0.0, 1.0);
    CHECK(eL == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(eK == doctest::Approx(0.0).epsilon(1e-14));
    // all-labor edge: no substitution margin, pure scale
    auto [eL2, eK2] = competitive_limit_elasticities(1.0, 0.0, 0.3, 2.5);
    CHECK(eL2 == doctest::Approx(-2.5).epsilon(1e-14));
    CHECK_THROWS_AS(competitive_limit_elasticities(1.2, -0.2, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(competitive_limit_elasticities(0.4, 0.4, 0.0, 1.0), ConfigError);
}

TEST_CASE("large-eps numeric elasticities match the Hicks-Marshall limits") {
    for (double rho : {-1.0, 0.0, 0.5}) {
        for (double eta : {1.5, 3.0}) {
            EconomyParams p;
            p.eps = 1e5;
            p.rho = rho;
            p.eta = eta;
            FirmEquilibrium eq = profit_maximize(p);
            double sL = labor_cost_share(p, eq);
            auto [eL_lim, eK_lim] = competitive_limit_elasticities(sL, 1 - sL, rho, eta);
            double eL = numeric_elasticity(TargetVar::L, ShockVar::theta, p);
            double eK = numeric_elasticity(TargetVar::K, ShockVar::theta, p);
            CHECK(eL == doctest::Approx(eL_lim).epsilon(0.01));
            CHECK(eK == doctest::Approx(eK_lim).epsilon(0.01));
        }
    }
}

TEST_CASE("employment elasticity converges monotonically to the limit in eps") {
    EconomyParams p;
    p.rho = 0.3;
    p.eta = 2.0;
    double prev = 1e99;
    for (double eps : {1.0, 5.0, 25.0, 125.0, 625.0}) {
        p.eps = eps;
        double eL = numeric_elasticity(TargetVar::L, ShockVar::theta, p);
        FirmEquilibrium eq = profit_maximize(p);
        double sL = labor_cost_share(p, eq);
        auto [eL_lim, eK_lim] = competitive_limit_elasticities(sL, 1 - sL, p.rho, p.eta);
        (void)eK_lim;
        double gap = std::fabs(eL - eL_lim);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("reform effect: pure payroll shock") {
    EconomyParams p;
    p.rho = 0.3;
    p.eps = 2.78;
    p.eta = 2.0;
    ReformEffect re = reform_effect(p, -0.133, 0.0);
    double eL = numeric_elasticity(TargetVar::L, ShockVar::theta, p);
    double eK = numeric_elasticity(TargetVar::K, ShockVar::theta, p);
    double eR = numeric_elasticity(TargetVar::revenue, ShockVar::theta, p);
    CHECK(re.beta_L == doctest::Approx(eL * -0.133).epsilon(1e-10));
    CHECK(re.beta_K == doctest::Approx(eK * -0.133).epsilon(1e-10));
    CHECK(re.beta_R == doctest::Approx(eR * -0.133).epsilon(1e-10));
    // the headline arithmetic: beta_L = 0.0944 at phi1 = -0.133 needs -0.71
    CHECK(0.0944 / -0.133 == doctest::Approx(-0.7098).epsilon(1e-3));
}

TEST_CASE("reform effect: revenue-tax leg is a small correction") {
    EconomyParams p;
    p.rho = 0.3;
    p.eps = 2.78;
    p.eta = 2.0;
    p.tau_rev = 0.015;
    p.m = 0.015;
    double phi1 = -0.133, phi2 = std::log(1.015);
    ReformEffect with = reform_effect(p, phi1, phi2);
    ReformEffect without = reform_effect(p, phi1, 0.0);
    CHECK(std::fabs(with.beta_L - without.beta_L) < 0.05 * std::fabs(with.beta_L));
}

TEST_CASE("richardson refinement stays consistent with the plain stencil") {
    EconomyParams p;
    p.rho = 0.3;
    p.eps = 2.78;
    p.eta = 2.0;
    FiniteDiffOptions plain;
    FiniteDiffOptions rich;
    rich.richardson = true;
    double a = numeric_elasticity(TargetVar::L, ShockVar::theta, p, plain);
    double b = numeric_elasticity(TargetVar::L, ShockVar::theta, p, rich);
    CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("elasticity report is complete and internally consistent") {
    EconomyParams p;
    p.rho = 0.3;
    p.eps = 2.78;
    p.eta = 2.0;
    p.tau_rev = 0.015;
    p.m = 1.0;
    ElasticityReport rep = compute_elasticity_report(p);
    CHECK(std::isfinite(rep.eps_L_theta));
    CHECK(std::isfinite(rep.eps_K_theta));
    CHECK(std::isfinite(rep.eps_R_theta));
    double share = p.eps / (1.0 + p.eps * (1.0 - p.rho));
    CHECK(rep.eps_L_theta == doctest::Approx(share * (rep.omega_implied - 1.0)).epsilon(1e-9));
    // tau_rev = 0 leaves no numeric tau elasticities
    p.tau_rev = 0.0;
    ElasticityReport rep0 = compute_elasticity_report(p);
    CHECK(std::isnan(rep0.zeta_numeric));
    CHECK(rep0.nu_analytic == 0.0);
}
