#include "incidence/elasticities.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "incidence/errors.hpp"

namespace incidence {

namespace {

double extract(const FirmEquilibrium& eq, TargetVar t) {
    switch (t) {
        case TargetVar::L: return eq.L;
        case TargetVar::K: return eq.K;
        case TargetVar::Q: return eq.Q;
        case TargetVar::lambda: return eq.lambda;
        case TargetVar::revenue: return eq.revenue;
    }
    return 0;
}

// Aggregate outcome of the two-block industry; lambda has no aggregate
// meaning, so it reports the treated block's marginal cost.
double extract_aggregate(const IndustryEquilibrium& ind, TargetVar t) {
    const double m = ind.m;
    switch (t) {
        case TargetVar::L: return m * ind.treated.L + (1 - m) * ind.control.L;
        case TargetVar::K: return m * ind.treated.K + (1 - m) * ind.control.K;
        case TargetVar::Q: return ind.aggregate_Q;
        case TargetVar::lambda: return ind.treated.lambda;
        case TargetVar::revenue: return ind.p_index * ind.aggregate_Q;
    }
    return 0;
}

double log_target_at_theta(TargetVar target, const EconomyParams& base, double theta) {
    return std::log(extract(profit_maximize(base, TaxPolicy{theta, base.tau_rev}), target));
}

double log_target_at_tau(TargetVar target, const EconomyParams& base, double tau) {
    if (base.m == 1.0)
        return std::log(extract(profit_maximize(base, TaxPolicy{base.theta, tau}), target));
    TaxPolicy treated{base.theta, tau};
    TaxPolicy control{base.theta, 0.0};
    return std::log(extract_aggregate(industry_equilibrium(base, treated, control), target));
}

double centered(TargetVar target, ShockVar shock, const EconomyParams& params, double h) {
    double up, dn;
    switch (shock) {
        case ShockVar::theta:
            up = log_target_at_theta(target, params, params.theta * std::exp(h));
            dn = log_target_at_theta(target, params, params.theta * std::exp(-h));
            break;
        case ShockVar::tau_rev:
            up = log_target_at_tau(target, params, params.tau_rev * std::exp(h));
            dn = log_target_at_tau(target, params, params.tau_rev * std::exp(-h));
            break;
        default: return 0;
    }
    return (up - dn) / (2.0 * h);
}

double fd_log_ratio(double f_up, double f_dn, double h) { return (f_up - f_dn) / (2.0 * h); }

}  // namespace

std::string to_string(TargetVar t) {
    switch (t) {
        case TargetVar::L: return "L";
        case TargetVar::K: return "K";
        case TargetVar::Q: return "Q";
        case TargetVar::lambda: return "lambda";
        case TargetVar::revenue: return "revenue";
    }
    return "?";
}

std::string to_string(ShockVar s) { return s == ShockVar::theta ? "theta" : "tau_rev"; }

TargetVar target_from_string(const std::string& s) {
    if (s == "L") return TargetVar::L;
    if (s == "K") return TargetVar::K;
    if (s == "Q") return TargetVar::Q;
    if (s == "lambda") return TargetVar::lambda;
    if (s == "revenue") return TargetVar::revenue;
    throw ConfigError("unknown elasticity target: " + s);
}

ShockVar shock_from_string(const std::string& s) {
    if (s == "theta") return ShockVar::theta;
    if (s == "tau_rev") return ShockVar::tau_rev;
    throw ConfigError("unknown shock variable: " + s);
}

double numeric_elasticity(TargetVar target, ShockVar shock, const EconomyParams& params,
                          const FiniteDiffOptions& fd) {
    params.validate();
    if (!(fd.h > 0.0)) throw ConfigError("numeric_elasticity: step h must be > 0");
    if (shock == ShockVar::tau_rev && params.tau_rev == 0.0)
        throw ConfigError("numeric_elasticity: tau_rev shock needs tau_rev > 0 (log step)");
    double e_h = centered(target, shock, params, fd.h);
    if (!fd.richardson) return e_h;
    double e_h2 = centered(target, shock, params, fd.h / 2.0);
    return (4.0 * e_h2 - e_h) / 3.0;
}

std::pair<double, double> revenue_tax_elasticities_analytic(const EconomyParams& params) {
    if (!(params.tau_rev >= 0.0 && params.tau_rev < 1.0))
        throw ConfigError("revenue_tax_elasticities_analytic: tau_rev must lie in [0, 1)");
    if (!(params.m >= 0.0 && params.m <= 1.0))
        throw ConfigError("revenue_tax_elasticities_analytic: m must lie in [0, 1]");
    const double tau = params.tau_rev;
    if (tau == 0.0) return {0.0, 0.0};
    const double spill = params.m / (params.m + (1.0 - params.m) * (1.0 - tau));
    const double scale = tau / (1.0 - tau) * spill;
    return {scale * (1.0 - params.eta), -scale * params.eta};
}

PayrollComponents payroll_tax_components(const EconomyParams& params, const FiniteDiffOptions& fd) {
    params.validate();
    if (!(fd.h > 0.0)) throw ConfigError("payroll_tax_components: step h must be > 0");
    const double h = fd.h;
    FirmEquilibrium base = profit_maximize(params);

    auto lambda_at = [&](double theta, double Q) {
        return std::log(cost_minimize(Q, params, TaxPolicy{theta, params.tau_rev}).lambda);
    };

    PayrollComponents c;
    c.eps_lambda_theta = fd_log_ratio(lambda_at(params.theta * std::exp(h), base.Q),
                                      lambda_at(params.theta * std::exp(-h), base.Q), h);
    c.eps_lambda_Q = fd_log_ratio(lambda_at(params.theta, base.Q * std::exp(h)),
                                  lambda_at(params.theta, base.Q * std::exp(-h)), h);
    c.eps_Q_theta = numeric_elasticity(TargetVar::Q, ShockVar::theta, params, fd);
    return c;
}

double verify_composition_eq14(const EconomyParams& params, const FiniteDiffOptions& fd) {
    PayrollComponents c = payroll_tax_components(params, fd);
    double direct = numeric_elasticity(TargetVar::L, ShockVar::theta, params, fd);
    double share = params.eps / (1.0 + params.eps * (1.0 - params.rho));
    double composed = share * (c.eps_lambda_theta + c.eps_lambda_Q * c.eps_Q_theta - 1.0) +
                      (1.0 - params.rho) * share * c.eps_Q_theta;
    return std::fabs(direct - composed);
}

std::pair<double, double> competitive_limit_elasticities(double cost_share_L, double cost_share_K,
                                                         double rho, double eta) {
    // Closed shares: s_K = 0 is the all-labor edge where only the scale term
    // survives.
    if (!(cost_share_L >= 0.0 && cost_share_L <= 1.0) ||
        !(cost_share_K >= 0.0 && cost_share_K <= 1.0))
        throw ConfigError("competitive_limit_elasticities: cost shares must lie in [0, 1]");
    if (std::fabs(cost_share_L + cost_share_K - 1.0) > 1e-9)
        throw ConfigError("competitive_limit_elasticities: cost shares must sum to 1");
    if (!(rho < 1.0)) throw ConfigError("competitive_limit_elasticities: rho must be < 1");
    double sigma = 1.0 / (1.0 - rho);
    double scale = cost_share_L * eta;
    return {-cost_share_K * sigma - scale, cost_share_L * sigma - scale};
}

ReformEffect reform_effect(const EconomyParams& params, double phi1, double phi2,
                           const FiniteDiffOptions& fd) {
    params.validate();
    ReformEffect re;
    re.phi1 = phi1;
    re.phi2 = phi2;

    // The three payroll elasticities come from one pair of perturbed solves.
    const double h = fd.h;
    FirmEquilibrium eq_up =
        profit_maximize(params, TaxPolicy{params.theta * std::exp(h), params.tau_rev});
    FirmEquilibrium eq_dn =
        profit_maximize(params, TaxPolicy{params.theta * std::exp(-h), params.tau_rev});
    double eps_L = fd_log_ratio(std::log(eq_up.L), std::log(eq_dn.L), h);
    double eps_K = fd_log_ratio(std::log(eq_up.K), std::log(eq_dn.K), h);
    double eps_R = fd_log_ratio(std::log(eq_up.revenue), std::log(eq_dn.revenue), h);

    double nu = 0.0, xi = 0.0, zeta = 0.0;
    if (params.tau_rev > 0.0 && phi2 != 0.0) {
        std::tie(nu, xi) = revenue_tax_elasticities_analytic(params);
        zeta = numeric_elasticity(TargetVar::L, ShockVar::tau_rev, params, fd);
    }
    re.beta_L = eps_L * phi1 - zeta * phi2;
    re.beta_K = eps_K * phi1 - xi * phi2;
    re.beta_R = eps_R * phi1 - nu * phi2;
    return re;
}

ElasticityReport compute_elasticity_report(const EconomyParams& params,
                                           const FiniteDiffOptions& fd) {
    params.validate();
    ElasticityReport rep;
    rep.params = params;
    rep.eps_L_theta = numeric_elasticity(TargetVar::L, ShockVar::theta, params, fd);
    rep.eps_K_theta = numeric_elasticity(TargetVar::K, ShockVar::theta, params, fd);
    rep.eps_R_theta = numeric_elasticity(TargetVar::revenue, ShockVar::theta, params, fd);
    rep.components = payroll_tax_components(params, fd);
    std::tie(rep.nu_analytic, rep.xi_analytic) = revenue_tax_elasticities_analytic(params);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (params.tau_rev > 0.0) {
        rep.nu_numeric = numeric_elasticity(TargetVar::revenue, ShockVar::tau_rev, params, fd);
        rep.xi_numeric = numeric_elasticity(TargetVar::K, ShockVar::tau_rev, params, fd);
        rep.zeta_numeric = numeric_elasticity(TargetVar::L, ShockVar::tau_rev, params, fd);
        rep.chi_implied = rep.xi_analytic != 0.0 ? rep.zeta_numeric / rep.xi_analytic : nan;
    } else {
        rep.nu_numeric = nan;
        rep.xi_numeric = nan;
        rep.zeta_numeric = nan;
        rep.chi_implied = nan;
    }

    double share = params.eps / (1.0 + params.eps * (1.0 - params.rho));
    rep.omega_implied = 1.0 + rep.eps_L_theta / share;
    double kdisp = (1.0 / (1.0 - params.rho)) * (params.eps + 2.0 * rep.eps_L_theta) *
                   (1.0 - params.eta) / (params.eps + rep.eps_L_theta);
    rep.psi_implied = kdisp != 0.0 ? rep.eps_K_theta / kdisp : nan;
    return rep;
}

}  // namespace incidence
