#include "incidence/economy.hpp"

#include <cmath>
#include <sstream>

#include "incidence/errors.hpp"
#include "incidence/rootfind.hpp"

namespace incidence {

namespace {

constexpr double kCobbDouglasBand = 1e-6;  // |rho| below ==> Cobb-Douglas branch

double log_sum_exp(double a, double b) {
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log L on the isoquant through logQ, as a function of the input ratio
// x = log(K/L). Free of the cancellation a direct K(L) elimination hits when
// the optimum sits near an input boundary.
double log_isoquant_L(double x, double logQ, const EconomyParams& pr) {
    if (std::fabs(pr.rho) < kCobbDouglasBand) return logQ - pr.s_K * x;
    return logQ - log_sum_exp(std::log(pr.s_L), std::log(pr.s_K) + pr.rho * x) / pr.rho;
}

double log_f_K(double logK, double logQ, const EconomyParams& pr) {
    if (std::fabs(pr.rho) < kCobbDouglasBand) return std::log(pr.s_K) + logQ - logK;
    return std::log(pr.s_K) + (pr.rho - 1.0) * logK + (1.0 - pr.rho) * logQ;
}

// Input-mix FOC residual over x = log(K/L):
//   log MEL(L(x)) - log r - log(s_L/s_K) - (1-rho) x,
// strictly decreasing in x, with a root for every Q > 0.
double costmin_foc(double x, double logQ, const EconomyParams& pr, const TaxPolicy& pol) {
    double logL = log_isoquant_L(x, logQ, pr);
    double log_mel = std::log(pol.theta * pr.w0 * (1.0 + 1.0 / pr.eps)) + logL / pr.eps;
    return log_mel - std::log(pr.r) - std::log(pr.s_L / pr.s_K) - (1.0 - pr.rho) * x;
}

CostMinResult cost_minimize_policy(double Q, const EconomyParams& pr, const TaxPolicy& pol) {
    if (!(Q > 0.0)) throw ConfigError("cost_minimize: Q must be positive");
    double logQ = std::log(Q);
    RootOptions opt;
    opt.tol = 1e-12;  // on log(K/L); well inside the 1e-10 contract
    double x;
    try {
        x = solve_decreasing([&](double v) { return costmin_foc(v, logQ, pr, pol); }, 0.0, 0.5,
                             opt);
    } catch (const SolverError& e) {
        std::ostringstream d;
        d << "Q=" << Q << "; " << e.diagnostics;
        throw SolverError("cost_minimize: input-mix FOC", d.str());
    }
    double logL = log_isoquant_L(x, logQ, pr);
    double logK = logL + x;

    CostMinResult res;
    res.L = std::exp(logL);
    res.K = std::exp(logK);
    // lambda from the capital FOC: lambda = r / f_K (envelope theorem).
    res.lambda = pr.r / std::exp(log_f_K(logK, logQ, pr));
    res.cost = pol.theta * pr.w0 * std::pow(res.L, 1.0 + 1.0 / pr.eps) + pr.r * res.K;
    return res;
}

// Output FOC residual in logs, strictly decreasing in logQ.
// markup:       log[(1-tau) A (1-1/eta)] - logQ/eta - log lambda(Q)
// price-taking: log[(1-tau) A          ] - logQ/eta - log lambda(Q)
double output_foc(double logQ, const EconomyParams& pr, const TaxPolicy& pol) {
    double markup_term = (pr.market_mode == MarketMode::markup) ? std::log1p(-1.0 / pr.eta) : 0.0;
    CostMinResult cm = cost_minimize_policy(std::exp(logQ), pr, pol);
    return std::log1p(-pol.tau_rev) + std::log(pr.A) + markup_term - logQ / pr.eta -
           std::log(cm.lambda);
}

FirmEquilibrium assemble_equilibrium(double Q, double p, const EconomyParams& pr,
                                     const TaxPolicy& pol) {
    CostMinResult cm = cost_minimize_policy(Q, pr, pol);
    FirmEquilibrium eq;
    eq.L = cm.L;
    eq.K = cm.K;
    eq.Q = Q;
    eq.w = labor_supply_wage(cm.L, pr.w0, pr.eps);
    eq.p = p;
    eq.lambda = cm.lambda;
    eq.revenue = p * Q;
    eq.profit = (1.0 - pol.tau_rev) * p * Q - pol.theta * eq.w * eq.L - pr.r * eq.K;
    return eq;
}

FirmEquilibrium profit_maximize_policy(const EconomyParams& pr, const TaxPolicy& pol) {
    if (pr.market_mode == MarketMode::markup && pr.eta <= 1.0)
        throw ConfigError("profit_maximize: markup mode requires eta > 1");
    if (pr.eta == 0.0) {
        // Perfectly inelastic demand: quantity is pinned at the demand scale
        // and the price adjusts to the supply side.
        FirmEquilibrium eq = assemble_equilibrium(pr.A, 0.0, pr, pol);
        eq.p = eq.lambda / (1.0 - pol.tau_rev);
        eq.revenue = eq.p * eq.Q;
        eq.profit = (1.0 - pol.tau_rev) * eq.p * eq.Q - pol.theta * eq.w * eq.L - pr.r * eq.K;
        return eq;
    }
    auto f = [&](double logQ) { return output_foc(logQ, pr, pol); };
    double logQ = solve_decreasing(f, 0.0, 1.0);
    double Q = std::exp(logQ);
    return assemble_equilibrium(Q, pr.A * std::pow(Q, -1.0 / pr.eta), pr, pol);
}

// Firm block's supplied quantity at a given common price: the unique q with
// (1-tau) p mu = lambda(q), mu the (possibly unit) markup wedge.
double block_quantity_at_price(double logp, const EconomyParams& pr, const TaxPolicy& pol) {
    double markup_term = (pr.market_mode == MarketMode::markup) ? std::log1p(-1.0 / pr.eta) : 0.0;
    double target = std::log1p(-pol.tau_rev) + logp + markup_term;
    auto g = [&](double logq) {
        return std::log(cost_minimize_policy(std::exp(logq), pr, pol).lambda) - target;
    };
    return std::exp(solve_increasing(g, 0.0, 1.0));
}

}  // namespace

std::string to_string(MarketMode m) {
    return m == MarketMode::markup ? "markup" : "price_taking";
}

MarketMode market_mode_from_string(const std::string& s) {
    if (s == "markup") return MarketMode::markup;
    if (s == "price_taking") return MarketMode::price_taking;
    throw ConfigError("unknown market_mode: " + s);
}

void TaxPolicy::validate() const {
    if (!(theta > 0.0)) throw ConfigError("policy theta must be positive");
    if (!(tau_rev >= 0.0 && tau_rev < 1.0)) throw ConfigError("policy tau_rev must lie in [0, 1)");
}

void EconomyParams::validate() const {
    if (!(s_L > 0.0) || !(s_K > 0.0)) throw ConfigError("s_L and s_K must be positive");
    if (std::fabs(s_L + s_K - 1.0) > 1e-12) throw ConfigError("s_L + s_K must equal 1");
    if (!(rho < 1.0)) throw ConfigError("rho must be < 1");
    if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
    if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
    if (market_mode == MarketMode::markup && !(eta > 1.0))
        throw ConfigError("markup mode requires eta > 1");
    if (!(tau_rev >= 0.0 && tau_rev < 1.0)) throw ConfigError("tau_rev must lie in [0, 1)");
    if (!(theta >= 1.0)) throw ConfigError("theta must be >= 1");
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("m must lie in [0, 1]");
    if (!(w0 > 0.0) || !(r > 0.0) || !(A > 0.0))
        throw ConfigError("w0, r and A must be positive");
}

double labor_supply_wage(double L, double w0, double eps) {
    if (!(L > 0.0)) throw ConfigError("labor_supply_wage: L must be positive");
    if (!(w0 > 0.0)) throw ConfigError("labor_supply_wage: w0 must be positive");
    if (!(eps > 0.0)) throw ConfigError("labor_supply_wage: eps must be positive");
    return w0 * std::pow(L, 1.0 / eps);
}

double ces_output(double L, double K, double s_L, double s_K, double rho) {
    if (!(L > 0.0) || !(K > 0.0)) throw ConfigError("ces_output: inputs must be positive");
    if (rho >= 1.0) throw ConfigError("ces_output: rho must be < 1");
    if (std::fabs(rho) < kCobbDouglasBand)
        return std::pow(L, s_L) * std::pow(K, s_K);
    return std::pow(s_L * std::pow(L, rho) + s_K * std::pow(K, rho), 1.0 / rho);
}

CostMinResult cost_minimize(double Q, const EconomyParams& params) {
    params.validate();
    return cost_minimize_policy(Q, params, TaxPolicy{params.theta, params.tau_rev});
}

CostMinResult cost_minimize(double Q, const EconomyParams& params, const TaxPolicy& policy) {
    params.validate();
    policy.validate();
    return cost_minimize_policy(Q, params, policy);
}

FirmEquilibrium profit_maximize(const EconomyParams& params) {
    params.validate();
    return profit_maximize_policy(params, TaxPolicy{params.theta, params.tau_rev});
}

FirmEquilibrium profit_maximize(const EconomyParams& params, const TaxPolicy& policy) {
    params.validate();
    policy.validate();
    return profit_maximize_policy(params, policy);
}

IndustryEquilibrium industry_equilibrium(const EconomyParams& params, const TaxPolicy& treated,
                                         const TaxPolicy& control) {
    params.validate();
    treated.validate();
    control.validate();
    if (params.eta == 0.0) throw ConfigError("industry_equilibrium: eta must be positive");
    const double m = params.m;

    // Degenerate shares reduce to the single-firm problem for the live block;
    // the other block is a measure-zero best response at the same price.
    if (m == 0.0 || m == 1.0) {
        const TaxPolicy& live = (m == 1.0) ? treated : control;
        FirmEquilibrium eq = profit_maximize_policy(params, live);
        IndustryEquilibrium ind;
        ind.m = m;
        ind.aggregate_Q = eq.Q;
        ind.p_index = eq.p;
        const TaxPolicy& other = (m == 1.0) ? control : treated;
        double q_other = block_quantity_at_price(std::log(eq.p), params, other);
        FirmEquilibrium eq_other = assemble_equilibrium(q_other, eq.p, params, other);
        ind.treated = (m == 1.0) ? eq : eq_other;
        ind.control = (m == 1.0) ? eq_other : eq;
        return ind;
    }

    // Excess-price condition in log p: H(p) = log p - log(A Q_agg(p)^(-1/eta)),
    // strictly increasing because both block quantities rise with the price.
    auto H = [&](double logp) {
        double qT = block_quantity_at_price(logp, params, treated);
        double qC = block_quantity_at_price(logp, params, control);
        double Q = m * qT + (1.0 - m) * qC;
        return logp - (std::log(params.A) - std::log(Q) / params.eta);
    };
    double logp0 = std::log(profit_maximize_policy(params, control).p);
    double logp = solve_increasing(H, logp0, 0.25);

    IndustryEquilibrium ind;
    ind.m = m;
    double p = std::exp(logp);
    double qT = block_quantity_at_price(logp, params, treated);
    double qC = block_quantity_at_price(logp, params, control);
    ind.treated = assemble_equilibrium(qT, p, params, treated);
    ind.control = assemble_equilibrium(qC, p, params, control);
    ind.aggregate_Q = m * qT + (1.0 - m) * qC;
    ind.p_index = p;
    return ind;
}

double markdown(double eps) {
    if (!(eps > 0.0)) throw ConfigError("markdown: eps must be positive");
    return 1.0 / eps;
}

double labor_cost_share(const EconomyParams& params, const FirmEquilibrium& eq) {
    double labor = params.theta * eq.w * eq.L;
    return labor / (labor + params.r * eq.K);
}

}  // namespace incidence
