#pragma once

#include <string>

namespace incidence {

enum class MarketMode {
    markup,        // firms price against perceived residual demand elasticity eta (> 1)
    price_taking,  // firms take the market price; the industry price still clears demand
};

std::string to_string(MarketMode m);
MarketMode market_mode_from_string(const std::string& s);

// Structural primitives of the monopsony + CES + constant-elasticity-demand
// economy. Scale normalizations default to 1; elasticities are scale-free.
struct EconomyParams {
    double s_L = 0.5;   // CES distribution weight on labor (s_L + s_K = 1)
    double s_K = 0.5;   // CES distribution weight on capital
    double rho = 0.3;   // CES substitution parameter, rho < 1; sigma_KL = 1/(1-rho)
    double eps = 2.78;  // firm-level labor supply elasticity, eps > 0
    double eta = 2.0;   // output demand elasticity, eta > 1 in markup mode
    double tau_rev = 0.0;  // revenue tax rate in [0, 1)
    double theta = 1.0;    // labor cost wedge = 1 + payroll tax rate, >= 1
    double m = 1.0;        // treated share of firms in [0, 1]
    double w0 = 1.0;       // labor supply scale: w(L) = w0 * L^(1/eps)
    double r = 1.0;        // capital rental rate
    double A = 1.0;        // demand scale: p(Q) = A * Q^(-1/eta)
    MarketMode market_mode = MarketMode::markup;

    void validate() const;  // throws ConfigError on any violated invariant
};

// Tax instruments faced by one firm block; everything else is shared.
// Unlike EconomyParams.theta, a policy wedge may dip below 1 (a subsidy),
// which the finite-difference machinery needs at the theta = 1 boundary.
struct TaxPolicy {
    double theta = 1.0;
    double tau_rev = 0.0;

    void validate() const;  // theta > 0, tau_rev in [0, 1)
};

struct FirmEquilibrium {
    double L = 0;        // labor
    double K = 0;        // capital
    double Q = 0;        // output
    double w = 0;        // wage, on the labor supply curve
    double p = 0;        // output price
    double lambda = 0;   // marginal cost
    double revenue = 0;  // p * Q, gross of the revenue tax
    double profit = 0;   // (1 - tau) * p * Q - theta * w * L - r * K
};

struct IndustryEquilibrium {
    FirmEquilibrium treated;
    FirmEquilibrium control;
    double aggregate_Q = 0;  // m * Q_treated + (1 - m) * Q_control
    double p_index = 0;      // common price, A * aggregate_Q^(-1/eta)
    double m = 0;
};

struct CostMinResult {
    double L = 0;
    double K = 0;
    double lambda = 0;  // marginal cost dC/dQ at the optimum
    double cost = 0;    // theta * w0 * L^(1 + 1/eps) + r * K
};

// w(L) = w0 * L^(1/eps). Strictly increasing in L.
double labor_supply_wage(double L, double w0, double eps);

// CES aggregate (s_L L^rho + s_K K^rho)^(1/rho); Cobb-Douglas branch when
// |rho| < 1e-6 to avoid the 0/0 exponent.
double ces_output(double L, double K, double s_L, double s_K, double rho);

// Minimize theta * w(L) * L + r * K subject to ces_output(L, K) = Q.
// One-dimensional search over log L; K eliminated via the production
// constraint; lambda from the capital first-order condition (envelope).
CostMinResult cost_minimize(double Q, const EconomyParams& params);
CostMinResult cost_minimize(double Q, const EconomyParams& params, const TaxPolicy& policy);

// Single-firm optimum. Markup mode solves (1-tau) p(Q) (1 - 1/eta) = lambda(Q);
// price-taking mode drops the markup: (1-tau) p(Q) = lambda(Q).
FirmEquilibrium profit_maximize(const EconomyParams& params);
FirmEquilibrium profit_maximize(const EconomyParams& params, const TaxPolicy& policy);

// Two-block fixed point: treated (share m) and control (share 1-m) firms
// best-respond to the common price over aggregate output.
IndustryEquilibrium industry_equilibrium(const EconomyParams& params, const TaxPolicy& treated,
                                         const TaxPolicy& control);

// Proportional wage markdown (MRPL - w)/w = 1/eps at the monopsony optimum.
double markdown(double eps);

// Equilibrium labor expenditure share theta*w*L / (theta*w*L + r*K).
double labor_cost_share(const EconomyParams& params, const FirmEquilibrium& eq);

}  // namespace incidence
