#pragma once

#include <utility>

#include "incidence/economy.hpp"

namespace incidence {

enum class TargetVar { L, K, Q, lambda, revenue };
enum class ShockVar { theta, tau_rev };

std::string to_string(TargetVar t);
std::string to_string(ShockVar s);
TargetVar target_from_string(const std::string& s);
ShockVar shock_from_string(const std::string& s);

struct FiniteDiffOptions {
    double h = 1e-5;          // centered step on the log of the shocked variable
    bool richardson = false;  // extra h/2 pass for tight-tolerance runs
};

// Centered log-difference elasticity d log(target) / d log(shock).
//
// theta shocks are single-firm comparative statics (the payroll formulas
// carry no treated-share term). tau_rev shocks perturb the treated block of
// the m-share industry fixed point, holding the control block untaxed, and
// measure aggregate outcomes; at m = 1 this is again the single firm.
double numeric_elasticity(TargetVar target, ShockVar shock, const EconomyParams& params,
                          const FiniteDiffOptions& fd = {});

// Closed forms for the revenue-tax elasticities of revenue and capital:
//   nu = [tau/(1-tau)] * S * (1-eta),  xi = -[tau/(1-tau)] * S * eta,
// with spillover factor S = m / (m + (1-m)(1-tau)).
std::pair<double, double> revenue_tax_elasticities_analytic(const EconomyParams& params);

struct PayrollComponents {
    double eps_lambda_theta = 0;  // d log lambda / d log theta at fixed Q
    double eps_Q_theta = 0;       // d log Q / d log theta across equilibria
    double eps_lambda_Q = 0;      // d log lambda / d log Q at fixed theta
};

PayrollComponents payroll_tax_components(const EconomyParams& params,
                                         const FiniteDiffOptions& fd = {});

// | direct eps_L_theta  -  composition from the labor FOC |, i.e. the gap in
//   eps_L_theta = e/(1+e(1-rho)) (eps_lt + eps_lQ eps_Qt - 1)
//               + (1-rho) e/(1+e(1-rho)) eps_Qt.
// The identity holds at any solvable parameters.
double verify_composition_eq14(const EconomyParams& params, const FiniteDiffOptions& fd = {});

// Hicks-Marshall limits at equilibrium cost shares:
//   eps_L_theta^inf = -s_K/(1-rho) - s_L * eta
//   eps_K_theta^inf = +s_L/(1-rho) - s_L * eta
std::pair<double, double> competitive_limit_elasticities(double cost_share_L, double cost_share_K,
                                                         double rho, double eta);

struct ReformEffect {
    double beta_L = 0;
    double beta_K = 0;
    double beta_R = 0;
    double phi1 = 0;  // first-stage log labor-cost change (negative for a cut)
    double phi2 = 0;  // first-stage log revenue-tax change
};

// beta_X = eps_X_theta * phi1 - (revenue-tax elasticity of X) * phi2, with the
// labor leg from the numeric oracle (zeta) and the capital/revenue legs from
// the closed forms (xi, nu). All revenue-tax terms vanish at tau_rev = 0.
ReformEffect reform_effect(const EconomyParams& params, double phi1, double phi2,
                           const FiniteDiffOptions& fd = {});

// One parameter point, all elasticities. Analytic entries exist only where a
// closed form does; the appendix terms chi / Omega / psi have no published
// form and are exposed as implied values, never asserted.
struct ElasticityReport {
    EconomyParams params;
    // payroll-tax elasticities (numeric)
    double eps_L_theta = 0;
    double eps_K_theta = 0;
    double eps_R_theta = 0;
    PayrollComponents components;
    // revenue-tax elasticities
    double nu_analytic = 0;
    double xi_analytic = 0;
    double nu_numeric = 0;    // NaN when tau_rev = 0 (no log shock exists)
    double xi_numeric = 0;
    double zeta_numeric = 0;
    // implied appendix terms
    double chi_implied = 0;    // zeta_numeric / xi_analytic
    double omega_implied = 0;  // from eps_L_theta = e/(1+e(1-rho)) (Omega - 1)
    double psi_implied = 0;    // from the eps_K_theta display
};

ElasticityReport compute_elasticity_report(const EconomyParams& params,
                                           const FiniteDiffOptions& fd = {});

}  // namespace incidence
