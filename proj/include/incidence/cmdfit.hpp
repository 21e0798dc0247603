#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "incidence/economy.hpp"
#include "incidence/elasticities.hpp"

namespace incidence {

// Reduced-form semi-elasticities of the reform and their covariance.
struct MomentVector {
    double beta_L = 0;
    double beta_K = 0;
    double beta_R = 0;
    std::array<std::array<double, 3>, 3> vcov{};  // symmetric, diagonal >= 0

    void validate() const;
};

struct ParamBox {
    double eps_lo = 0.1, eps_hi = 100.0;
    double eta_lo = 1.01, eta_hi = 10.0;
    double rho_lo = -5.0, rho_hi = 0.99;
};

struct CmdOptions {
    ParamBox box;
    int starts = 8;  // Latin-hypercube multistart count
    std::uint64_t seed = 1;
    double obj_tol = 1e-8;
    double simplex_tol = 1e-7;
    int max_iter = 600;
    int workers = 1;
};

struct CmdResult {
    double eps_hat = 0;
    double eta_hat = 0;
    double rho_hat = 0;
    double sigma_KL_hat = 0;  // 1 / (1 - rho_hat)
    double objective_value = 0;
    bool converged = false;
    int starts_tried = 0;
    int penalized_evals = 0;  // candidate draws where the model solver failed
};

// Model-implied moments at candidate (eps, eta, rho); everything else (taxes,
// shares, normalizations, m) comes from `base`.
std::array<double, 3> model_moments(double eps, double eta, double rho, const EconomyParams& base,
                                    double phi1, double phi2);

// [beta - m(params)]' W [beta - m(params)] with W the inverse moment
// covariance (ridge 1e-10 when singular). Solver failures at the candidate
// score 1e12 so the minimizer routes around them.
double cmd_objective(const MomentVector& moments, const EconomyParams& candidate, double phi1,
                     double phi2);

CmdResult cmd_estimate(const MomentVector& moments, double phi1, double phi2,
                       const EconomyParams& base, const CmdOptions& opt = {});

// One cell of the substitution-elasticity sensitivity sweep.
struct SweepCell {
    double eps = 0;
    double eta = 0;
    double rho_hat = 0;
    double sigma_hat = 0;
    bool feasible = false;
};

struct SweepResult {
    std::vector<double> eps_grid;
    std::vector<double> eta_grid;
    std::vector<SweepCell> cells;            // row-major: eps index outer, eta inner
    std::vector<double> competitive_sigma;   // analytic inversion per eta (NaN if none)
};

// For fixed empirical beta_L and first stage phi1, invert the employment
// elasticity for rho at every (eps, eta) grid point and report
// sigma = 1/(1-rho). eta <= 1 cells run in price-taking mode; cells with no
// root in rho in [-20, 0.99] are flagged infeasible, not fabricated.
SweepResult sigma_sensitivity_sweep(double beta_L, const std::vector<double>& eps_grid,
                                    const std::vector<double>& eta_grid, double phi1,
                                    const EconomyParams& base, int workers = 1);

// Competitive-limit inversion at equilibrium cost shares: the sigma solving
// -s_K*sigma - s_L*eta = beta_L/phi1, with shares measured on a large-eps
// equilibrium at the implied rho (solved self-consistently).
double competitive_inversion(double beta_L, double eta, double phi1, const EconomyParams& base);

}  // namespace incidence
