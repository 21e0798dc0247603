#include "incidence/cmdfit.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

#include "incidence/errors.hpp"
#include "incidence/optim.hpp"
#include "incidence/parallel.hpp"
#include "incidence/rootfind.hpp"

namespace incidence {

namespace {

constexpr double kPenalty = 1e12;

Eigen::Matrix3d to_eigen(const std::array<std::array<double, 3>, 3>& a) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = a[i][j];
    return m;
}

// Inverse of the moment covariance; ridge 1e-10 on the diagonal if singular.
Eigen::Matrix3d weight_matrix(const MomentVector& mv) {
    Eigen::Matrix3d V = to_eigen(mv.vcov);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(V);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-14 * std::max(1.0, hi))) V += 1e-10 * Eigen::Matrix3d::Identity();
    return V.inverse();
}

EconomyParams candidate_params(double eps, double eta, double rho, const EconomyParams& base) {
    EconomyParams p = base;
    p.eps = eps;
    p.eta = eta;
    p.rho = rho;
    return p;
}

}  // namespace

void MomentVector::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (vcov[i][i] < 0.0) throw ConfigError("moment vcov has a negative diagonal entry");
        for (int j = 0; j < i; ++j)
            if (std::fabs(vcov[i][j] - vcov[j][i]) > 1e-12)
                throw ConfigError("moment vcov must be symmetric");
    }
}

std::array<double, 3> model_moments(double eps, double eta, double rho, const EconomyParams& base,
                                    double phi1, double phi2) {
    ReformEffect re = reform_effect(candidate_params(eps, eta, rho, base), phi1, phi2);
    return {re.beta_L, re.beta_K, re.beta_R};
}

double cmd_objective(const MomentVector& moments, const EconomyParams& candidate, double phi1,
                     double phi2) {
    moments.validate();
    Eigen::Matrix3d W = weight_matrix(moments);
    Eigen::Vector3d beta(moments.beta_L, moments.beta_K, moments.beta_R);
    Eigen::Vector3d m;
    try {
        auto mm = model_moments(candidate.eps, candidate.eta, candidate.rho, candidate, phi1, phi2);
        m << mm[0], mm[1], mm[2];
    } catch (const std::exception&) {
        return kPenalty;
    }
    Eigen::Vector3d d = beta - m;
    return d.dot(W * d);
}

CmdResult cmd_estimate(const MomentVector& moments, double phi1, double phi2,
                       const EconomyParams& base, const CmdOptions& opt) {
    moments.validate();
    const ParamBox& box = opt.box;
    if (!(box.eps_lo > 0) || !(box.eta_lo > 0) || !(box.rho_hi < 1.0))
        throw ConfigError("cmd_estimate: invalid parameter box");
    if (base.market_mode == MarketMode::markup && box.eta_lo <= 1.0)
        throw ConfigError("cmd_estimate: markup mode requires eta box above 1");
    if (opt.starts < 1) throw ConfigError("cmd_estimate: starts must be >= 1");

    Eigen::Matrix3d W = weight_matrix(moments);
    Eigen::Vector3d beta(moments.beta_L, moments.beta_K, moments.beta_R);
    std::atomic<int> penalized{0};

    // Optimize in (log eps, log eta, rho); decades of eps are then one unit.
    const double lo[3] = {std::log(box.eps_lo), std::log(box.eta_lo), box.rho_lo};
    const double hi[3] = {std::log(box.eps_hi), std::log(box.eta_hi), box.rho_hi};

    auto objective = [&](const std::vector<double>& x) {
        for (int d = 0; d < 3; ++d)
            if (x[d] < lo[d] || x[d] > hi[d]) {
                double excess = std::max(lo[d] - x[d], x[d] - hi[d]);
                return kPenalty * (1.0 + excess);
            }
        try {
            auto mm =
                model_moments(std::exp(x[0]), std::exp(x[1]), x[2], base, phi1, phi2);
            Eigen::Vector3d m(mm[0], mm[1], mm[2]);
            Eigen::Vector3d d = beta - m;
            return d.dot(W * d);
        } catch (const std::exception&) {
            penalized.fetch_add(1);
            return kPenalty;
        }
    };

    std::mt19937_64 rng(opt.seed);
    auto lhs = latin_hypercube(opt.starts, 3, rng);

    std::vector<NelderMeadResult> runs(opt.starts);
    parallel_for(opt.starts, opt.workers, [&](int s) {
        std::vector<double> x0(3), step(3);
        for (int d = 0; d < 3; ++d) {
            double width = hi[d] - lo[d];
            x0[d] = lo[d] + lhs[s][d] * width;
            step[d] = 0.1 * width;
        }
        NelderMeadOptions nm;
        nm.f_tol = opt.obj_tol;
        nm.simplex_tol = opt.simplex_tol;
        nm.max_iter = opt.max_iter;
        runs[s] = nelder_mead(objective, x0, step, nm);
    });

    int best = 0;
    for (int s = 1; s < opt.starts; ++s)
        if (runs[s].fx < runs[best].fx) best = s;

    // Polish the incumbent on the simplex-diameter criterion alone, so the
    // minimizer location does not depend on the scale of the weight matrix.
    if (runs[best].fx < kPenalty) {
        std::vector<double> step(3);
        for (int d = 0; d < 3; ++d) step[d] = 1e-4 * (hi[d] - lo[d]);
        NelderMeadOptions nm;
        nm.f_tol = 0.0;
        nm.simplex_tol = 1e-9;
        nm.max_iter = 200;
        NelderMeadResult polished = nelder_mead(objective, runs[best].x, step, nm);
        if (polished.fx <= runs[best].fx) {
            polished.converged = polished.converged || runs[best].converged;
            runs[best] = polished;
        }
    }

    CmdResult res;
    res.eps_hat = std::exp(runs[best].x[0]);
    res.eta_hat = std::exp(runs[best].x[1]);
    res.rho_hat = runs[best].x[2];
    res.sigma_KL_hat = 1.0 / (1.0 - res.rho_hat);
    res.objective_value = runs[best].fx;
    res.converged = runs[best].converged && runs[best].fx < kPenalty;
    res.starts_tried = opt.starts;
    res.penalized_evals = penalized.load();
    return res;
}

namespace {

// Employment elasticity wrt theta at candidate rho, markup or price-taking
// depending on eta.
double eps_L_theta_at(double eps, double eta, double rho, const EconomyParams& base) {
    EconomyParams p = candidate_params(eps, eta, rho, base);
    p.market_mode = (eta > 1.0) ? MarketMode::markup : MarketMode::price_taking;
    return numeric_elasticity(TargetVar::L, ShockVar::theta, p);
}

}  // namespace

SweepResult sigma_sensitivity_sweep(double beta_L, const std::vector<double>& eps_grid,
                                    const std::vector<double>& eta_grid, double phi1,
                                    const EconomyParams& base, int workers) {
    if (phi1 == 0.0) throw ConfigError("sigma_sensitivity_sweep: phi1 must be nonzero");
    if (eps_grid.empty() || eta_grid.empty())
        throw ConfigError("sigma_sensitivity_sweep: empty grid");
    const double target = beta_L / phi1;

    SweepResult out;
    out.eps_grid = eps_grid;
    out.eta_grid = eta_grid;
    const int nE = static_cast<int>(eps_grid.size());
    const int nH = static_cast<int>(eta_grid.size());
    out.cells.resize(static_cast<std::size_t>(nE) * nH);

    parallel_for(nE * nH, workers, [&](int idx) {
        int i = idx / nH, j = idx % nH;
        SweepCell cell;
        cell.eps = eps_grid[i];
        cell.eta = eta_grid[j];
        // eps_L_theta is decreasing in rho (more substitutable inputs, bigger
        // employment response), so the bracket logic is monotone.
        auto f = [&](double rho) { return eps_L_theta_at(cell.eps, cell.eta, rho, base) - target; };
        double rho = solve_on_interval(f, -20.0, 0.99);
        if (std::isfinite(rho)) {
            cell.rho_hat = rho;
            cell.sigma_hat = 1.0 / (1.0 - rho);
            cell.feasible = true;
        } else {
            cell.rho_hat = std::numeric_limits<double>::quiet_NaN();
            cell.sigma_hat = std::numeric_limits<double>::quiet_NaN();
            cell.feasible = false;
        }
        out.cells[idx] = cell;
    });

    out.competitive_sigma.resize(nH);
    for (int j = 0; j < nH; ++j)
        out.competitive_sigma[j] = competitive_inversion(beta_L, eta_grid[j], phi1, base);
    return out;
}

double competitive_inversion(double beta_L, double eta, double phi1, const EconomyParams& base) {
    const double target = beta_L / phi1;
    // Self-consistent inversion: the Hicks-Marshall formula evaluated at cost
    // shares measured on a competitive-labor equilibrium at the implied rho.
    auto f = [&](double rho) {
        EconomyParams p = candidate_params(1e6, eta, rho, base);
        p.market_mode = (eta > 1.0) ? MarketMode::markup : MarketMode::price_taking;
        FirmEquilibrium eq = profit_maximize(p);
        double sL = labor_cost_share(p, eq);
        auto [eL, eK] = competitive_limit_elasticities(sL, 1.0 - sL, rho, eta);
        (void)eK;
        return eL - target;
    };
    double rho = solve_on_interval(f, -20.0, 0.99);
    if (!std::isfinite(rho)) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 / (1.0 - rho);
}

}  // namespace incidence
