#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "incidence/table.hpp"

namespace incidence {

struct RegressionSpec {
    std::string outcome;
    std::vector<std::string> endogenous;   // instrumented in tsls; plain regressors in ols
    std::vector<std::string> instruments;  // excluded instruments (tsls only)
    std::vector<std::string> controls;
    std::vector<std::vector<std::string>> fixed_effects;  // each entry: columns combined into one FE
    std::vector<std::string> cluster;                     // columns combined into the cluster key
    bool intercept = false;                               // only sensible without fixed effects
};

struct Coef {
    std::string name;
    double estimate = 0;
    double se = 0;
    double t = 0;
};

struct EstimateReport {
    std::vector<Coef> coefficients;
    std::vector<Coef> first_stage;  // instrument coefficients, per endogenous column
    double first_stage_F = 0;       // min cluster-robust Wald F across endogenous columns
    long n = 0;
    int n_clusters = 0;
    int absorb_iterations = 0;
    int singletons_dropped = 0;
    std::vector<std::string> dropped_columns;  // collinear columns removed with a warning
    // event-study layout (filled by event_study)
    std::vector<int> event_k;
    std::vector<double> beta_k;
    std::vector<double> se_k;
    std::vector<int> omitted_k;  // window cells with no observations

    const Coef& coef(const std::string& name) const;
};

// Iterated demeaning (alternating projections) across FE dimensions, in
// place, until the largest adjustment in a full sweep drops below tol.
// Returns the sweep count; throws SolverError naming the worst column on
// non-convergence.
int absorb_fixed_effects(Eigen::MatrixXd& m, const std::vector<std::vector<int>>& fe_ids,
                         double tol = 1e-10, int max_sweeps = 10000);

EstimateReport ols(const Table& data, const RegressionSpec& spec);
EstimateReport tsls(const Table& data, const RegressionSpec& spec);

struct EventStudySpec {
    std::string outcome;
    std::string year = "year";
    std::string treat_event_year = "treat_event_year";  // 0 = never treated
    std::string elig_event_year = "elig_event_year";    // 0 = never eligible
    std::vector<std::string> controls;
    std::vector<std::vector<std::string>> fixed_effects;
    std::vector<std::string> cluster;
    int k_min = -4;
    int k_max = 3;  // k = -1 excluded (normalization)
};

// Treatment-event dummies instrumented by eligibility-event interactions,
// one first stage per k; beta_{-1} normalized to zero by exclusion.
EstimateReport event_study(const Table& panel, const EventStudySpec& spec);

struct MatchConfig {
    std::vector<std::string> match_vars{"log_employment", "log_avg_wage", "log_hires"};
    std::string unit = "firm_id";
    std::string year = "year";
    std::string treat = "treated_now";  // ever-treated flag is derived from this
    std::string outcome = "log_employment";
    int pre_year_max = 2011;
    std::vector<std::vector<std::string>> fixed_effects{{ "firm_id" }, { "year" }};
    std::vector<std::string> cluster{"sector_5d", "state"};
    int n_deciles = 10;
};

struct MatchResult {
    Table matched;  // panel rows of matched treated + control units
    EstimateReport did;
    int treated_units = 0;
    int matched_pairs = 0;
    int unmatched_treated = 0;
};

// Exact match on the decile tuple of pre-period means; logistic propensity
// score breaks ties via nearest-neighbor 1:1 matching without replacement;
// DiD estimated on the matched panel.
MatchResult matching_did(const Table& panel, const MatchConfig& config);

struct BalanceResult {
    std::vector<Coef> baseline;  // eligibility on covariates, no fixed effects
    std::vector<Coef> twfe;      // same with the two-way FE structure
    std::vector<std::string> dropped_twfe;
    long n = 0;
};

BalanceResult balance_check(const Table& panel, const std::vector<std::string>& covariates,
                            const std::string& eligibility,
                            const std::vector<std::vector<std::string>>& fixed_effects,
                            const std::vector<std::string>& cluster);

// beta / dlog_cost, the elasticity implied by a reduced-form effect and the
// first-stage labor-cost change.
double elasticity_postprocess(double beta_outcome, double dlog_cost);

}  // namespace incidence
