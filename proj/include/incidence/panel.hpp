#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "incidence/table.hpp"

namespace incidence {

struct SectorTreeConfig {
    int n_sector1 = 5;        // 1-digit industries
    int n_sector5_per_1 = 5;  // 5-digit children per 1-digit
    int n_sector7_per_5 = 4;  // 7-digit children per 5-digit
    int n_states = 27;
    double eligible_share = 0.3;                      // share of 7-digit sectors ever eligible
    std::array<double, 3> cohort_weights{1.0, 1.0, 1.0};  // 2012 : 2013 : 2014 mix
    bool confound_pretrend = false;  // ties a trend to eligibility (breaks parallel trends)
    double confound_delta = 0.0;     // per-year log shift for eligible sectors
};

struct Sector7 {
    long code7 = 0;
    long code5 = 0;
    long code1 = 0;
    int cohort = 0;  // eligibility year 2012/2013/2014, or 0 = never
};

struct SectorTree {
    std::vector<Sector7> sectors;
    int n_states = 0;
    SectorTreeConfig config;
};

SectorTree generate_sector_tree(const SectorTreeConfig& config, std::uint64_t seed);

struct FirmPanelConfig {
    int n_firms = 5000;
    int year_min = 2008;
    int year_max = 2017;
    // log employment DGP
    double firm_fe_mu = 2.5;   // log-normal size distribution
    double firm_fe_sd = 1.2;
    double year_fe_sd = 0.02;
    double sector1_year_fe_sd = 0.02;
    double noise_sd = 0.05;
    double serial_corr_rho = 0.0;  // AR(1) in the error; 0 = iid
    // treatment effects on log employment, by pre-reform size class
    double att_small = 0.09;
    double att_medium = 0.09;
    double att_large = 0.09;
    // log average wage DGP (its own FE and noise; default no treatment effect)
    double wage_fe_sd = 0.3;
    double wage_noise_sd = 0.05;
    double att_wage = 0.0;
    // hires: correlated with size, no treatment effect (separations story)
    double hires_noise_sd = 0.3;
    // compliance
    double p_take = 0.7;  // take-up hazard in eligible sectors at the cohort year
    double p_ncm = 0.05;  // product-criterion treatment among never-eligible firms
    // taxes
    double baseline_tax = 0.3178;
    double tax_cut = 0.20;
};

struct WorkerPanelConfig {
    int workers_per_firm = 3;
    double tenure_full_share = 0.7;  // share of workers hired by 2009 (tenure >= 3)
    double move_rate = 0.03;         // per-year chance of switching employers
    double worker_fe_sd = 0.3;
    double noise_sd = 0.04;
    std::vector<double> att_earnings_by_k{0.0, 0.0, 0.02, 0.04};  // log points at k = 0,1,2,...
    double leader_share = 0.2;
};

// Everything an estimator needs to be scored against the generator.
struct DgpTruth {
    double att_employment = 0;  // pooled (equal-weight average over size classes)
    double att_small = 0, att_medium = 0, att_large = 0;
    std::vector<double> att_net_earnings_by_k;
    double take_up_prob = 0;
    double ncm_prob = 0;
    double first_stage_dlog_cost = 0;  // log((1 + tau - cut)/(1 + tau))
    double serial_corr_rho = 0;
    std::uint64_t seed = 0;
    int n_firms = 0;
    int n_workers = 0;
};

struct PanelDataset {
    Table firms;
    Table workers;  // empty until generate_worker_panel fills it
    SectorTree tree;
    DgpTruth truth;
};

// Treatment assignment: eligible firms take up at their sector's cohort year
// with probability p_take (one absorbing draw); never-eligible firms enter
// through the product criterion from 2012 with probability p_ncm. Returns
// the first treated year per firm, 0 = never. firm_sector indexes into
// tree.sectors.
std::vector<int> assign_compliance(const SectorTree& tree, const std::vector<int>& firm_sector,
                                   double p_take, double p_ncm, std::uint64_t seed);

// Firm-year table; column order is fixed (see README).
PanelDataset generate_firm_panel(const SectorTree& tree, const FirmPanelConfig& config,
                                 std::uint64_t seed);

// Adds the worker-year table (stable incumbents of the firm panel).
void generate_worker_panel(PanelDataset& panel, const WorkerPanelConfig& config,
                           std::uint64_t seed);

}  // namespace incidence
