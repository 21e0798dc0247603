// incidence: solve the tax-incidence firm model, compute elasticities, fit
// (eps, eta, rho) by minimum distance, generate synthetic reform panels, and
// run the panel estimators. Every command reads one JSON config and writes
// its artifacts plus a manifest into --out.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "incidence/errors.hpp"
#include "incidence/report.hpp"

using namespace incidence;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string command;
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int workers = 1;
    bool seed_given = false;
};

json load_config(const RunConfig& rc) {
    if (rc.config_path.empty()) throw ConfigError("missing --config PATH");
    std::ifstream f(rc.config_path);
    if (!f) throw ConfigError("cannot open config: " + rc.config_path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown config key in " + where + ": " + it.key());
    }
}

void write_manifest(const RunConfig& rc, const json& config,
                    const std::vector<std::string>& artifacts) {
    json m{{"command", rc.command},
           {"config", config},
           {"config_path", rc.config_path},
           {"seed", rc.seed},
           {"workers", rc.workers},
           {"artifacts", artifacts}};
    write_text_atomic((fs::path(rc.out_dir) / "manifest.json").string(), m.dump(2) + "\n");
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    return (fs::path(rc.out_dir) / name).string();
}

FiniteDiffOptions fd_from(const json& j) {
    FiniteDiffOptions fd;
    fd.h = j.value("h", fd.h);
    fd.richardson = j.value("richardson", fd.richardson);
    if (!(fd.h > 0)) throw ConfigError("h must be > 0");
    return fd;
}

// ---------------------------------------------------------------- economy --

int cmd_economy_solve(const RunConfig& rc) {
    json cfg = load_config(rc);
    EconomyParams p = economy_params_from_json(cfg);
    FirmEquilibrium eq = profit_maximize(p);
    write_text_atomic(out_path(rc, "equilibrium.json"),
                      json{{"params", to_json(p)}, {"equilibrium", to_json(eq)}}.dump(2) + "\n");
    write_text_atomic(out_path(rc, "equilibrium.csv"), firm_equilibrium_csv(eq));
    write_manifest(rc, cfg, {"equilibrium.json", "equilibrium.csv"});
    return 0;
}

int cmd_economy_elasticities(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"params", "h", "richardson", "phi1", "phi2"}, "economy elasticities");
    if (!cfg.contains("params")) throw ConfigError("missing config key: params");
    EconomyParams p = economy_params_from_json(cfg["params"]);
    ElasticityReport rep = compute_elasticity_report(p, fd_from(cfg));
    json out = to_json(rep);
    out["eq14_residual"] = verify_composition_eq14(p, fd_from(cfg));
    if (cfg.contains("phi1"))
        out["reform_effect"] = to_json(
            reform_effect(p, cfg["phi1"].get<double>(), cfg.value("phi2", 0.0), fd_from(cfg)));
    if (p.tau_rev > 0 && p.m < 1.0)
        out["note"] = "nu/xi closed forms treat aggregate responses under the industry fixed "
                      "point; numeric gaps at small m are expected and reported, not hidden";
    write_text_atomic(out_path(rc, "elasticities.json"), out.dump(2) + "\n");
    write_text_atomic(out_path(rc, "elasticities.csv"),
                      elasticity_report_csv_header() + elasticity_report_csv_row(rep));
    write_manifest(rc, cfg, {"elasticities.json", "elasticities.csv"});
    return 0;
}

int cmd_economy_limits(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"params", "cost_share_L", "rho", "eta"}, "economy limits");
    double sL, rho, eta;
    json out;
    if (cfg.contains("params")) {
        EconomyParams p = economy_params_from_json(cfg["params"]);
        FirmEquilibrium eq = profit_maximize(p);
        sL = labor_cost_share(p, eq);
        rho = p.rho;
        eta = p.eta;
        out["measured_cost_share_L"] = sL;
    } else {
        if (!cfg.contains("cost_share_L") || !cfg.contains("rho") || !cfg.contains("eta"))
            throw ConfigError("economy limits needs either params or cost_share_L/rho/eta");
        sL = cfg["cost_share_L"].get<double>();
        rho = cfg["rho"].get<double>();
        eta = cfg["eta"].get<double>();
    }
    auto [eL, eK] = competitive_limit_elasticities(sL, 1.0 - sL, rho, eta);
    out["eps_L_theta_limit"] = eL;
    out["eps_K_theta_limit"] = eK;
    out["sigma_KL"] = 1.0 / (1.0 - rho);
    write_text_atomic(out_path(rc, "limits.json"), out.dump(2) + "\n");
    write_manifest(rc, cfg, {"limits.json"});
    return 0;
}

// -------------------------------------------------------------------- cmd --

MomentVector moments_from_json(const json& j) {
    reject_unknown(j, {"beta_L", "beta_K", "beta_R", "vcov"}, "moments");
    MomentVector mv;
    mv.beta_L = j.at("beta_L").get<double>();
    mv.beta_K = j.at("beta_K").get<double>();
    mv.beta_R = j.at("beta_R").get<double>();
    if (j.contains("vcov")) {
        auto v = j["vcov"];
        if (!v.is_array() || v.size() != 3) throw ConfigError("vcov must be a 3x3 array");
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) mv.vcov[i][k] = v[i][k].get<double>();
    }
    mv.validate();
    return mv;
}

int cmd_cmd_fit(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"moments", "phi1", "phi2", "base_params", "box", "starts"}, "cmd fit");
    MomentVector mv = moments_from_json(cfg.at("moments"));
    double phi1 = cfg.at("phi1").get<double>();
    double phi2 = cfg.value("phi2", 0.0);
    EconomyParams base = cfg.contains("base_params")
                             ? economy_params_from_json(cfg["base_params"])
                             : EconomyParams{};
    CmdOptions opt;
    opt.seed = rc.seed;
    opt.workers = rc.workers;
    opt.starts = cfg.value("starts", opt.starts);
    if (cfg.contains("box")) {
        const json& b = cfg["box"];
        reject_unknown(b, {"eps", "eta", "rho"}, "box");
        if (b.contains("eps")) {
            opt.box.eps_lo = b["eps"][0].get<double>();
            opt.box.eps_hi = b["eps"][1].get<double>();
        }
        if (b.contains("eta")) {
            opt.box.eta_lo = b["eta"][0].get<double>();
            opt.box.eta_hi = b["eta"][1].get<double>();
        }
        if (b.contains("rho")) {
            opt.box.rho_lo = b["rho"][0].get<double>();
            opt.box.rho_hi = b["rho"][1].get<double>();
        }
    }
    CmdResult res = cmd_estimate(mv, phi1, phi2, base, opt);
    write_text_atomic(out_path(rc, "cmd_result.json"), to_json(res).dump(2) + "\n");
    write_manifest(rc, cfg, {"cmd_result.json"});
    if (!res.converged) {
        std::cerr << "cmd fit: no start converged; best incumbent written\n";
        return 2;
    }
    return 0;
}

int cmd_cmd_sweep(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"beta_L", "phi1", "eps_grid", "eta_grid", "base_params"}, "cmd sweep");
    double beta_L = cfg.at("beta_L").get<double>();
    double phi1 = cfg.at("phi1").get<double>();
    std::vector<double> eps_grid = cfg.at("eps_grid").get<std::vector<double>>();
    std::vector<double> eta_grid = cfg.at("eta_grid").get<std::vector<double>>();
    EconomyParams base = cfg.contains("base_params")
                             ? economy_params_from_json(cfg["base_params"])
                             : EconomyParams{};
    SweepResult sw = sigma_sensitivity_sweep(beta_L, eps_grid, eta_grid, phi1, base, rc.workers);
    write_text_atomic(out_path(rc, "sweep.csv"), sweep_csv(sw));
    write_text_atomic(out_path(rc, "sweep.svg"), sweep_svg(sw));
    write_manifest(rc, cfg, {"sweep.csv", "sweep.svg"});
    return 0;
}

// ------------------------------------------------------------------ panel --

SectorTreeConfig tree_config_from_json(const json& j) {
    reject_unknown(j,
                   {"n_sector1", "n_sector5_per_1", "n_sector7_per_5", "n_states",
                    "eligible_share", "cohort_weights", "confound_pretrend", "confound_delta"},
                   "tree");
    SectorTreeConfig tc;
    tc.n_sector1 = j.value("n_sector1", tc.n_sector1);
    tc.n_sector5_per_1 = j.value("n_sector5_per_1", tc.n_sector5_per_1);
    tc.n_sector7_per_5 = j.value("n_sector7_per_5", tc.n_sector7_per_5);
    tc.n_states = j.value("n_states", tc.n_states);
    tc.eligible_share = j.value("eligible_share", tc.eligible_share);
    if (j.contains("cohort_weights")) {
        auto w = j["cohort_weights"].get<std::vector<double>>();
        if (w.size() != 3) throw ConfigError("cohort_weights must have 3 entries");
        tc.cohort_weights = {w[0], w[1], w[2]};
    }
    tc.confound_pretrend = j.value("confound_pretrend", tc.confound_pretrend);
    tc.confound_delta = j.value("confound_delta", tc.confound_delta);
    return tc;
}

FirmPanelConfig firm_config_from_json(const json& j) {
    reject_unknown(j,
                   {"n_firms", "year_min", "year_max", "firm_fe_mu", "firm_fe_sd", "year_fe_sd",
                    "sector1_year_fe_sd", "noise_sd", "serial_corr_rho", "att_small", "att_medium",
                    "att_large", "wage_fe_sd", "wage_noise_sd", "att_wage", "hires_noise_sd",
                    "p_take", "p_ncm", "baseline_tax", "tax_cut"},
                   "firms");
    FirmPanelConfig fc;
    fc.n_firms = j.value("n_firms", fc.n_firms);
    fc.year_min = j.value("year_min", fc.year_min);
    fc.year_max = j.value("year_max", fc.year_max);
    fc.firm_fe_mu = j.value("firm_fe_mu", fc.firm_fe_mu);
    fc.firm_fe_sd = j.value("firm_fe_sd", fc.firm_fe_sd);
    fc.year_fe_sd = j.value("year_fe_sd", fc.year_fe_sd);
    fc.sector1_year_fe_sd = j.value("sector1_year_fe_sd", fc.sector1_year_fe_sd);
    fc.noise_sd = j.value("noise_sd", fc.noise_sd);
    fc.serial_corr_rho = j.value("serial_corr_rho", fc.serial_corr_rho);
    fc.att_small = j.value("att_small", fc.att_small);
    fc.att_medium = j.value("att_medium", fc.att_medium);
    fc.att_large = j.value("att_large", fc.att_large);
    fc.wage_fe_sd = j.value("wage_fe_sd", fc.wage_fe_sd);
    fc.wage_noise_sd = j.value("wage_noise_sd", fc.wage_noise_sd);
    fc.att_wage = j.value("att_wage", fc.att_wage);
    fc.hires_noise_sd = j.value("hires_noise_sd", fc.hires_noise_sd);
    fc.p_take = j.value("p_take", fc.p_take);
    fc.p_ncm = j.value("p_ncm", fc.p_ncm);
    fc.baseline_tax = j.value("baseline_tax", fc.baseline_tax);
    fc.tax_cut = j.value("tax_cut", fc.tax_cut);
    return fc;
}

WorkerPanelConfig worker_config_from_json(const json& j) {
    reject_unknown(j,
                   {"workers_per_firm", "tenure_full_share", "move_rate", "worker_fe_sd",
                    "noise_sd", "att_earnings_by_k", "leader_share"},
                   "workers");
    WorkerPanelConfig wc;
    wc.workers_per_firm = j.value("workers_per_firm", wc.workers_per_firm);
    wc.tenure_full_share = j.value("tenure_full_share", wc.tenure_full_share);
    wc.move_rate = j.value("move_rate", wc.move_rate);
    wc.worker_fe_sd = j.value("worker_fe_sd", wc.worker_fe_sd);
    wc.noise_sd = j.value("noise_sd", wc.noise_sd);
    if (j.contains("att_earnings_by_k"))
        wc.att_earnings_by_k = j["att_earnings_by_k"].get<std::vector<double>>();
    wc.leader_share = j.value("leader_share", wc.leader_share);
    return wc;
}

int cmd_panel_generate(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"tree", "firms", "workers"}, "panel generate");
    SectorTreeConfig tc =
        cfg.contains("tree") ? tree_config_from_json(cfg["tree"]) : SectorTreeConfig{};
    FirmPanelConfig fc =
        cfg.contains("firms") ? firm_config_from_json(cfg["firms"]) : FirmPanelConfig{};
    SectorTree tree = generate_sector_tree(tc, rc.seed);
    PanelDataset p = generate_firm_panel(tree, fc, rc.seed + 1);
    std::vector<std::string> artifacts{"firms.csv"};
    if (cfg.contains("workers")) {
        WorkerPanelConfig wc = worker_config_from_json(cfg["workers"]);
        generate_worker_panel(p, wc, rc.seed + 2);
        write_text_atomic(out_path(rc, "workers.csv"), p.workers.to_csv());
        artifacts.push_back("workers.csv");
    }
    write_text_atomic(out_path(rc, "firms.csv"), p.firms.to_csv());
    json truth = to_json(p.truth);
    write_text_atomic(out_path(rc, "dgp_truth.json"), truth.dump(2) + "\n");
    artifacts.push_back("dgp_truth.json");
    write_manifest(rc, cfg, artifacts);
    return 0;
}

// --------------------------------------------------------------- estimate --

RegressionSpec spec_from_json(const json& j) {
    reject_unknown(j,
                   {"outcome", "endogenous", "instruments", "controls", "fixed_effects",
                    "cluster", "intercept"},
                   "spec");
    RegressionSpec rs;
    rs.outcome = j.at("outcome").get<std::string>();
    if (j.contains("endogenous")) rs.endogenous = j["endogenous"].get<std::vector<std::string>>();
    if (j.contains("instruments"))
        rs.instruments = j["instruments"].get<std::vector<std::string>>();
    if (j.contains("controls")) rs.controls = j["controls"].get<std::vector<std::string>>();
    if (j.contains("fixed_effects"))
        rs.fixed_effects = j["fixed_effects"].get<std::vector<std::vector<std::string>>>();
    if (j.contains("cluster")) rs.cluster = j["cluster"].get<std::vector<std::string>>();
    rs.intercept = j.value("intercept", false);
    return rs;
}

int cmd_estimate_did(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"panel", "spec", "method", "postprocess_dlog_cost"}, "estimate did");
    Table t = Table::read_csv(cfg.at("panel").get<std::string>());
    RegressionSpec rs = spec_from_json(cfg.at("spec"));
    std::string method = cfg.value("method", std::string("tsls"));
    EstimateReport rep;
    if (method == "tsls")
        rep = tsls(t, rs);
    else if (method == "ols")
        rep = ols(t, rs);
    else
        throw ConfigError("unknown method: " + method + " (want ols or tsls)");
    json out = to_json(rep);
    if (cfg.contains("postprocess_dlog_cost") && !rep.coefficients.empty()) {
        double dlog = cfg["postprocess_dlog_cost"].get<double>();
        out["elasticity_wrt_labor_cost"] =
            elasticity_postprocess(rep.coefficients[0].estimate, dlog);
    }
    write_text_atomic(out_path(rc, "estimate.json"), out.dump(2) + "\n");
    write_manifest(rc, cfg, {"estimate.json"});
    return 0;
}

EventStudySpec es_spec_from_json(const json& j) {
    reject_unknown(j,
                   {"outcome", "year", "treat_event_year", "elig_event_year", "controls",
                    "fixed_effects", "cluster", "k_min", "k_max"},
                   "spec");
    EventStudySpec es;
    es.outcome = j.at("outcome").get<std::string>();
    es.year = j.value("year", es.year);
    es.treat_event_year = j.value("treat_event_year", es.treat_event_year);
    es.elig_event_year = j.value("elig_event_year", es.elig_event_year);
    if (j.contains("controls")) es.controls = j["controls"].get<std::vector<std::string>>();
    if (j.contains("fixed_effects"))
        es.fixed_effects = j["fixed_effects"].get<std::vector<std::vector<std::string>>>();
    if (j.contains("cluster")) es.cluster = j["cluster"].get<std::vector<std::string>>();
    es.k_min = j.value("k_min", es.k_min);
    es.k_max = j.value("k_max", es.k_max);
    return es;
}

int cmd_estimate_event_study(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"panel", "spec"}, "estimate event-study");
    Table t = Table::read_csv(cfg.at("panel").get<std::string>());
    EventStudySpec es = es_spec_from_json(cfg.at("spec"));
    EstimateReport rep = event_study(t, es);
    write_text_atomic(out_path(rc, "estimate.json"), to_json(rep).dump(2) + "\n");
    write_text_atomic(out_path(rc, "event_study.csv"), event_study_csv(rep));
    write_text_atomic(out_path(rc, "event_study.svg"), event_study_svg(rep, es.outcome));
    write_manifest(rc, cfg, {"estimate.json", "event_study.csv", "event_study.svg"});
    return 0;
}

int cmd_estimate_match_did(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"panel", "config"}, "estimate match-did");
    Table t = Table::read_csv(cfg.at("panel").get<std::string>());
    MatchConfig mc;
    if (cfg.contains("config")) {
        const json& j = cfg["config"];
        reject_unknown(j,
                       {"match_vars", "unit", "year", "treat", "outcome", "pre_year_max",
                        "fixed_effects", "cluster", "n_deciles"},
                       "config");
        if (j.contains("match_vars"))
            mc.match_vars = j["match_vars"].get<std::vector<std::string>>();
        mc.unit = j.value("unit", mc.unit);
        mc.year = j.value("year", mc.year);
        mc.treat = j.value("treat", mc.treat);
        mc.outcome = j.value("outcome", mc.outcome);
        mc.pre_year_max = j.value("pre_year_max", mc.pre_year_max);
        if (j.contains("fixed_effects"))
            mc.fixed_effects = j["fixed_effects"].get<std::vector<std::vector<std::string>>>();
        if (j.contains("cluster")) mc.cluster = j["cluster"].get<std::vector<std::string>>();
        mc.n_deciles = j.value("n_deciles", mc.n_deciles);
    }
    MatchResult res = matching_did(t, mc);
    json out = to_json(res.did);
    out["treated_units"] = res.treated_units;
    out["matched_pairs"] = res.matched_pairs;
    out["unmatched_treated"] = res.unmatched_treated;
    write_text_atomic(out_path(rc, "estimate.json"), out.dump(2) + "\n");
    write_text_atomic(out_path(rc, "matched.csv"), res.matched.to_csv());
    write_manifest(rc, cfg, {"estimate.json", "matched.csv"});
    return 0;
}

int cmd_estimate_balance(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"panel", "covariates", "eligibility", "fixed_effects", "cluster"},
                   "estimate balance");
    Table t = Table::read_csv(cfg.at("panel").get<std::string>());
    std::vector<std::string> covs = cfg.at("covariates").get<std::vector<std::string>>();
    std::string elig = cfg.value("eligibility", std::string("eligible_now"));
    std::vector<std::vector<std::string>> fes =
        cfg.contains("fixed_effects")
            ? cfg["fixed_effects"].get<std::vector<std::vector<std::string>>>()
            : std::vector<std::vector<std::string>>{{"firm_id"}, {"year"}, {"sector_1d", "year"}};
    std::vector<std::string> cluster =
        cfg.contains("cluster") ? cfg["cluster"].get<std::vector<std::string>>()
                                : std::vector<std::string>{"sector_5d", "state"};
    BalanceResult res = balance_check(t, covs, elig, fes, cluster);
    json base = json::array(), twfe = json::array();
    for (const auto& c : res.baseline) base.push_back(to_json(c));
    for (const auto& c : res.twfe) twfe.push_back(to_json(c));
    json out{{"baseline", base}, {"twfe", twfe}, {"dropped_twfe", res.dropped_twfe}, {"n", res.n}};
    write_text_atomic(out_path(rc, "balance.json"), out.dump(2) + "\n");
    write_manifest(rc, cfg, {"balance.json"});
    return 0;
}

// ----------------------------------------------------------------- report --

int cmd_report_plot(const RunConfig& rc) {
    json cfg = load_config(rc);
    reject_unknown(cfg, {"input", "kind", "title"}, "report plot");
    std::string input = cfg.at("input").get<std::string>();
    std::string kind = cfg.at("kind").get<std::string>();
    std::string title = cfg.value("title", kind);
    Table t = Table::read_csv(input);
    if (kind == "event-study") {
        EstimateReport rep;
        for (std::size_t i = 0; i < t.rows(); ++i) {
            rep.event_k.push_back(static_cast<int>(t.col("k")[i]));
            rep.beta_k.push_back(t.col("beta")[i]);
            rep.se_k.push_back(t.col("se")[i]);
        }
        write_text_atomic(out_path(rc, "plot.svg"), event_study_svg(rep, title));
    } else if (kind == "sweep") {
        SweepResult sw;
        std::vector<double> etas;
        for (std::size_t i = 0; i < t.rows(); ++i) {
            double eps = t.col("eps")[i];
            double eta = t.col("eta")[i];
            if (std::find(sw.eps_grid.begin(), sw.eps_grid.end(), eps) == sw.eps_grid.end() &&
                std::isfinite(eps))
                sw.eps_grid.push_back(eps);
            if (std::find(etas.begin(), etas.end(), eta) == etas.end()) etas.push_back(eta);
        }
        sw.eta_grid = etas;
        sw.cells.resize(sw.eps_grid.size() * etas.size());
        sw.competitive_sigma.assign(etas.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < t.rows(); ++i) {
            double eps = t.col("eps")[i];
            double eta = t.col("eta")[i];
            std::size_t j =
                std::find(etas.begin(), etas.end(), eta) - etas.begin();
            if (!std::isfinite(eps)) {
                sw.competitive_sigma[j] = t.col("sigma_hat")[i];
                continue;
            }
            std::size_t e =
                std::find(sw.eps_grid.begin(), sw.eps_grid.end(), eps) - sw.eps_grid.begin();
            SweepCell& cell = sw.cells[e * etas.size() + j];
            cell.eps = eps;
            cell.eta = eta;
            cell.feasible = t.col("feasible")[i] > 0.5;
            cell.sigma_hat = t.col("sigma_hat")[i];
        }
        write_text_atomic(out_path(rc, "plot.svg"), sweep_svg(sw, title));
    } else {
        throw ConfigError("unknown plot kind: " + kind + " (want event-study or sweep)");
    }
    write_manifest(rc, cfg, {"plot.svg"});
    return 0;
}

void apply_env_overrides(RunConfig& rc) {
    if (const char* v = std::getenv("INCIDENCE_CONFIG"); v && rc.config_path.empty())
        rc.config_path = v;
    if (const char* v = std::getenv("INCIDENCE_OUT"); v && rc.out_dir == "out") rc.out_dir = v;
    if (const char* v = std::getenv("INCIDENCE_SEED"); v && !rc.seed_given)
        rc.seed = std::strtoull(v, nullptr, 10);
    if (const char* v = std::getenv("INCIDENCE_WORKERS"); v && rc.workers == 1)
        rc.workers = std::atoi(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"payroll-tax incidence model: solver, elasticities, CMD fit, synthetic panels, "
                 "panel estimators"};
    app.require_subcommand(1);

    RunConfig rc;
    auto add_common = [&rc](CLI::App* cmd) {
        cmd->add_option("--config", rc.config_path, "JSON config path");
        cmd->add_option("--out", rc.out_dir, "output directory");
        cmd->add_option("--seed", rc.seed, "RNG seed")->each([&rc](const std::string&) {
            rc.seed_given = true;
        });
        cmd->add_option("--workers", rc.workers, "parallel workers");
    };

    CLI::App* economy = app.add_subcommand("economy", "firm-model solvers");
    economy->require_subcommand(1);
    CLI::App* eco_solve = economy->add_subcommand("solve", "solve one firm equilibrium");
    CLI::App* eco_elast = economy->add_subcommand("elasticities", "full elasticity report");
    CLI::App* eco_limits = economy->add_subcommand("limits", "competitive-limit formulas");
    CLI::App* cmdfit = app.add_subcommand("cmd", "classical minimum distance");
    cmdfit->require_subcommand(1);
    CLI::App* cmd_fit = cmdfit->add_subcommand("fit", "estimate (eps, eta, rho)");
    CLI::App* cmd_sweep = cmdfit->add_subcommand("sweep", "sigma_KL sensitivity sweep");
    CLI::App* panel = app.add_subcommand("panel", "synthetic panels");
    panel->require_subcommand(1);
    CLI::App* panel_gen = panel->add_subcommand("generate", "generate firm/worker panels");
    CLI::App* est = app.add_subcommand("estimate", "panel estimators");
    est->require_subcommand(1);
    CLI::App* est_did = est->add_subcommand("did", "pooled DiD (OLS or IV)");
    CLI::App* est_es = est->add_subcommand("event-study", "event-study IV");
    CLI::App* est_match = est->add_subcommand("match-did", "matching DiD");
    CLI::App* est_bal = est->add_subcommand("balance", "balance regressions");
    CLI::App* report = app.add_subcommand("report", "re-render artifacts");
    report->require_subcommand(1);
    CLI::App* report_plot = report->add_subcommand("plot", "SVG from a CSV artifact");

    for (CLI::App* c : {eco_solve, eco_elast, eco_limits, cmd_fit, cmd_sweep, panel_gen, est_did,
                        est_es, est_match, est_bal, report_plot})
        add_common(c);

    CLI11_PARSE(app, argc, argv);
    apply_env_overrides(rc);

    try {
        if (eco_solve->parsed()) {
            rc.command = "economy solve";
            return cmd_economy_solve(rc);
        }
        if (eco_elast->parsed()) {
            rc.command = "economy elasticities";
            return cmd_economy_elasticities(rc);
        }
        if (eco_limits->parsed()) {
            rc.command = "economy limits";
            return cmd_economy_limits(rc);
        }
        if (cmd_fit->parsed()) {
            rc.command = "cmd fit";
            return cmd_cmd_fit(rc);
        }
        if (cmd_sweep->parsed()) {
            rc.command = "cmd sweep";
            return cmd_cmd_sweep(rc);
        }
        if (panel_gen->parsed()) {
            rc.command = "panel generate";
            return cmd_panel_generate(rc);
        }
        if (est_did->parsed()) {
            rc.command = "estimate did";
            return cmd_estimate_did(rc);
        }
        if (est_es->parsed()) {
            rc.command = "estimate event-study";
            return cmd_estimate_event_study(rc);
        }
        if (est_match->parsed()) {
            rc.command = "estimate match-did";
            return cmd_estimate_match_did(rc);
        }
        if (est_bal->parsed()) {
            rc.command = "estimate balance";
            return cmd_estimate_balance(rc);
        }
        if (report_plot->parsed()) {
            rc.command = "report plot";
            return cmd_report_plot(rc);
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
