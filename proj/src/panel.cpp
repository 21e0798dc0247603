#include "incidence/panel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "incidence/errors.hpp"

namespace incidence {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint64_t>(0x1ce5u), seed, purpose};
    return std::mt19937_64(seq);
}

const char* size_class_of(double pre_employment) {
    if (pre_employment < 9.0) return "small";
    if (pre_employment < 50.0) return "medium";
    return "large";
}

}  // namespace

SectorTree generate_sector_tree(const SectorTreeConfig& config, std::uint64_t seed) {
    if (config.n_sector1 < 1 || config.n_sector5_per_1 < 1 || config.n_sector7_per_5 < 1 ||
        config.n_states < 1)
        throw ConfigError("sector tree: counts per level must be >= 1");
    if (!(config.eligible_share >= 0.0 && config.eligible_share <= 1.0))
        throw ConfigError("sector tree: eligible_share must lie in [0, 1]");

    SectorTree tree;
    tree.config = config;
    tree.n_states = config.n_states;
    for (int a = 1; a <= config.n_sector1; ++a)
        for (int b = 1; b <= config.n_sector5_per_1; ++b)
            for (int c = 1; c <= config.n_sector7_per_5; ++c) {
                Sector7 s;
                s.code1 = a;
                s.code5 = a * 10000L + b;
                s.code7 = s.code5 * 100L + c;
                tree.sectors.push_back(s);
            }

    // Cohorts drawn independently of anything that enters outcomes, so the
    // default design satisfies parallel trends by construction.
    auto rng = stream(seed, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double wsum = config.cohort_weights[0] + config.cohort_weights[1] + config.cohort_weights[2];
    if (!(wsum > 0)) throw ConfigError("sector tree: cohort weights must sum to > 0");
    for (auto& s : tree.sectors) {
        if (u(rng) < config.eligible_share) {
            double v = u(rng) * wsum;
            s.cohort = v < config.cohort_weights[0]
                           ? 2012
                           : (v < config.cohort_weights[0] + config.cohort_weights[1] ? 2013
                                                                                      : 2014);
        } else {
            s.cohort = 0;
        }
    }
    return tree;
}

std::vector<int> assign_compliance(const SectorTree& tree, const std::vector<int>& firm_sector,
                                   double p_take, double p_ncm, std::uint64_t seed) {
    if (!(p_take >= 0 && p_take <= 1 && p_ncm >= 0 && p_ncm <= 1))
        throw ConfigError("assign_compliance: probabilities must lie in [0, 1]");
    auto rng = stream(seed, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> treat_event(firm_sector.size(), 0);
    for (std::size_t j = 0; j < firm_sector.size(); ++j) {
        int cohort = tree.sectors.at(firm_sector[j]).cohort;
        if (cohort > 0) {
            if (u(rng) < p_take) treat_event[j] = cohort;
        } else {
            if (u(rng) < p_ncm) treat_event[j] = 2012;
        }
    }
    return treat_event;
}

PanelDataset generate_firm_panel(const SectorTree& tree, const FirmPanelConfig& cf,
                                 std::uint64_t seed) {
    if (cf.n_firms < 1) throw ConfigError("firm panel: n_firms must be >= 1");
    if (cf.year_max < cf.year_min) throw ConfigError("firm panel: empty year range");
    if (!(cf.p_take >= 0 && cf.p_take <= 1 && cf.p_ncm >= 0 && cf.p_ncm <= 1))
        throw ConfigError("firm panel: compliance probabilities must lie in [0, 1]");
    if (!(cf.firm_fe_sd >= 0) || !(cf.noise_sd >= 0))
        throw ConfigError("firm panel: negative dispersion");
    if (!(std::fabs(cf.serial_corr_rho) < 1.0))
        throw ConfigError("firm panel: serial_corr_rho must lie in (-1, 1)");

    const int n_years = cf.year_max - cf.year_min + 1;
    const int n_sectors = static_cast<int>(tree.sectors.size());

    // Firm assignments.
    auto rng_assign = stream(seed, 2);
    std::uniform_int_distribution<int> pick_sector(0, n_sectors - 1);
    std::uniform_int_distribution<int> pick_state(1, tree.n_states);
    std::normal_distribution<double> gauss;

    std::vector<int> firm_sector(cf.n_firms), firm_state(cf.n_firms);
    std::vector<double> firm_fe(cf.n_firms), wage_fe(cf.n_firms);
    for (int j = 0; j < cf.n_firms; ++j) {
        firm_sector[j] = pick_sector(rng_assign);
        firm_state[j] = pick_state(rng_assign);
        firm_fe[j] = cf.firm_fe_mu + cf.firm_fe_sd * gauss(rng_assign);
        wage_fe[j] = 1.0 + cf.wage_fe_sd * gauss(rng_assign);
    }

    // Compliance: one take-up draw per firm; treatment is absorbing.
    std::vector<int> treat_event = assign_compliance(tree, firm_sector, cf.p_take, cf.p_ncm, seed);

    // Common year effects and sector1-by-year effects.
    auto rng_fe = stream(seed, 4);
    std::vector<double> year_fe(n_years);
    for (auto& v : year_fe) v = cf.year_fe_sd * gauss(rng_fe);
    std::vector<double> s1y_fe(static_cast<std::size_t>(tree.config.n_sector1) * n_years);
    for (auto& v : s1y_fe) v = cf.sector1_year_fe_sd * gauss(rng_fe);

    // Outcomes.
    auto rng_out = stream(seed, 5);
    PanelDataset out;
    out.tree = tree;
    Table& t = out.firms;
    int c_firm = t.add_column("firm_id");
    int c_year = t.add_column("year");
    int c_s7 = t.add_column("sector_7d");
    int c_s5 = t.add_column("sector_5d");
    int c_s1 = t.add_column("sector_1d");
    int c_state = t.add_column("state");
    int c_elig = t.add_column("eligible_now");
    int c_treat = t.add_column("treated_now");
    int c_emp = t.add_column("log_employment");
    int c_wage = t.add_column("log_avg_wage");
    int c_hire = t.add_column("log_hires");
    int c_size = t.add_column("size_class");
    int c_fe = t.add_column("firm_fe");
    int c_tax = t.add_column("payroll_tax_rate");
    int c_tev = t.add_column("treat_event_year");
    int c_eev = t.add_column("elig_event_year");

    const double ar = cf.serial_corr_rho;
    const double innov_sd = cf.noise_sd * std::sqrt(1.0 - ar * ar);

    for (int j = 0; j < cf.n_firms; ++j) {
        const Sector7& sec = tree.sectors[firm_sector[j]];
        double att = 0.0;  // resolved after the pre-period employment is known
        double e_emp = cf.noise_sd * gauss(rng_out);
        double e_wage = cf.wage_noise_sd * gauss(rng_out);

        // First pass: errors and the no-treatment baseline, to classify size.
        std::vector<double> emp_err(n_years), wage_err(n_years), hire_err(n_years);
        for (int y = 0; y < n_years; ++y) {
            if (y > 0) {
                e_emp = ar * e_emp + innov_sd * gauss(rng_out);
                e_wage = cf.wage_noise_sd * gauss(rng_out);
            }
            emp_err[y] = e_emp;
            wage_err[y] = e_wage;
            hire_err[y] = cf.hires_noise_sd * gauss(rng_out);
        }
        double pre_mean = 0.0;
        int pre_n = 0;
        for (int y = 0; y < n_years; ++y) {
            int year = cf.year_min + y;
            if (year >= 2012) break;
            pre_mean += std::exp(firm_fe[j] + year_fe[y] +
                                 s1y_fe[(sec.code1 - 1) * n_years + y] + emp_err[y]);
            ++pre_n;
        }
        pre_mean = pre_n ? pre_mean / pre_n : std::exp(firm_fe[j]);
        const char* klass = size_class_of(pre_mean);
        att = klass[0] == 's' ? cf.att_small : (klass[0] == 'm' ? cf.att_medium : cf.att_large);

        for (int y = 0; y < n_years; ++y) {
            int year = cf.year_min + y;
            bool eligible_now = sec.cohort > 0 && year >= sec.cohort;
            bool treated_now = treat_event[j] > 0 && year >= treat_event[j];
            double confound = 0.0;
            if (tree.config.confound_pretrend && sec.cohort > 0)
                confound = tree.config.confound_delta * (year - cf.year_min);

            double log_emp = firm_fe[j] + year_fe[y] + s1y_fe[(sec.code1 - 1) * n_years + y] +
                             att * (treated_now ? 1.0 : 0.0) + confound + emp_err[y];
            double log_wage = wage_fe[j] + year_fe[y] + cf.att_wage * (treated_now ? 1.0 : 0.0) +
                              confound + wage_err[y];
            double log_hires = 0.4 * log_emp + hire_err[y];
            double tax = cf.baseline_tax - (treated_now ? cf.tax_cut : 0.0);

            t.col(c_firm).push_back(j + 1);
            t.col(c_year).push_back(year);
            t.col(c_s7).push_back(static_cast<double>(sec.code7));
            t.col(c_s5).push_back(static_cast<double>(sec.code5));
            t.col(c_s1).push_back(static_cast<double>(sec.code1));
            t.col(c_state).push_back(firm_state[j]);
            t.col(c_elig).push_back(eligible_now ? 1.0 : 0.0);
            t.col(c_treat).push_back(treated_now ? 1.0 : 0.0);
            t.col(c_emp).push_back(log_emp);
            t.col(c_wage).push_back(log_wage);
            t.col(c_hire).push_back(log_hires);
            t.col(c_size).push_back(t.intern_label(c_size, klass));
            t.col(c_fe).push_back(firm_fe[j]);
            t.col(c_tax).push_back(tax);
            t.col(c_tev).push_back(treat_event[j]);
            t.col(c_eev).push_back(sec.cohort);
        }
    }

    DgpTruth& truth = out.truth;
    truth.att_small = cf.att_small;
    truth.att_medium = cf.att_medium;
    truth.att_large = cf.att_large;
    truth.att_employment = (cf.att_small + cf.att_medium + cf.att_large) / 3.0;
    truth.take_up_prob = cf.p_take;
    truth.ncm_prob = cf.p_ncm;
    truth.first_stage_dlog_cost =
        std::log1p(cf.baseline_tax - cf.tax_cut) - std::log1p(cf.baseline_tax);
    truth.serial_corr_rho = cf.serial_corr_rho;
    truth.seed = seed;
    truth.n_firms = cf.n_firms;
    return out;
}

void generate_worker_panel(PanelDataset& panel, const WorkerPanelConfig& cf, std::uint64_t seed) {
    if (panel.firms.rows() == 0) throw ConfigError("worker panel: firm panel is empty");
    if (cf.workers_per_firm < 1) throw ConfigError("worker panel: workers_per_firm must be >= 1");

    const Table& ft = panel.firms;
    const auto& f_id = ft.col("firm_id");
    const auto& f_year = ft.col("year");
    const auto& f_tax = ft.col("payroll_tax_rate");
    const auto& f_fe = ft.col("firm_fe");
    const auto& f_tev = ft.col("treat_event_year");
    const auto& f_eev = ft.col("elig_event_year");
    const auto& f_s7 = ft.col("sector_7d");
    const auto& f_s5 = ft.col("sector_5d");
    const auto& f_s1 = ft.col("sector_1d");
    const auto& f_state = ft.col("state");

    // Firm-level lookups (payroll tax varies by year).
    std::unordered_map<long, int> firm_first_row;
    std::unordered_map<long, std::unordered_map<int, double>> firm_tax;
    std::vector<long> firm_ids;
    int year_min = 1 << 30, year_max = 0;
    for (std::size_t r = 0; r < ft.rows(); ++r) {
        long id = static_cast<long>(f_id[r]);
        int yr = static_cast<int>(f_year[r]);
        year_min = std::min(year_min, yr);
        year_max = std::max(year_max, yr);
        if (!firm_first_row.count(id)) {
            firm_first_row[id] = static_cast<int>(r);
            firm_ids.push_back(id);
        }
        firm_tax[id][yr] = f_tax[r];
    }
    const int n_years = year_max - year_min + 1;

    auto rng = stream(seed, 7);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick_firm(0, static_cast<int>(firm_ids.size()) - 1);
    std::uniform_int_distribution<int> pick_join(2010, 2011);  // short-tenure hires

    auto rng_fe = stream(seed, 8);
    std::vector<double> year_fe(n_years);
    for (auto& v : year_fe) v = 0.01 * gauss(rng_fe);

    Table& w = panel.workers;
    int c_wid = w.add_column("worker_id");
    int c_year = w.add_column("year");
    int c_firm = w.add_column("firm_id");
    int c_base = w.add_column("firm_id_base");
    int c_s7 = w.add_column("sector_7d_base");
    int c_s5 = w.add_column("sector_5d_base");
    int c_s1 = w.add_column("sector_1d_base");
    int c_state = w.add_column("state_base");
    int c_elig = w.add_column("eligible_base_now");
    int c_treat = w.add_column("treated_base_now");
    int c_net = w.add_column("net_earnings");
    int c_gross = w.add_column("gross_earnings");
    int c_lognet = w.add_column("log_net_earnings");
    int c_ten = w.add_column("tenure_pre");
    int c_wfe = w.add_column("worker_fe");
    int c_occ = w.add_column("occupation_class");
    int c_tev = w.add_column("treat_event_year_base");
    int c_eev = w.add_column("elig_event_year_base");

    long next_worker = 1;
    int kept_workers = 0;
    const int kmax = static_cast<int>(cf.att_earnings_by_k.size());

    for (long base_id : firm_ids) {
        int row0 = firm_first_row[base_id];
        for (int n = 0; n < cf.workers_per_firm; ++n) {
            long wid = next_worker++;
            // Hire date decides pre-period tenure; the sample keeps >= 3 years.
            int join_year = (u(rng) < cf.tenure_full_share) ? 2008 + (wid % 2 ? 1 : 0)
                                                            : pick_join(rng);
            int tenure_pre = 2012 - join_year;
            double wfe = cf.worker_fe_sd * gauss(rng);
            bool leader = u(rng) < cf.leader_share;
            if (tenure_pre < 3) {
                // Excluded by the tenure rule; draw nothing further for them.
                continue;
            }
            ++kept_workers;

            long cur_firm = base_id;
            for (int y = 0; y < n_years; ++y) {
                int year = year_min + y;
                if (year > year_min && u(rng) < cf.move_rate)
                    cur_firm = firm_ids[pick_firm(rng)];

                int tev = static_cast<int>(f_tev[row0]);
                int eev = static_cast<int>(f_eev[row0]);
                bool treated_base = tev > 0 && year >= tev;
                bool eligible_base = eev > 0 && year >= eev;

                double att = 0.0;
                if (tev > 0 && year >= tev) {
                    int k = year - tev;
                    att = cf.att_earnings_by_k[std::min(k, kmax - 1)];
                }
                int cur_row = firm_first_row[cur_firm];
                double log_net = 1.5 + wfe + 0.1 * f_fe[cur_row] + year_fe[y] + att +
                                 cf.noise_sd * gauss(rng);
                double net = std::exp(log_net);
                double gross = net * (1.0 + firm_tax[cur_firm][year]);

                w.col(c_wid).push_back(static_cast<double>(wid));
                w.col(c_year).push_back(year);
                w.col(c_firm).push_back(static_cast<double>(cur_firm));
                w.col(c_base).push_back(static_cast<double>(base_id));
                w.col(c_s7).push_back(f_s7[row0]);
                w.col(c_s5).push_back(f_s5[row0]);
                w.col(c_s1).push_back(f_s1[row0]);
                w.col(c_state).push_back(f_state[row0]);
                w.col(c_elig).push_back(eligible_base ? 1.0 : 0.0);
                w.col(c_treat).push_back(treated_base ? 1.0 : 0.0);
                w.col(c_net).push_back(net);
                w.col(c_gross).push_back(gross);
                w.col(c_lognet).push_back(log_net);
                w.col(c_ten).push_back(tenure_pre);
                w.col(c_wfe).push_back(wfe);
                w.col(c_occ).push_back(w.intern_label(c_occ, leader ? "leader" : "operational"));
                w.col(c_tev).push_back(tev);
                w.col(c_eev).push_back(eev);
            }
        }
    }
    panel.truth.att_net_earnings_by_k = cf.att_earnings_by_k;
    panel.truth.n_workers = kept_workers;
}

}  // namespace incidence
