#include "incidence/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "incidence/errors.hpp"

namespace incidence {

namespace {

constexpr double kRankTol = 1e-9;

struct Prepared {
    Eigen::MatrixXd m;  // [y | X | Z], absorbed
    std::vector<std::string> x_names;
    std::vector<std::string> z_names;
    std::vector<int> cluster_ids;
    int n_clusters = 0;
    int absorb_iterations = 0;
    int singletons_dropped = 0;
    long n = 0;

    Eigen::VectorXd y() const { return m.col(0); }
    Eigen::MatrixXd X() const { return m.middleCols(1, x_names.size()); }
    Eigen::MatrixXd Z() const {
        return m.middleCols(1 + x_names.size(), z_names.size());
    }
};

std::vector<int> combine_groups(const Table& t, const std::vector<std::string>& cols) {
    return t.group_ids(cols);
}

// Iteratively removes rows that are alone in any FE group (they carry no
// identifying variation and distort the CR1 dof).
std::vector<int> drop_singletons(std::vector<std::vector<int>>& fe_ids, long n,
                                 int* dropped_count) {
    std::vector<char> keep(n, 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& ids : fe_ids) {
            std::unordered_map<int, int> count;
            for (long i = 0; i < n; ++i)
                if (keep[i]) ++count[ids[i]];
            for (long i = 0; i < n; ++i)
                if (keep[i] && count[ids[i]] == 1) {
                    keep[i] = 0;
                    changed = true;
                }
        }
    }
    std::vector<int> rows;
    rows.reserve(n);
    for (long i = 0; i < n; ++i)
        if (keep[i]) rows.push_back(static_cast<int>(i));
    *dropped_count = static_cast<int>(n - rows.size());
    return rows;
}

std::vector<int> renumber(const std::vector<int>& ids, const std::vector<int>& rows) {
    std::vector<int> out(rows.size());
    std::unordered_map<int, int> map;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto it = map.find(ids[rows[i]]);
        if (it == map.end()) {
            int g = static_cast<int>(map.size());
            map.emplace(ids[rows[i]], g);
            out[i] = g;
        } else {
            out[i] = it->second;
        }
    }
    return out;
}

Prepared prepare(const Table& t, const std::string& outcome,
                 const std::vector<std::string>& x_cols, const std::vector<std::string>& z_cols,
                 const std::vector<std::vector<std::string>>& fixed_effects,
                 const std::vector<std::string>& cluster, bool intercept) {
    if (cluster.empty()) throw ConfigError("regression spec needs a cluster key");
    const long n_all = static_cast<long>(t.rows());
    if (n_all == 0) throw EstimationError("empty dataset");

    std::vector<std::vector<int>> fe_ids;
    for (const auto& fe : fixed_effects) fe_ids.push_back(combine_groups(t, fe));

    int dropped = 0;
    std::vector<int> rows;
    if (!fe_ids.empty()) {
        rows = drop_singletons(fe_ids, n_all, &dropped);
        if (rows.empty()) throw EstimationError("all rows dropped as FE singletons");
    } else {
        rows.resize(n_all);
        std::iota(rows.begin(), rows.end(), 0);
    }

    Prepared p;
    p.n = static_cast<long>(rows.size());
    p.singletons_dropped = dropped;
    p.x_names = x_cols;
    if (intercept) p.x_names.push_back("(intercept)");
    p.z_names = z_cols;

    const long n = p.n;
    p.m.resize(n, 1 + p.x_names.size() + p.z_names.size());
    const auto& ycol = t.col(outcome);
    for (long i = 0; i < n; ++i) p.m(i, 0) = ycol[rows[i]];
    for (std::size_t c = 0; c < x_cols.size(); ++c) {
        const auto& col = t.col(x_cols[c]);
        for (long i = 0; i < n; ++i) p.m(i, 1 + c) = col[rows[i]];
    }
    if (intercept)
        for (long i = 0; i < n; ++i) p.m(i, x_cols.size() + 1) = 1.0;
    for (std::size_t c = 0; c < z_cols.size(); ++c) {
        const auto& col = t.col(z_cols[c]);
        for (long i = 0; i < n; ++i) p.m(i, 1 + p.x_names.size() + c) = col[rows[i]];
    }

    std::vector<std::vector<int>> fe_sub;
    for (auto& ids : fe_ids) fe_sub.push_back(renumber(ids, rows));
    if (!fe_sub.empty()) p.absorb_iterations = absorb_fixed_effects(p.m, fe_sub);

    std::vector<int> cl = renumber(combine_groups(t, cluster), rows);
    p.cluster_ids = cl;
    p.n_clusters = cl.empty() ? 0 : 1 + *std::max_element(cl.begin(), cl.end());
    return p;
}

// Rank-revealing least squares; collinear columns dropped with a warning.
struct LsFit {
    Eigen::VectorXd beta;          // over retained columns
    std::vector<int> retained;     // indices into the original column set
    std::vector<std::string> dropped;
    Eigen::MatrixXd xtx_inv;       // (X'X)^{-1} on retained columns
};

LsFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const std::vector<std::string>& names) {
    LsFit fit;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(kRankTol);
    int rank = static_cast<int>(qr.rank());
    Eigen::VectorXi perm = qr.colsPermutation().indices();
    std::vector<char> keep(X.cols(), 0);
    for (int i = 0; i < rank; ++i) keep[perm[i]] = 1;
    for (int c = 0; c < X.cols(); ++c) {
        if (keep[c])
            fit.retained.push_back(c);
        else
            fit.dropped.push_back(names[c]);
    }
    Eigen::MatrixXd Xr(X.rows(), rank);
    for (int i = 0; i < rank; ++i) Xr.col(i) = X.col(fit.retained[i]);
    Eigen::MatrixXd xtx = Xr.transpose() * Xr;
    fit.xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(rank, rank));
    fit.beta = fit.xtx_inv * (Xr.transpose() * y);
    return fit;
}

// CR1 cluster sandwich: c * (X'X)^{-1} [sum_g X_g' e_g e_g' X_g] (X'X)^{-1},
// c = G/(G-1) * (N-1)/(N-K). `design` supplies the bread/meat design matrix
// (X for ols, projected X-hat for tsls); residuals come from the caller.
Eigen::MatrixXd cr1_sandwich(const Eigen::MatrixXd& design, const Eigen::VectorXd& resid,
                             const Eigen::MatrixXd& bread, const std::vector<int>& cluster_ids,
                             int n_clusters) {
    const int k = static_cast<int>(design.cols());
    if (n_clusters < 2) throw EstimationError("need at least 2 clusters for CR1 inference");
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n_clusters, k);
    for (long i = 0; i < design.rows(); ++i)
        scores.row(cluster_ids[i]) += resid(i) * design.row(i);
    Eigen::MatrixXd meat = scores.transpose() * scores;
    const double n = static_cast<double>(design.rows());
    const double g = static_cast<double>(n_clusters);
    double c = (g / (g - 1.0)) * ((n - 1.0) / (n - k));
    return c * bread * meat * bread;
}

EstimateReport finish_ols(const Prepared& p, const std::vector<std::string>& names) {
    Eigen::MatrixXd X = p.X();
    Eigen::VectorXd y = p.y();
    LsFit fit = least_squares(X, y, names);
    Eigen::MatrixXd Xr(X.rows(), fit.retained.size());
    for (std::size_t i = 0; i < fit.retained.size(); ++i) Xr.col(i) = X.col(fit.retained[i]);
    Eigen::VectorXd resid = y - Xr * fit.beta;
    Eigen::MatrixXd V = cr1_sandwich(Xr, resid, fit.xtx_inv, p.cluster_ids, p.n_clusters);

    EstimateReport rep;
    rep.n = p.n;
    rep.n_clusters = p.n_clusters;
    rep.absorb_iterations = p.absorb_iterations;
    rep.singletons_dropped = p.singletons_dropped;
    rep.dropped_columns = fit.dropped;
    for (std::size_t i = 0; i < fit.retained.size(); ++i) {
        Coef c;
        c.name = names[fit.retained[i]];
        c.estimate = fit.beta(i);
        c.se = std::sqrt(std::max(0.0, V(i, i)));
        c.t = c.se > 0 ? c.estimate / c.se : 0.0;
        rep.coefficients.push_back(c);
    }
    return rep;
}

}  // namespace

const Coef& EstimateReport::coef(const std::string& name) const {
    for (const auto& c : coefficients)
        if (c.name == name) return c;
    throw EstimationError("no coefficient named " + name);
}

int absorb_fixed_effects(Eigen::MatrixXd& m, const std::vector<std::vector<int>>& fe_ids,
                         double tol, int max_sweeps) {
    if (fe_ids.empty()) return 0;
    const long n = m.rows();
    const int k = static_cast<int>(m.cols());
    std::vector<int> sizes;
    std::vector<int> n_groups(fe_ids.size());
    for (std::size_t d = 0; d < fe_ids.size(); ++d) {
        if (static_cast<long>(fe_ids[d].size()) != n)
            throw ConfigError("FE id vector length mismatch");
        n_groups[d] = fe_ids[d].empty() ? 0 : 1 + *std::max_element(fe_ids[d].begin(),
                                                                    fe_ids[d].end());
    }

    std::vector<Eigen::VectorXd> sums;
    std::vector<std::vector<int>> counts(fe_ids.size());
    for (std::size_t d = 0; d < fe_ids.size(); ++d) {
        counts[d].assign(n_groups[d], 0);
        for (long i = 0; i < n; ++i) ++counts[d][fe_ids[d][i]];
    }

    int sweep = 0;
    double worst = 0;
    int worst_col = 0;
    double prev_worst = std::numeric_limits<double>::infinity();
    double prev_q = 0;
    int cooldown = 0;
    Eigen::MatrixXd before;
    for (; sweep < max_sweeps; ++sweep) {
        before = m;
        worst = 0;
        for (std::size_t d = 0; d < fe_ids.size(); ++d) {
            Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n_groups[d], k);
            const auto& ids = fe_ids[d];
            for (long i = 0; i < n; ++i) means.row(ids[i]) += m.row(i);
            for (int g = 0; g < n_groups[d]; ++g) means.row(g) /= counts[d][g];
            for (long i = 0; i < n; ++i) m.row(i) -= means.row(ids[i]);
            for (int c = 0; c < k; ++c) {
                double mc = means.col(c).cwiseAbs().maxCoeff();
                if (mc > worst) {
                    worst = mc;
                    worst_col = c;
                }
            }
        }
        if (worst < tol) return sweep + 1;
        // One dimension needs exactly one pass.
        if (fe_ids.size() == 1) return sweep + 1;

        // The sweep map is an affine contraction; once the decay ratio q
        // stabilizes, the remaining distance is a geometric series and the
        // limit can be jumped to directly. Cuts the mover-linked worker/firm
        // case from tens of thousands of sweeps to a few hundred.
        double q = worst / prev_worst;
        prev_worst = worst;
        if (cooldown > 0) {
            --cooldown;
        } else if (sweep > 2 && q > 0.3 && q < 0.9999 && std::fabs(q - prev_q) < 0.05 * (1.0 - q)) {
            m += (q / (1.0 - q)) * (m - before);
            prev_worst = std::numeric_limits<double>::infinity();
            cooldown = 3;
        }
        prev_q = q;
    }
    std::ostringstream d;
    d << "column " << worst_col << " still moving by " << worst << " after " << max_sweeps
      << " sweeps";
    throw SolverError("fixed-effect absorption did not converge", d.str());
}

EstimateReport ols(const Table& data, const RegressionSpec& spec) {
    std::vector<std::string> x_cols = spec.endogenous;
    for (const auto& c : spec.controls) x_cols.push_back(c);
    if (!spec.instruments.empty())
        throw ConfigError("ols: instruments given; use tsls");
    Prepared p = prepare(data, spec.outcome, x_cols, {}, spec.fixed_effects, spec.cluster,
                         spec.intercept);
    return finish_ols(p, p.x_names);
}

EstimateReport tsls(const Table& data, const RegressionSpec& spec) {
    if (spec.endogenous.empty()) throw ConfigError("tsls: no endogenous columns");
    if (spec.instruments.size() < spec.endogenous.size())
        throw ConfigError("tsls: order condition fails (fewer instruments than endogenous)");

    std::vector<std::string> x_cols = spec.endogenous;
    for (const auto& c : spec.controls) x_cols.push_back(c);
    Prepared p = prepare(data, spec.outcome, x_cols, spec.instruments, spec.fixed_effects,
                         spec.cluster, spec.intercept);

    const int n_endog = static_cast<int>(spec.endogenous.size());
    const int n_exog = static_cast<int>(p.x_names.size()) - n_endog;
    Eigen::MatrixXd X = p.X();
    Eigen::VectorXd y = p.y();

    // Full instrument set: excluded instruments plus the exogenous regressors.
    Eigen::MatrixXd Zf(p.n, p.z_names.size() + n_exog);
    Zf.leftCols(p.z_names.size()) = p.Z();
    if (n_exog > 0) Zf.rightCols(n_exog) = X.rightCols(n_exog);

    Eigen::MatrixXd ztz = Zf.transpose() * Zf;
    Eigen::LDLT<Eigen::MatrixXd> ztz_ldlt(ztz);
    if (ztz_ldlt.info() != Eigen::Success || ztz_ldlt.rcond() < 1e-14)
        throw EstimationError("tsls: singular instrument cross-product (weak first stage)");

    EstimateReport rep;
    rep.n = p.n;
    rep.n_clusters = p.n_clusters;
    rep.absorb_iterations = p.absorb_iterations;
    rep.singletons_dropped = p.singletons_dropped;

    // First stages: endogenous column on the full instrument set; the
    // cluster-robust Wald F on the excluded block gauges instrument strength.
    double min_f = std::numeric_limits<double>::infinity();
    const int n_excl = static_cast<int>(p.z_names.size());
    for (int e = 0; e < n_endog; ++e) {
        Eigen::VectorXd d = X.col(e);
        Eigen::VectorXd pi = ztz_ldlt.solve(Zf.transpose() * d);
        Eigen::VectorXd fs_resid = d - Zf * pi;
        Eigen::MatrixXd ztz_inv =
            ztz_ldlt.solve(Eigen::MatrixXd::Identity(Zf.cols(), Zf.cols()));
        Eigen::MatrixXd Vpi = cr1_sandwich(Zf, fs_resid, ztz_inv, p.cluster_ids, p.n_clusters);
        for (int zi = 0; zi < n_excl; ++zi) {
            Coef c;
            c.name = p.z_names[zi] + " -> " + spec.endogenous[e];
            c.estimate = pi(zi);
            c.se = std::sqrt(std::max(0.0, Vpi(zi, zi)));
            c.t = c.se > 0 ? c.estimate / c.se : 0.0;
            rep.first_stage.push_back(c);
        }
        if (fs_resid.squaredNorm() < 1e-24 * std::max(1.0, d.squaredNorm()))
            continue;  // perfectly predicted endogenous column: trivially strong
        Eigen::MatrixXd Vz = Vpi.topLeftCorner(n_excl, n_excl);
        Eigen::VectorXd piz = pi.head(n_excl);
        Eigen::LDLT<Eigen::MatrixXd> vz_ldlt(Vz);
        if (vz_ldlt.info() == Eigen::Success) {
            double wald = piz.dot(vz_ldlt.solve(piz)) / n_excl;
            if (std::isfinite(wald)) min_f = std::min(min_f, wald);
        }
    }
    rep.first_stage_F = min_f;
    if (!(min_f > 1e-8)) throw EstimationError("tsls: first stage is numerically zero");

    // Second stage on projected regressors.
    Eigen::MatrixXd Xhat = X;
    Xhat.leftCols(n_endog) = Zf * ztz_ldlt.solve(Zf.transpose() * X.leftCols(n_endog));
    Eigen::MatrixXd xhx = Xhat.transpose() * Xhat;
    Eigen::LDLT<Eigen::MatrixXd> xhx_ldlt(xhx);
    if (xhx_ldlt.info() != Eigen::Success || xhx_ldlt.rcond() < 1e-14)
        throw EstimationError("tsls: singular second-stage design (collinear regressors)");
    Eigen::MatrixXd bread =
        xhx_ldlt.solve(Eigen::MatrixXd::Identity(Xhat.cols(), Xhat.cols()));
    Eigen::VectorXd beta = bread * (Xhat.transpose() * y);
    Eigen::VectorXd resid = y - X * beta;  // residuals at the original regressors
    Eigen::MatrixXd V = cr1_sandwich(Xhat, resid, bread, p.cluster_ids, p.n_clusters);

    for (int i = 0; i < X.cols(); ++i) {
        Coef c;
        c.name = p.x_names[i];
        c.estimate = beta(i);
        c.se = std::sqrt(std::max(0.0, V(i, i)));
        c.t = c.se > 0 ? c.estimate / c.se : 0.0;
        rep.coefficients.push_back(c);
    }
    return rep;
}

EstimateReport event_study(const Table& panel, const EventStudySpec& spec) {
    if (spec.k_min > -2 || spec.k_max < 0)
        throw ConfigError("event_study: window must span pre and post periods");
    // Ever-treated units contribute only their in-window years; otherwise the
    // out-of-window treated years would land in the reference period and
    // contaminate the normalization. Never-treated units stay whole.
    std::vector<int> rows;
    {
        const auto& year0 = panel.col(spec.year);
        const auto& tev0 = panel.col(spec.treat_event_year);
        for (std::size_t i = 0; i < panel.rows(); ++i) {
            if (tev0[i] > 0) {
                int k = static_cast<int>(year0[i] - tev0[i]);
                if (k < spec.k_min || k > spec.k_max) continue;
            }
            rows.push_back(static_cast<int>(i));
        }
    }
    Table t = panel.select_rows(rows);  // local copy to lay event dummies into
    const auto& year = t.col(spec.year);
    const auto& tev = t.col(spec.treat_event_year);
    const auto& eev = t.col(spec.elig_event_year);
    const long n = static_cast<long>(t.rows());

    std::vector<int> ks;
    for (int k = spec.k_min; k <= spec.k_max; ++k)
        if (k != -1) ks.push_back(k);

    std::vector<std::string> d_names, z_names;
    std::vector<int> live_k;
    std::vector<int> omitted;
    for (int k : ks) {
        std::string dn = "D_k" + std::to_string(k);
        std::string zn = "Z_k" + std::to_string(k);
        int cd = t.add_column(dn);
        int cz = t.add_column(zn);
        auto& dcol = t.col(cd);
        auto& zcol = t.col(cz);
        dcol.resize(n);
        zcol.resize(n);
        long d_hits = 0;
        for (long i = 0; i < n; ++i) {
            bool treated_at_k = tev[i] > 0 && static_cast<int>(year[i] - tev[i]) == k;
            bool elig_at_k = eev[i] > 0 && static_cast<int>(year[i] - eev[i]) == k;
            dcol[i] = treated_at_k ? 1.0 : 0.0;
            zcol[i] = elig_at_k ? 1.0 : 0.0;
            d_hits += treated_at_k;
        }
        if (d_hits == 0) {
            omitted.push_back(k);  // no observations in this cell; leave it out
            continue;
        }
        d_names.push_back(dn);
        z_names.push_back(zn);
        live_k.push_back(k);
    }
    if (d_names.empty()) throw EstimationError("event_study: no populated event-time cells");

    RegressionSpec rs;
    rs.outcome = spec.outcome;
    rs.endogenous = d_names;
    rs.instruments = z_names;
    rs.controls = spec.controls;
    rs.fixed_effects = spec.fixed_effects;
    rs.cluster = spec.cluster;
    EstimateReport rep = tsls(t, rs);
    rep.omitted_k = omitted;
    for (std::size_t i = 0; i < live_k.size(); ++i) {
        rep.event_k.push_back(live_k[i]);
        rep.beta_k.push_back(rep.coefficients[i].estimate);
        rep.se_k.push_back(rep.coefficients[i].se);
    }
    return rep;
}

namespace {

// Logistic propensity score by IRLS; returns fitted probabilities.
Eigen::VectorXd logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-8).matrix();
        Eigen::MatrixXd xtwx = X.transpose() * w.asDiagonal() * X;
        Eigen::VectorXd grad = X.transpose() * (y - mu);
        Eigen::VectorXd step = (xtwx + 1e-10 * Eigen::MatrixXd::Identity(X.cols(), X.cols()))
                                   .ldlt()
                                   .solve(grad);
        beta += step;
        if (step.cwiseAbs().maxCoeff() < 1e-10) break;
    }
    Eigen::VectorXd eta = X * beta;
    return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
}

}  // namespace

MatchResult matching_did(const Table& panel, const MatchConfig& config) {
    const auto& unit_col = panel.col(config.unit);
    const auto& year_col = panel.col(config.year);
    const auto& treat_col = panel.col(config.treat);
    const long n = static_cast<long>(panel.rows());

    // Unit-level pre-period means of the matching variables.
    struct UnitInfo {
        long unit;
        bool treated = false;
        std::vector<double> pre_means;
        int pre_count = 0;
        std::vector<int> rows;
    };
    std::unordered_map<long, UnitInfo> units;
    std::vector<long> unit_order;
    const int nv = static_cast<int>(config.match_vars.size());
    std::vector<const std::vector<double>*> mv;
    for (const auto& v : config.match_vars) mv.push_back(&panel.col(v));

    for (long i = 0; i < n; ++i) {
        long u = static_cast<long>(unit_col[i]);
        auto it = units.find(u);
        if (it == units.end()) {
            it = units.emplace(u, UnitInfo{u, false, std::vector<double>(nv, 0.0), 0, {}}).first;
            unit_order.push_back(u);
        }
        UnitInfo& info = it->second;
        info.rows.push_back(static_cast<int>(i));
        if (treat_col[i] > 0.5) info.treated = true;
        if (year_col[i] <= config.pre_year_max) {
            for (int v = 0; v < nv; ++v) info.pre_means[v] += (*mv[v])[i];
            ++info.pre_count;
        }
    }

    // Unit id order, not row order, so permuting the panel cannot change who
    // gets matched to whom.
    std::sort(unit_order.begin(), unit_order.end());
    std::vector<UnitInfo*> usable;
    for (long u : unit_order) {
        UnitInfo& info = units[u];
        if (info.pre_count == 0) continue;  // no pre-period data to match on
        for (int v = 0; v < nv; ++v) info.pre_means[v] /= info.pre_count;
        usable.push_back(&info);
    }
    if (usable.empty()) throw EstimationError("matching_did: no units with pre-period data");

    // Pooled decile cuts per matching variable.
    std::vector<std::vector<double>> cuts(nv);
    for (int v = 0; v < nv; ++v) {
        std::vector<double> vals;
        vals.reserve(usable.size());
        for (auto* info : usable) vals.push_back(info->pre_means[v]);
        std::sort(vals.begin(), vals.end());
        for (int d = 1; d < config.n_deciles; ++d)
            cuts[v].push_back(vals[vals.size() * d / config.n_deciles]);
    }
    auto decile_of = [&](double x, int v) {
        return static_cast<int>(std::lower_bound(cuts[v].begin(), cuts[v].end(), x) -
                                cuts[v].begin());
    };

    // Propensity score over the pre-period means (tie-breaker within cells).
    Eigen::MatrixXd psX(usable.size(), nv + 1);
    Eigen::VectorXd psY(usable.size());
    for (std::size_t i = 0; i < usable.size(); ++i) {
        for (int v = 0; v < nv; ++v) psX(i, v) = usable[i]->pre_means[v];
        psX(i, nv) = 1.0;
        psY(i) = usable[i]->treated ? 1.0 : 0.0;
    }
    Eigen::VectorXd ps = logistic_fit(psX, psY);

    // Cell key -> control pool (index into usable).
    auto cell_key = [&](const UnitInfo& info) {
        std::string key;
        for (int v = 0; v < nv; ++v) key += std::to_string(decile_of(info.pre_means[v], v)) + "|";
        return key;
    };
    std::unordered_map<std::string, std::vector<int>> control_cells;
    for (std::size_t i = 0; i < usable.size(); ++i)
        if (!usable[i]->treated) control_cells[cell_key(*usable[i])].push_back(static_cast<int>(i));

    MatchResult res;
    std::vector<int> matched_rows;
    std::vector<char> control_used(usable.size(), 0);
    for (std::size_t i = 0; i < usable.size(); ++i) {
        if (!usable[i]->treated) continue;
        ++res.treated_units;
        auto it = control_cells.find(cell_key(*usable[i]));
        int best = -1;
        double best_gap = std::numeric_limits<double>::infinity();
        if (it != control_cells.end()) {
            for (int c : it->second) {
                if (control_used[c]) continue;
                double gap = std::fabs(ps(c) - ps(i));
                if (gap < best_gap) {
                    best_gap = gap;
                    best = c;
                }
            }
        }
        if (best < 0) {
            ++res.unmatched_treated;
            continue;
        }
        control_used[best] = 1;
        ++res.matched_pairs;
        for (int r : usable[i]->rows) matched_rows.push_back(r);
        for (int r : usable[best]->rows) matched_rows.push_back(r);
    }
    if (res.matched_pairs == 0) throw EstimationError("matching_did: zero matches");

    std::sort(matched_rows.begin(), matched_rows.end());
    res.matched = panel.select_rows(matched_rows);

    RegressionSpec rs;
    rs.outcome = config.outcome;
    rs.endogenous = {config.treat};
    rs.fixed_effects = config.fixed_effects;
    rs.cluster = config.cluster;
    res.did = ols(res.matched, rs);
    return res;
}

BalanceResult balance_check(const Table& panel, const std::vector<std::string>& covariates,
                            const std::string& eligibility,
                            const std::vector<std::vector<std::string>>& fixed_effects,
                            const std::vector<std::string>& cluster) {
    if (covariates.empty()) throw ConfigError("balance_check: no covariates");
    BalanceResult out;

    RegressionSpec base;
    base.outcome = eligibility;
    base.endogenous = covariates;
    base.cluster = cluster;
    base.intercept = true;
    EstimateReport rb = ols(panel, base);
    out.baseline = rb.coefficients;
    out.n = rb.n;

    RegressionSpec twfe = base;
    twfe.intercept = false;
    twfe.fixed_effects = fixed_effects;
    EstimateReport rt = ols(panel, twfe);
    out.twfe = rt.coefficients;
    out.dropped_twfe = rt.dropped_columns;
    return out;
}

double elasticity_postprocess(double beta_outcome, double dlog_cost) {
    if (dlog_cost == 0.0) throw ConfigError("elasticity_postprocess: zero labor-cost change");
    return beta_outcome / dlog_cost;
}

}  // namespace incidence
