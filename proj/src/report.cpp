#include "incidence/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "incidence/errors.hpp"

namespace incidence {

namespace {

double json_finite(double v) { return std::isfinite(v) ? v : 0.0; }

json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// --- tiny SVG canvas -------------------------------------------------------

struct Extent {
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    void include(double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    static Extent empty() {
        Extent e;
        e.xmin = e.ymin = 1e300;
        e.xmax = e.ymax = -1e300;
        return e;
    }
    void pad() {
        if (xmin > xmax) {
            xmin = 0;
            xmax = 1;
        }
        if (ymin > ymax) {
            ymin = 0;
            ymax = 1;
        }
        double dx = (xmax - xmin) * 0.08 + 1e-12;
        double dy = (ymax - ymin) * 0.08 + 1e-12;
        xmin -= dx;
        xmax += dx;
        ymin -= dy;
        ymax += dy;
    }
};

class SvgCanvas {
  public:
    SvgCanvas(int w, int h, const Extent& e, std::string title, std::string xlabel,
              std::string ylabel)
        : w_(w), h_(h), e_(e) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
             << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
        out_ << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
        out_ << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
             << "font-family=\"sans-serif\">" << title << "</text>\n";
        out_ << "<text x=\"" << w / 2 << "\" y=\"" << h - 6
             << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << xlabel
             << "</text>\n";
        out_ << "<text x=\"14\" y=\"" << h / 2
             << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" "
             << "transform=\"rotate(-90 14 " << h / 2 << ")\">" << ylabel << "</text>\n";
        axes();
    }

    double px(double x) const {
        return ml_ + (x - e_.xmin) / (e_.xmax - e_.xmin) * (w_ - ml_ - mr_);
    }
    double py(double y) const {
        return h_ - mb_ - (y - e_.ymin) / (e_.ymax - e_.ymin) * (h_ - mt_ - mb_);
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color) {
        out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
            out_ << px(xs[i]) << "," << py(ys[i]) << " ";
        }
        out_ << "\"/>\n";
    }

    void point(double x, double y, const std::string& color, double r = 3) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        out_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << r << "\" fill=\""
             << color << "\"/>\n";
    }

    void vline_segment(double x, double y0, double y1, const std::string& color) {
        if (!std::isfinite(y0) || !std::isfinite(y1)) return;
        out_ << "<line x1=\"" << px(x) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(x) << "\" y2=\""
             << py(y1) << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
    }

    void hline(double y, const std::string& color, const std::string& dash = "4,3") {
        out_ << "<line x1=\"" << ml_ << "\" y1=\"" << py(y) << "\" x2=\"" << w_ - mr_ << "\" y2=\""
             << py(y) << "\" stroke=\"" << color << "\" stroke-dasharray=\"" << dash << "\"/>\n";
    }

    void legend_entry(int slot, const std::string& label, const std::string& color) {
        double y = mt_ + 14 + slot * 14;
        out_ << "<rect x=\"" << w_ - mr_ - 110 << "\" y=\"" << y - 8
             << "\" width=\"10\" height=\"3\" fill=\"" << color << "\"/>\n";
        out_ << "<text x=\"" << w_ - mr_ - 95 << "\" y=\"" << y
             << "\" font-size=\"10\" font-family=\"sans-serif\">" << label << "</text>\n";
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

  private:
    void axes() {
        out_ << "<rect x=\"" << ml_ << "\" y=\"" << mt_ << "\" width=\"" << w_ - ml_ - mr_
             << "\" height=\"" << h_ - mt_ - mb_
             << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            double x = e_.xmin + (e_.xmax - e_.xmin) * i / 4.0;
            double y = e_.ymin + (e_.ymax - e_.ymin) * i / 4.0;
            out_ << "<text x=\"" << px(x) << "\" y=\"" << h_ - mb_ + 14
                 << "\" text-anchor=\"middle\" font-size=\"9\" font-family=\"sans-serif\">"
                 << fmt_tick(x) << "</text>\n";
            out_ << "<text x=\"" << ml_ - 4 << "\" y=\"" << py(y) + 3
                 << "\" text-anchor=\"end\" font-size=\"9\" font-family=\"sans-serif\">"
                 << fmt_tick(y) << "</text>\n";
        }
    }
    static std::string fmt_tick(double v) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%.3g", v);
        return buf;
    }

    int w_, h_;
    Extent e_;
    int ml_ = 52, mr_ = 16, mt_ = 30, mb_ = 36;
    std::ostringstream out_;
};

const char* kPalette[] = {"#2c7bb6", "#d7191c", "#fdae61", "#1a9641", "#7b3294", "#636363"};

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot open for writing: " + tmp.string());
        f << content;
        if (!f.good()) throw ConfigError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

json to_json(const EconomyParams& p) {
    return json{{"s_L", p.s_L},         {"s_K", p.s_K},
                {"rho", p.rho},         {"eps", p.eps},
                {"eta", p.eta},         {"tau_rev", p.tau_rev},
                {"theta", p.theta},     {"m", p.m},
                {"w0", p.w0},           {"r", p.r},
                {"A", p.A},             {"market_mode", to_string(p.market_mode)}};
}

EconomyParams economy_params_from_json(const json& j) {
    static const char* known[] = {"s_L", "s_K", "rho",   "eps", "eta", "tau_rev",
                                  "theta", "m", "w0", "r", "A", "market_mode"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown EconomyParams key: " + it.key());
    }
    EconomyParams p;
    p.s_L = j.value("s_L", p.s_L);
    p.s_K = j.value("s_K", p.s_K);
    p.rho = j.value("rho", p.rho);
    p.eps = j.value("eps", p.eps);
    p.eta = j.value("eta", p.eta);
    p.tau_rev = j.value("tau_rev", p.tau_rev);
    p.theta = j.value("theta", p.theta);
    p.m = j.value("m", p.m);
    p.w0 = j.value("w0", p.w0);
    p.r = j.value("r", p.r);
    p.A = j.value("A", p.A);
    if (j.contains("market_mode"))
        p.market_mode = market_mode_from_string(j["market_mode"].get<std::string>());
    p.validate();
    return p;
}

json to_json(const FirmEquilibrium& eq) {
    return json{{"L", eq.L},           {"K", eq.K},
                {"Q", eq.Q},           {"w", eq.w},
                {"p", eq.p},           {"lambda", eq.lambda},
                {"revenue", eq.revenue}, {"profit", eq.profit}};
}

json to_json(const IndustryEquilibrium& ind) {
    return json{{"treated", to_json(ind.treated)},
                {"control", to_json(ind.control)},
                {"aggregate_Q", ind.aggregate_Q},
                {"p_index", ind.p_index},
                {"m", ind.m}};
}

std::string firm_equilibrium_csv(const FirmEquilibrium& eq) {
    std::string s = "L,K,Q,w,p,lambda,revenue,profit\n";
    s += fmt(eq.L) + "," + fmt(eq.K) + "," + fmt(eq.Q) + "," + fmt(eq.w) + "," + fmt(eq.p) + "," +
         fmt(eq.lambda) + "," + fmt(eq.revenue) + "," + fmt(eq.profit) + "\n";
    return s;
}

json to_json(const PayrollComponents& c) {
    return json{{"eps_lambda_theta", c.eps_lambda_theta},
                {"eps_Q_theta", c.eps_Q_theta},
                {"eps_lambda_Q", c.eps_lambda_Q}};
}

json to_json(const ElasticityReport& rep) {
    return json{{"params", to_json(rep.params)},
                {"eps_L_theta", rep.eps_L_theta},
                {"eps_K_theta", rep.eps_K_theta},
                {"eps_R_theta", rep.eps_R_theta},
                {"components", to_json(rep.components)},
                {"nu_analytic", rep.nu_analytic},
                {"xi_analytic", rep.xi_analytic},
                {"nu_numeric", number_or_null(rep.nu_numeric)},
                {"xi_numeric", number_or_null(rep.xi_numeric)},
                {"zeta_numeric", number_or_null(rep.zeta_numeric)},
                {"chi_implied", number_or_null(rep.chi_implied)},
                {"omega_implied", number_or_null(rep.omega_implied)},
                {"psi_implied", number_or_null(rep.psi_implied)}};
}

std::string elasticity_report_csv_header() {
    return "eps,eta,rho,theta,tau_rev,m,eps_L_theta,eps_K_theta,eps_R_theta,"
           "eps_lambda_theta,eps_Q_theta,eps_lambda_Q,nu_analytic,xi_analytic,"
           "nu_numeric,xi_numeric,zeta_numeric,chi_implied,omega_implied,psi_implied\n";
}

std::string elasticity_report_csv_row(const ElasticityReport& rep) {
    const EconomyParams& p = rep.params;
    std::string s;
    for (double v : {p.eps, p.eta, p.rho, p.theta, p.tau_rev, p.m, rep.eps_L_theta,
                     rep.eps_K_theta, rep.eps_R_theta, rep.components.eps_lambda_theta,
                     rep.components.eps_Q_theta, rep.components.eps_lambda_Q, rep.nu_analytic,
                     rep.xi_analytic, rep.nu_numeric, rep.xi_numeric, rep.zeta_numeric,
                     rep.chi_implied, rep.omega_implied, rep.psi_implied}) {
        if (!s.empty()) s += ",";
        s += std::isfinite(v) ? fmt(v) : "";
    }
    return s + "\n";
}

json to_json(const ReformEffect& re) {
    return json{{"beta_L", re.beta_L},
                {"beta_K", re.beta_K},
                {"beta_R", re.beta_R},
                {"phi1", re.phi1},
                {"phi2", re.phi2}};
}

json to_json(const CmdResult& res) {
    return json{{"eps_hat", res.eps_hat},
                {"eta_hat", res.eta_hat},
                {"rho_hat", res.rho_hat},
                {"sigma_KL_hat", res.sigma_KL_hat},
                {"objective_value", res.objective_value},
                {"converged", res.converged},
                {"starts_tried", res.starts_tried},
                {"penalized_evals", res.penalized_evals}};
}

json to_json(const DgpTruth& truth) {
    return json{{"att_employment", truth.att_employment},
                {"att_small", truth.att_small},
                {"att_medium", truth.att_medium},
                {"att_large", truth.att_large},
                {"att_net_earnings_by_k", truth.att_net_earnings_by_k},
                {"take_up_prob", truth.take_up_prob},
                {"ncm_prob", truth.ncm_prob},
                {"first_stage_dlog_cost", truth.first_stage_dlog_cost},
                {"serial_corr_rho", truth.serial_corr_rho},
                {"seed", truth.seed},
                {"n_firms", truth.n_firms},
                {"n_workers", truth.n_workers}};
}

json to_json(const Coef& c) {
    return json{{"name", c.name}, {"estimate", c.estimate}, {"se", c.se}, {"t", c.t}};
}

json to_json(const EstimateReport& rep) {
    json coefs = json::array();
    for (const auto& c : rep.coefficients) coefs.push_back(to_json(c));
    json fs = json::array();
    for (const auto& c : rep.first_stage) fs.push_back(to_json(c));
    json j{{"coefficients", coefs},
           {"first_stage", fs},
           {"first_stage_F", json_finite(rep.first_stage_F)},
           {"n", rep.n},
           {"n_clusters", rep.n_clusters},
           {"absorb_iterations", rep.absorb_iterations},
           {"singletons_dropped", rep.singletons_dropped},
           {"dropped_columns", rep.dropped_columns}};
    if (!rep.event_k.empty()) {
        j["event_k"] = rep.event_k;
        j["beta_k"] = rep.beta_k;
        j["se_k"] = rep.se_k;
        j["omitted_k"] = rep.omitted_k;
    }
    return j;
}

std::string sweep_csv(const SweepResult& sw) {
    std::string s = "eps,eta,rho_hat,sigma_hat,feasible\n";
    for (const auto& c : sw.cells) {
        s += fmt(c.eps) + "," + fmt(c.eta) + ",";
        s += (c.feasible ? fmt(c.rho_hat) : "") + std::string(",");
        s += (c.feasible ? fmt(c.sigma_hat) : "") + std::string(",");
        s += c.feasible ? "1\n" : "0\n";
    }
    // competitive inversion reference line, flagged by an infinite eps
    for (std::size_t j = 0; j < sw.eta_grid.size(); ++j) {
        bool ok = std::isfinite(sw.competitive_sigma[j]);
        s += "inf," + fmt(sw.eta_grid[j]) + ",," + (ok ? fmt(sw.competitive_sigma[j]) : "") + "," +
             (ok ? "1\n" : "0\n");
    }
    return s;
}

std::string sweep_svg(const SweepResult& sw, const std::string& title) {
    Extent e = Extent::empty();
    for (const auto& c : sw.cells)
        if (c.feasible) e.include(c.eta, c.sigma_hat);
    for (std::size_t j = 0; j < sw.eta_grid.size(); ++j)
        if (std::isfinite(sw.competitive_sigma[j])) e.include(sw.eta_grid[j], sw.competitive_sigma[j]);
    e.pad();
    SvgCanvas svg(640, 420, e, title, "eta (output demand elasticity)", "sigma_KL");
    const std::size_t nH = sw.eta_grid.size();
    for (std::size_t i = 0; i < sw.eps_grid.size(); ++i) {
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j < nH; ++j) {
            const SweepCell& c = sw.cells[i * nH + j];
            if (!c.feasible) continue;
            xs.push_back(c.eta);
            ys.push_back(c.sigma_hat);
        }
        const char* color = kPalette[i % 6];
        svg.polyline(xs, ys, color);
        for (std::size_t k = 0; k < xs.size(); ++k) svg.point(xs[k], ys[k], color, 2.2);
        char label[48];
        std::snprintf(label, sizeof(label), "eps=%g", sw.eps_grid[i]);
        svg.legend_entry(static_cast<int>(i), label, color);
    }
    {
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j < nH; ++j) {
            if (!std::isfinite(sw.competitive_sigma[j])) continue;
            xs.push_back(sw.eta_grid[j]);
            ys.push_back(sw.competitive_sigma[j]);
        }
        svg.polyline(xs, ys, "#000000");
        svg.legend_entry(static_cast<int>(sw.eps_grid.size()), "competitive", "#000000");
    }
    return svg.finish();
}

std::string event_study_csv(const EstimateReport& rep) {
    std::string s = "k,beta,se\n";
    for (std::size_t i = 0; i < rep.event_k.size(); ++i)
        s += std::to_string(rep.event_k[i]) + "," + fmt(rep.beta_k[i]) + "," + fmt(rep.se_k[i]) +
             "\n";
    return s;
}

std::string event_study_svg(const EstimateReport& rep, const std::string& title) {
    Extent e = Extent::empty();
    e.include(-1, 0);
    for (std::size_t i = 0; i < rep.event_k.size(); ++i) {
        e.include(rep.event_k[i], rep.beta_k[i] + 1.96 * rep.se_k[i]);
        e.include(rep.event_k[i], rep.beta_k[i] - 1.96 * rep.se_k[i]);
    }
    e.pad();
    SvgCanvas svg(640, 420, e, title, "event time k", "coefficient");
    svg.hline(0.0, "#888888");
    for (std::size_t i = 0; i < rep.event_k.size(); ++i) {
        double k = rep.event_k[i];
        svg.vline_segment(k, rep.beta_k[i] - 1.96 * rep.se_k[i], rep.beta_k[i] + 1.96 * rep.se_k[i],
                          "#2c7bb6");
        svg.point(k, rep.beta_k[i], "#2c7bb6", 3.2);
    }
    svg.point(-1, 0.0, "#d7191c", 3.2);  // normalized reference period
    return svg.finish();
}

}  // namespace incidence
