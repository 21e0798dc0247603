#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "incidence/errors.hpp"
#include "incidence/regress.hpp"
#include "incidence/table.hpp"

using namespace incidence;

namespace {

// Small synthetic panel: units, years, a treatment column, covariates.
Table toy_panel(int n_units, int n_years, std::uint64_t seed,
                double slope = 2.0, double noise_sd = 1.0, int n_clusters = 10) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Table t;
    int cu = t.add_column("unit");
    int cy = t.add_column("year");
    int cg = t.add_column("cluster");
    int cx = t.add_column("x");
    int cyv = t.add_column("y");
    std::vector<double> unit_fe(n_units), year_fe(n_years);
    for (auto& v : unit_fe) v = gauss(rng);
    for (auto& v : year_fe) v = 0.5 * gauss(rng);
    for (int u = 0; u < n_units; ++u)
        for (int y = 0; y < n_years; ++y) {
            double x = gauss(rng);
            double e = noise_sd * gauss(rng);
            t.col(cu).push_back(u);
            t.col(cy).push_back(2000 + y);
            t.col(cg).push_back(u % n_clusters);
            t.col(cx).push_back(x);
            t.col(cyv).push_back(unit_fe[u] + year_fe[y] + slope * x + e);
        }
    return t;
}

// Dense-dummy least squares: y on [X, unit dummies, year dummies] with one
// reference level dropped per FE dimension after the first.
Eigen::VectorXd dense_dummy_ols(const Table& t, const std::string& ycol,
                                const std::vector<std::string>& xcols,
                                const std::vector<std::vector<std::string>>& fes) {
    const long n = static_cast<long>(t.rows());
    std::vector<std::vector<int>> ids;
    std::vector<int> n_groups;
    for (const auto& fe : fes) {
        ids.push_back(t.group_ids(fe));
        n_groups.push_back(1 + *std::max_element(ids.back().begin(), ids.back().end()));
    }
    int k = static_cast<int>(xcols.size());
    int total = k;
    for (std::size_t d = 0; d < ids.size(); ++d) total += n_groups[d] - (d > 0 ? 1 : 0);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, total);
    for (int c = 0; c < k; ++c) {
        const auto& col = t.col(xcols[c]);
        for (long i = 0; i < n; ++i) X(i, c) = col[i];
    }
    int offset = k;
    for (std::size_t d = 0; d < ids.size(); ++d) {
        int skip = d > 0 ? 1 : 0;  // drop one level to avoid the dummy trap
        for (long i = 0; i < n; ++i) {
            int g = ids[d][i];
            if (g >= skip) X(i, offset + g - skip) = 1.0;
        }
        offset += n_groups[d] - skip;
    }
    Eigen::VectorXd y(n);
    const auto& yc = t.col(ycol);
    for (long i = 0; i < n; ++i) y(i) = yc[i];
    return (X.transpose() * X).ldlt().solve(X.transpose() * y).head(k);
}

}  // namespace

TEST_CASE("absorption: one-way equals exact demeaning in a single sweep") {
    Table t = toy_panel(20, 5, 1);
    Eigen::MatrixXd m(t.rows(), 1);
    for (std::size_t i = 0; i < t.rows(); ++i) m(i, 0) = t.col("y")[i];
    auto ids = t.group_ids({"unit"});
    Eigen::MatrixXd expect = m;
    {
        std::vector<double> sum(20, 0.0);
        std::vector<int> cnt(20, 0);
        for (std::size_t i = 0; i < t.rows(); ++i) {
            sum[ids[i]] += expect(i, 0);
            ++cnt[ids[i]];
        }
        for (std::size_t i = 0; i < t.rows(); ++i) expect(i, 0) -= sum[ids[i]] / cnt[ids[i]];
    }
    int sweeps = absorb_fixed_effects(m, {ids});
    CHECK(sweeps == 1);
    CHECK((m - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("absorption is idempotent") {
    Table t = toy_panel(30, 6, 2);
    Eigen::MatrixXd m(t.rows(), 2);
    for (std::size_t i = 0; i < t.rows(); ++i) {
        m(i, 0) = t.col("y")[i];
        m(i, 1) = t.col("x")[i];
    }
    auto g1 = t.group_ids({"unit"});
    auto g2 = t.group_ids({"year"});
    absorb_fixed_effects(m, {g1, g2});
    Eigen::MatrixXd again = m;
    absorb_fixed_effects(again, {g1, g2});
    CHECK((m - again).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-way absorbed coefficients equal dense dummy least squares") {
    Table t = toy_panel(40, 5, 3);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport rep = ols(t, rs);
    Eigen::VectorXd dense = dense_dummy_ols(t, "y", {"x"}, {{"unit"}, {"year"}});
    CHECK(rep.coef("x").estimate == doctest::Approx(dense(0)).epsilon(1e-8));
}

TEST_CASE("perfect fit gives zero residuals and zero SEs") {
    Table t;
    t.add_column("y");
    t.add_column("x");
    t.add_column("g");
    for (int i = 0; i < 40; ++i) {
        double x = i * 0.25 - 5.0;
        t.col("y").push_back(3.0 * x);
        t.col("x").push_back(x);
        t.col("g").push_back(i % 5);
    }
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.cluster = {"g"};
    EstimateReport rep = ols(t, rs);
    CHECK(rep.coef("x").estimate == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(rep.coef("x").se < 1e-10);
}

TEST_CASE("known slope recovered within three SEs") {
    Table t = toy_panel(500, 20, 4, 2.0, 1.0, 25);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport rep = ols(t, rs);
    const Coef& c = rep.coef("x");
    CHECK(std::fabs(c.estimate - 2.0) <= 3.0 * c.se);
    CHECK(c.se > 0);
}

TEST_CASE("clustered covariance matches the explicit sandwich oracle") {
    // 50-row instance, no fixed effects: every matrix is written out by hand.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    Table t;
    t.add_column("y");
    t.add_column("x1");
    t.add_column("x2");
    t.add_column("g");
    for (int i = 0; i < 50; ++i) {
        double x1 = gauss(rng), x2 = gauss(rng);
        t.col("x1").push_back(x1);
        t.col("x2").push_back(x2);
        t.col("g").push_back(i % 7);
        t.col("y").push_back(1.0 + 0.5 * x1 - 0.25 * x2 + gauss(rng));
    }
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x1", "x2"};
    rs.cluster = {"g"};
    rs.intercept = true;
    EstimateReport rep = ols(t, rs);

    Eigen::MatrixXd X(50, 3);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
        X(i, 0) = t.col("x1")[i];
        X(i, 1) = t.col("x2")[i];
        X(i, 2) = 1.0;
        y(i) = t.col("y")[i];
    }
    Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    Eigen::VectorXd beta = bread * X.transpose() * y;
    Eigen::VectorXd e = y - X * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
    for (int g = 0; g < 7; ++g) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(3);
        for (int i = 0; i < 50; ++i)
            if (i % 7 == g) s += e(i) * X.row(i).transpose();
        meat += s * s.transpose();
    }
    double c = (7.0 / 6.0) * (49.0 / (50.0 - 3.0));
    Eigen::MatrixXd V = c * bread * meat * bread;
    CHECK(rep.coef("x1").estimate == doctest::Approx(beta(0)).epsilon(1e-12));
    CHECK(rep.coef("x1").se == doctest::Approx(std::sqrt(V(0, 0))).epsilon(1e-10));
    CHECK(rep.coef("x2").se == doctest::Approx(std::sqrt(V(1, 1))).epsilon(1e-10));
    CHECK(rep.coef("(intercept)").se == doctest::Approx(std::sqrt(V(2, 2))).epsilon(1e-10));
}

TEST_CASE("collinear columns are dropped with a warning") {
    Table t = toy_panel(20, 5, 6);
    t.add_column("x_copy");
    for (std::size_t i = 0; i < t.rows(); ++i) t.col("x_copy").push_back(t.col("x")[i]);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x", "x_copy"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport rep = ols(t, rs);
    CHECK(rep.dropped_columns.size() == 1);
    CHECK(rep.coefficients.size() == 1);
}

TEST_CASE("too few clusters is an inference error") {
    Table t = toy_panel(10, 4, 7, 2.0, 1.0, 1);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.cluster = {"cluster"};
    CHECK_THROWS_AS(ols(t, rs), EstimationError);
}

TEST_CASE("self-instrumenting 2SLS equals OLS") {
    Table t = toy_panel(60, 6, 8);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.instruments = {"x"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport iv = tsls(t, rs);
    rs.instruments.clear();
    EstimateReport ls = ols(t, rs);
    CHECK(iv.coef("x").estimate == doctest::Approx(ls.coef("x").estimate).epsilon(1e-10));
}

TEST_CASE("Wald identity: just-identified IV equals reduced form over first stage") {
    // D is a noisy function of Z; y responds to D.
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Table t;
    for (const char* name : {"y", "D", "Z", "unit", "year", "cluster"})
        t.add_column(name);
    for (int i = 0; i < 800; ++i) {
        int unit = i / 4, year = i % 4;
        double z = (unit % 2 == 0 && year >= 2) ? 1.0 : 0.0;
        double d = (u(rng) < 0.2 + 0.6 * z) ? 1.0 : 0.0;
        double y = 0.7 * d + 0.3 * gauss(rng);
        t.col("y").push_back(y);
        t.col("D").push_back(d);
        t.col("Z").push_back(z);
        t.col("unit").push_back(unit);
        t.col("year").push_back(year);
        t.col("cluster").push_back(unit % 40);
    }
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"D"};
    rs.instruments = {"Z"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport iv = tsls(t, rs);

    RegressionSpec red = rs;
    red.endogenous = {"Z"};
    red.instruments.clear();
    EstimateReport rf = ols(t, red);
    RegressionSpec fs = red;
    fs.outcome = "D";
    EstimateReport first = ols(t, fs);

    double wald = rf.coef("Z").estimate / first.coef("Z").estimate;
    CHECK(iv.coef("D").estimate == doctest::Approx(wald).epsilon(1e-10));
    CHECK(iv.first_stage_F > 10.0);
}

TEST_CASE("2SLS with control columns recovers both coefficients") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Table t;
    for (const char* name : {"y", "D", "Z", "c1", "unit", "year", "cluster"}) t.add_column(name);
    for (int i = 0; i < 2000; ++i) {
        int unit = i / 5, year = i % 5;
        double z = (unit % 2 == 0 && year >= 2) ? 1.0 : 0.0;
        double confound = gauss(rng);
        double d = (u(rng) < 0.2 + 0.5 * z || confound > 1.2) ? 1.0 : 0.0;
        double c1 = 0.8 * confound + 0.2 * gauss(rng);  // observable proxy for the confounder
        double y = 0.7 * d + 1.5 * c1 + 0.3 * gauss(rng);
        t.col("y").push_back(y);
        t.col("D").push_back(d);
        t.col("Z").push_back(z);
        t.col("c1").push_back(c1);
        t.col("unit").push_back(unit);
        t.col("year").push_back(year);
        t.col("cluster").push_back(unit % 40);
    }
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"D"};
    rs.instruments = {"Z"};
    rs.controls = {"c1"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport iv = tsls(t, rs);
    CHECK(std::fabs(iv.coef("D").estimate - 0.7) <= 3.5 * iv.coef("D").se);
    CHECK(std::fabs(iv.coef("c1").estimate - 1.5) <= 3.5 * iv.coef("c1").se);
    CHECK(iv.first_stage_F > 10.0);
}

TEST_CASE("order condition and weak instruments are rejected") {
    Table t = toy_panel(20, 4, 10);
    t.add_column("zero");
    for (std::size_t i = 0; i < t.rows(); ++i) t.col("zero").push_back(0.0);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.cluster = {"cluster"};
    CHECK_THROWS_AS(tsls(t, rs), ConfigError);  // no instruments at all
    rs.instruments = {"zero"};
    rs.fixed_effects = {{"unit"}};
    CHECK_THROWS_AS(tsls(t, rs), EstimationError);  // instrument with no variation
}

TEST_CASE("row permutation leaves every reported number unchanged") {
    Table t = toy_panel(50, 8, 11);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport a = ols(t, rs);

    std::vector<int> perm(t.rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    std::mt19937_64 rng(123);
    std::shuffle(perm.begin(), perm.end(), rng);
    Table shuffled = t.select_rows(perm);
    EstimateReport b = ols(shuffled, rs);
    CHECK(std::fabs(a.coef("x").estimate - b.coef("x").estimate) < 1e-12);
    CHECK(std::fabs(a.coef("x").se - b.coef("x").se) < 1e-12);
    CHECK(a.n == b.n);
    CHECK(a.n_clusters == b.n_clusters);
}

TEST_CASE("FWL: absorbed coefficient equals the full dummy regression") {
    Table t = toy_panel(25, 8, 12);  // 200 rows
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport rep = ols(t, rs);
    Eigen::VectorXd dense = dense_dummy_ols(t, "y", {"x"}, {{"unit"}, {"year"}});
    CHECK(rep.coef("x").estimate == doctest::Approx(dense(0)).epsilon(1e-8));
}

TEST_CASE("elasticity postprocessing") {
    CHECK(elasticity_postprocess(0.0944, -0.133) == doctest::Approx(-0.7098).epsilon(1e-3));
    CHECK(elasticity_postprocess(0.0944, -0.133) == doctest::Approx(-0.71).epsilon(0.005));
    CHECK(elasticity_postprocess(0.0, -0.2) == 0.0);
    CHECK_THROWS_AS(elasticity_postprocess(0.1, 0.0), ConfigError);
    // statutory vs estimated first stage, both on the table
    double statutory = std::log(1.12) - std::log(1.31);
    CHECK(statutory == doctest::Approx(-0.157).epsilon(2e-3));
    CHECK(elasticity_postprocess(0.0944, statutory) ==
          doctest::Approx(0.0944 / statutory).epsilon(1e-12));
}

TEST_CASE("singleton FE groups are dropped before absorption") {
    Table t = toy_panel(10, 3, 13);
    // a lone extra unit with a single observation
    t.col("unit").push_back(99);
    t.col("year").push_back(2000);
    t.col("cluster").push_back(3);
    t.col("x").push_back(1.0);
    t.col("y").push_back(5.0);
    RegressionSpec rs;
    rs.outcome = "y";
    rs.endogenous = {"x"};
    rs.fixed_effects = {{"unit"}, {"year"}};
    rs.cluster = {"cluster"};
    EstimateReport rep = ols(t, rs);
    CHECK(rep.singletons_dropped == 1);
    CHECK(rep.n == 30);
}
