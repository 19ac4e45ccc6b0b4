#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgldfp/experiment.hpp"
#include "sgldfp/libsvm.hpp"
#include "sgldfp/simulate.hpp"
#include "test_support.hpp"

using namespace sgldfp;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("simulate_logistic_dataset") {
    const Dataset a = simulate_logistic_dataset(500, 2, 42);
    const Dataset b = simulate_logistic_dataset(500, 2, 42);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);

    // truncation keeps a prefix of the longer simulation
    const Dataset longer = simulate_logistic_dataset(800, 2, 42);
    CHECK((longer.X.topRows(500) - a.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((longer.y.head(500) - a.y).cwiseAbs().maxCoeff() == 0.0);

    // theta_true = 0 gives Bernoulli(1/2) responses
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    const int n = 20000;
    const Dataset fair = simulate_logistic_dataset(n, 2, 7, &zero);
    const double phat = fair.y.mean();
    CHECK(std::abs(phat - 0.5) <= 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));

    // covariates are standard Gaussian: sample covariance near the identity
    const Dataset big = simulate_logistic_dataset(100000, 2, 8);
    const Eigen::MatrixXd cov =
        big.X.transpose() * big.X / static_cast<double>(big.n());
    CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("parse_libsvm basics") {
    const std::string path = temp_path("sgldfp_parse_basic.libsvm");
    write_file(path, "1 1:0.5 3:1.0\n");
    LibsvmReport report;
    const Dataset data = parse_libsvm(path, &report);
    CHECK(report.n_rows == 1);
    CHECK(report.n_features == 3);
    CHECK(data.y(0) == 1.0);
    CHECK(data.X(0, 0) == 0.5);
    CHECK(data.X(0, 1) == 0.0);
    CHECK(data.X(0, 2) == 1.0);
}

TEST_CASE("parse_libsvm label conventions") {
    const std::string path = temp_path("sgldfp_parse_labels.libsvm");
    // covertype-style {1,2} labels
    write_file(path, "2 1:1.0\n1 1:2.0\n");
    LibsvmReport report;
    Dataset data = parse_libsvm(path, &report);
    CHECK(report.label_mapping == "1/2 -> 0/1");
    CHECK(data.y(0) == 1.0);
    CHECK(data.y(1) == 0.0);

    write_file(path, "-1 1:1.0\n+1 1:2.0\n");
    data = parse_libsvm(path, &report);
    CHECK(report.label_mapping == "-1/+1 -> 0/1");
    CHECK(data.y(0) == 0.0);
    CHECK(data.y(1) == 1.0);

    // regression responses stay untouched
    write_file(path, "0.25 1:1.0\n-3.5 1:2.0\n");
    data = parse_libsvm(path, &report);
    CHECK(report.label_mapping == "raw");
    CHECK(data.y(0) == 0.25);
    CHECK(data.y(1) == -3.5);
}

TEST_CASE("parse_libsvm edge cases and errors") {
    const std::string path = temp_path("sgldfp_parse_edge.libsvm");
    write_file(path, "1 1:1.0\n0 2:2.0\n\n");  // trailing blank line
    const Dataset data = parse_libsvm(path);
    CHECK(data.n() == 2);
    CHECK(data.dim() == 2);

    write_file(path, "1 1:1.0\n0 oops\n");
    try {
        (void)parse_libsvm(path);
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    write_file(path, "1 0:1.0\n");
    CHECK_THROWS_AS(parse_libsvm(path), std::runtime_error);
    write_file(path, "");
    CHECK_THROWS_AS(parse_libsvm(path), std::runtime_error);
    CHECK_THROWS_AS(parse_libsvm(temp_path("sgldfp_does_not_exist.libsvm")),
                    std::runtime_error);
}

TEST_CASE("libsvm round trip") {
    const Dataset data = simulate_logistic_dataset(50, 3, 11);
    const std::string path = temp_path("sgldfp_roundtrip.libsvm");
    write_libsvm(data, path);
    const Dataset back = parse_libsvm(path);
    CHECK((back.X - data.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - data.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv: header, round trip, column count") {
    CHECK(csv_string({}) ==
          "experiment,kind,N,gamma,step_rule,p,replicas,metric_name,metric_value,stderr,seed\n");

    std::vector<MetricRow> rows(2);
    rows[0] = {"oracle_linreg", "SGLD", 2,    0.1,  "eta_over_N", 1, 1,
               "oracle_cov_0_0", 2.1 / 5.1, 0.0, 12345};
    rows[1] = {"fig3_grad_variance", "SGLDFP", 1000, 1e-3, "eta_over_N", 10, 20,
               "grad_variance", 3.25e4, 12.5, 67890};
    const std::string text = csv_string(rows);
    const std::vector<MetricRow> parsed = parse_csv_string(text);
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].experiment == rows[i].experiment);
        CHECK(parsed[i].kind == rows[i].kind);
        CHECK(parsed[i].n == rows[i].n);
        CHECK(parsed[i].gamma == rows[i].gamma);
        CHECK(parsed[i].step_rule == rows[i].step_rule);
        CHECK(parsed[i].p == rows[i].p);
        CHECK(parsed[i].replicas == rows[i].replicas);
        CHECK(parsed[i].metric_name == rows[i].metric_name);
        CHECK(parsed[i].metric_value == rows[i].metric_value);
        CHECK(parsed[i].stderr_value == rows[i].stderr_value);
        CHECK(parsed[i].seed == rows[i].seed);
    }

    // every data line has the same number of fields as the header
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        CHECK(std::count(line.begin(), line.end(), ',') == 10);
}

TEST_CASE("oracle_linreg experiment: closed form vs empirical chain") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentId::OracleLinreg;
    cfg.dim = 1;
    cfg.seed = 2024;
    cfg.n_iters = 120000;
    const RunRecord record = run_experiment(cfg);

    double oracle_sgld = -1.0, recursion_sgld = -1.0, w2_oracle = -1.0;
    for (const auto& r : record.rows) {
        if (r.kind == "SGLD" && r.metric_name == "oracle_cov_0_0") oracle_sgld = r.metric_value;
        if (r.kind == "SGLD" && r.metric_name == "oracle_var_recursion")
            recursion_sgld = r.metric_value;
        if (r.metric_name == "w2_lower_bound_oracle") w2_oracle = r.metric_value;
    }
    CHECK(oracle_sgld == doctest::Approx(2.1 / 5.1).epsilon(1e-12));
    CHECK(recursion_sgld == doctest::Approx(2.1 / 5.1).epsilon(1e-12));
    // |sqrt(2.1/5.1) - sqrt(2/5.1)|, the Gaussian lower bound between the
    // subsampled and control-variate stationary laws
    CHECK(w2_oracle == doctest::Approx(0.015464656834598411).epsilon(1e-12));

    // empirical covariance agrees with the closed form within 3 standard errors
    for (const std::string kind : {"LMC", "SGLD", "SGLDFP", "SGD"}) {
        double oracle = -1.0, emp = -1.0, se = -1.0;
        for (const auto& r : record.rows) {
            if (r.kind != kind) continue;
            if (r.metric_name == "oracle_cov_0_0") oracle = r.metric_value;
            if (r.metric_name == "empirical_cov_0_0") {
                emp = r.metric_value;
                se = r.stderr_value;
            }
        }
        REQUIRE(oracle >= 0.0);
        REQUIRE(emp >= 0.0);
        CHECK(std::abs(emp - oracle) <= 3.0 * se);
    }
}

TEST_CASE("experiment determinism: identical config gives byte-identical CSV") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentId::OracleLinreg;
    cfg.dim = 1;
    cfg.seed = 99;
    cfg.n_iters = 20000;
    const RunRecord a = run_experiment(cfg);
    const RunRecord b = run_experiment(cfg);
    CHECK(csv_string(a.rows) == csv_string(b.rows));
    CHECK(a.notes == b.notes);
}

TEST_CASE("sweep truncation consistency: shared prefixes give identical rows") {
    ExperimentConfig small;
    small.experiment = ExperimentId::Fig3GradVariance;
    small.n_grid = {60};
    small.replicas = 3;
    small.p = 2;
    small.seed = 31415;
    const RunRecord a = run_experiment(small);

    ExperimentConfig larger = small;
    larger.n_grid = {60, 120};
    const RunRecord b = run_experiment(larger);

    for (const auto& ra : a.rows) {
        if (ra.n != 60) continue;
        bool found = false;
        for (const auto& rb : b.rows)
            if (rb.n == 60 && rb.kind == ra.kind && rb.metric_name == ra.metric_name) {
                CHECK(rb.metric_value == ra.metric_value);
                found = true;
            }
        CHECK(found);
    }
}

TEST_CASE("file-backed sweep reproduces the simulation-backed sweep bit for bit") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentId::Fig3GradVariance;
    cfg.n_grid = {50, 100};
    cfg.replicas = 3;
    cfg.p = 2;
    cfg.seed = 64738;
    const RunRecord simulated = run_experiment(cfg);

    // the libsvm writer round-trips doubles exactly, so feeding the same
    // master dataset back through a file must not change a single row
    const std::string path = temp_path("sgldfp_master.libsvm");
    write_libsvm(simulate_logistic_dataset(100, cfg.dim, cfg.seed), path);
    ExperimentConfig from_file = cfg;
    from_file.data_path = path;
    const RunRecord ingested = run_experiment(from_file);
    CHECK(csv_string(simulated.rows) == csv_string(ingested.rows));
}

TEST_CASE("config json round trip and output files") {
    const std::string cfg_path = temp_path("sgldfp_config.json");
    write_file(cfg_path, R"({
      "experiment": "oracle_linreg",
      "dim": 1,
      "seed": 7,
      "n_iters": 5000,
      "eta": 0.2,
      "output_prefix": ")" + temp_path("sgldfp_out") + R"("
    })");
    const ExperimentConfig cfg = config_from_json_file(cfg_path);
    CHECK(cfg.experiment == ExperimentId::OracleLinreg);
    CHECK(cfg.dim == 1);
    CHECK(*cfg.eta == 0.2);

    const RunRecord record = run_experiment(cfg);
    CHECK(std::filesystem::exists(temp_path("sgldfp_out.csv")));
    CHECK(std::filesystem::exists(temp_path("sgldfp_out.json")));
    const std::vector<MetricRow> parsed = parse_csv(temp_path("sgldfp_out.csv"));
    CHECK(parsed.size() == record.rows.size());
    const std::string js = json_string(record);
    CHECK(js.find("\"schema_version\"") != std::string::npos);
    CHECK(js.find("\"wall_clock_seconds\"") != std::string::npos);
}

TEST_CASE("fig4 sweep: control variates beat the subsampled kernel at the largest N") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentId::Fig4TestNll;
    cfg.n_grid = {316, 1000};
    cfg.replicas = 20;
    cfg.seed = 2718;
    const RunRecord record = run_experiment(cfg);

    double fp = 0.0, fp_se = 0.0, sgld = 0.0, sgld_se = 0.0;
    for (const auto& r : record.rows) {
        if (r.metric_name != "test_nll_final" || r.n != 1000) continue;
        if (r.kind == "SGLDFP") {
            fp = r.metric_value;
            fp_se = r.stderr_value;
        }
        if (r.kind == "SGLD") {
            sgld = r.metric_value;
            sgld_se = r.stderr_value;
        }
    }
    REQUIRE(fp != 0.0);
    REQUIRE(sgld != 0.0);
    // one-sided Monte-Carlo comparison over the replicas
    CHECK(fp <= sgld + 3.0 * std::sqrt(fp_se * fp_se + sgld_se * sgld_se));
}
