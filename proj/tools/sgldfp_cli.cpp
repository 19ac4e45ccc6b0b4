// Command-line harness: dataset simulation and ingestion, single chains,
// closed-form oracles and the experiment sweeps.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgldfp/experiment.hpp"
#include "sgldfp/libsvm.hpp"
#include "sgldfp/metrics.hpp"
#include "sgldfp/posterior_model.hpp"
#include "sgldfp/samplers.hpp"
#include "sgldfp/simulate.hpp"
#include "sgldfp/stationary.hpp"

namespace {

using namespace sgldfp;

void print_matrix(const char* label, const Eigen::MatrixXd& m) {
    std::printf("%s:\n", label);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) std::printf("  % .12g", m(i, j));
        std::printf("\n");
    }
}

PosteriorModel load_model(const std::string& model_name, const std::string& data_path,
                          int fixture_dim, double prior_variance, double noise_variance) {
    Dataset data = data_path.empty() ? oracle_fixture_dataset(fixture_dim)
                                     : parse_libsvm(data_path);
    if (model_name == "logistic")
        return PosteriorModel::logistic_regression(std::move(data), prior_variance);
    return PosteriorModel::linear_regression(std::move(data), noise_variance, prior_variance);
}

int run_simulate(int n, int d, std::uint64_t seed, const std::string& out_path) {
    const Dataset data = simulate_logistic_dataset(n, d, seed);
    write_libsvm(data, out_path);
    const Eigen::VectorXd theta = simulated_theta_true(d, seed);
    std::printf("wrote %d rows, %d features to %s\n", data.n(), data.dim(), out_path.c_str());
    std::printf("theta_true:");
    for (int j = 0; j < d; ++j) std::printf(" %.12g", theta(j));
    std::printf("\n");
    return 0;
}

int run_parse_data(const std::string& path) {
    LibsvmReport report;
    const Dataset data = parse_libsvm(path, &report);
    std::printf("rows: %d\nfeatures: %d\nlabel_mapping: %s\n", report.n_rows,
                report.n_features, report.label_mapping.c_str());
    std::printf("label mean: %.12g\n", data.y.mean());
    return 0;
}

int run_sample(const PosteriorModel& model, SamplerKind kind, double gamma, int p, long n_iters,
               double burn_in, std::uint64_t seed, const std::string& out_path) {
    const Eigen::VectorXd mode = find_mode(model, 1e-10, 500);
    std::optional<ControlVariateCache> cv;
    if (kind == SamplerKind::SGLDFP) cv = ControlVariateCache::build(model, mode);

    ChainConfig cc;
    cc.kind = kind;
    cc.gamma = gamma;
    cc.p = p;
    cc.n_iters = n_iters > 0 ? n_iters : static_cast<long>(std::ceil(1.0 / gamma));
    cc.burn_in_fraction = burn_in;
    cc.seed = seed;
    cc.init = mode;
    const ChainOutput out = run_chain(model, cc, cv ? &*cv : nullptr);

    std::printf("kind: %s\ngamma: %.17g\niterations: %ld (kept %ld)\n", to_string(kind), gamma,
                cc.n_iters, out.n_kept);
    const GaussianSummary moments = empirical_moments(out.moments);
    std::printf("mean:");
    for (int j = 0; j < model.dim(); ++j) std::printf(" %.12g", moments.mean(j));
    std::printf("\n");
    print_matrix("covariance", moments.cov);
    std::printf("cov trace: %.12g\n", moments.cov.trace());

    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << "{\n  \"kind\": \"" << to_string(kind) << "\",\n  \"gamma\": " << gamma
          << ",\n  \"n_kept\": " << out.n_kept << ",\n  \"mean\": [";
        for (int j = 0; j < model.dim(); ++j)
            f << (j ? ", " : "") << moments.mean(j);
        f << "],\n  \"cov_trace\": " << moments.cov.trace() << "\n}\n";
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

int run_oracle(const PosteriorModel& model, double gamma, int p) {
    const LinRegPosterior post = linreg_posterior_params(model);
    print_matrix("Sigma", post.Sigma);
    std::printf("theta_star:");
    for (int j = 0; j < model.dim(); ++j) std::printf(" %.12g", post.theta_star(j));
    std::printf("\n");
    for (SamplerKind kind :
         {SamplerKind::LMC, SamplerKind::SGLD, SamplerKind::SGLDFP, SamplerKind::SGD}) {
        const Eigen::MatrixXd cov = stationary_cov_linreg(kind, model, gamma, p);
        std::printf("\n[%s] stationary covariance (gamma=%.12g, p=%d)\n", to_string(kind), gamma,
                    p);
        print_matrix("cov", cov);
        if (model.dim() == 1 && (kind == SamplerKind::SGLD || kind == SamplerKind::SGLDFP)) {
            const Sgld1dMoments m = sgld_1d_stationary_moments(model, gamma, p, kind);
            std::printf("recursion: mu=%.12g A=%.12g variance=%.12g\n", m.mu,
                        m.additive_second_moment, m.stationary_variance);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constant-step-size Langevin samplers and their closed-form oracles"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a logistic dataset (libsvm output)");
    int sim_n = 1000, sim_d = 2;
    std::uint64_t sim_seed = 0;
    std::string sim_out = "simulated.libsvm";
    sim->add_option("--n", sim_n, "number of observations")->required();
    sim->add_option("--d", sim_d, "dimension");
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--out", sim_out, "output path");

    // parse-data
    auto* pd = app.add_subcommand("parse-data", "Parse a libsvm file and report its shape");
    std::string pd_path;
    pd->add_option("--input", pd_path, "libsvm file")->required();

    // sample
    auto* sample = app.add_subcommand("sample", "Run one chain and report its moments");
    std::string sample_model = "linear", sample_data, sample_kind = "SGLD", sample_out;
    double sample_gamma = 0.1, sample_burn = 0.10, sample_prior_var = 1.0, sample_noise_var = 1.0;
    int sample_p = 1, sample_dim = 1;
    long sample_iters = 0;
    std::uint64_t sample_seed = 0;
    sample->add_option("--model", sample_model, "linear|logistic");
    sample->add_option("--data", sample_data, "libsvm file (default: built-in fixture)");
    sample->add_option("--fixture-dim", sample_dim, "built-in fixture dimension (1 or 2)");
    sample->add_option("--kind", sample_kind, "LMC|SGLD|SGLDFP|SGD")->required();
    sample->add_option("--gamma", sample_gamma, "step size")->required();
    sample->add_option("--p", sample_p, "minibatch size");
    sample->add_option("--iters", sample_iters, "iterations (0 = ceil(1/gamma))");
    sample->add_option("--burn-in", sample_burn, "burn-in fraction");
    sample->add_option("--seed", sample_seed, "RNG seed")->required();
    sample->add_option("--prior-variance", sample_prior_var, "prior variance");
    sample->add_option("--noise-variance", sample_noise_var, "observation noise variance");
    sample->add_option("--out", sample_out, "JSON summary path");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Closed-form stationary covariances (linear)");
    std::string oracle_data;
    double oracle_gamma = 0.1;
    int oracle_p = 1, oracle_dim = 1;
    oracle->add_option("--data", oracle_data, "libsvm file (default: built-in fixture)");
    oracle->add_option("--fixture-dim", oracle_dim, "built-in fixture dimension (1 or 2)");
    oracle->add_option("--gamma", oracle_gamma, "step size")->required();
    oracle->add_option("--p", oracle_p, "minibatch size");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep (CSV + JSON output)");
    std::string sweep_experiment, sweep_config, sweep_model = "logistic", sweep_data,
                sweep_rule, sweep_out = "sweep";
    std::vector<long> sweep_grid;
    double sweep_eta = -1.0, sweep_burn = 0.10, sweep_mode_tol = 1e-10;
    int sweep_p = -1, sweep_replicas = -1, sweep_dim = 2;
    long sweep_iters = 0;
    std::uint64_t sweep_seed = 0;
    sweep->add_option("--experiment", sweep_experiment,
                      "fig1_bias_sweep|fig2_cov_trace_sweep|fig3_grad_variance|fig4_test_nll|"
                      "oracle_linreg|coupling_contraction");
    sweep->add_option("--config", sweep_config, "JSON config file (flags override)");
    sweep->add_option("--n-grid", sweep_grid, "N grid, ascending");
    sweep->add_option("--eta", sweep_eta, "eta (or fixed gamma, per step rule)");
    sweep->add_option("--step-rule", sweep_rule, "eta_over_N|spectral|fixed");
    sweep->add_option("--p", sweep_p, "minibatch size");
    sweep->add_option("--replicas", sweep_replicas, "independent replicas");
    auto* seed_opt = sweep->add_option("--seed", sweep_seed, "RNG seed (required)");
    sweep->add_option("--dim", sweep_dim, "simulated dimension / fixture dimension");
    sweep->add_option("--model", sweep_model, "logistic|linear");
    sweep->add_option("--data", sweep_data, "libsvm input instead of simulation");
    sweep->add_option("--iters", sweep_iters, "iterations per chain (0 = ceil(1/gamma))");
    sweep->add_option("--burn-in", sweep_burn, "burn-in fraction");
    sweep->add_option("--mode-tol", sweep_mode_tol, "mode-finding tolerance");
    sweep->add_option("--out", sweep_out, "output prefix for .csv/.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(sim_n, sim_d, sim_seed, sim_out);
        if (pd->parsed()) return run_parse_data(pd_path);
        if (sample->parsed()) {
            const PosteriorModel model = load_model(sample_model, sample_data, sample_dim,
                                                    sample_prior_var, sample_noise_var);
            return run_sample(model, sampler_kind_from_string(sample_kind), sample_gamma,
                              sample_p, sample_iters, sample_burn, sample_seed, sample_out);
        }
        if (oracle->parsed()) {
            const PosteriorModel model = load_model("linear", oracle_data, oracle_dim, 1.0, 1.0);
            return run_oracle(model, oracle_gamma, oracle_p);
        }
        if (sweep->parsed()) {
            ExperimentConfig cfg;
            if (!sweep_config.empty()) cfg = config_from_json_file(sweep_config);
            if (!sweep_experiment.empty())
                cfg.experiment = experiment_from_string(sweep_experiment);
            else if (sweep_config.empty())
                throw CLI::ValidationError("sweep", "--experiment or --config is required");
            if (!sweep_grid.empty()) cfg.n_grid = sweep_grid;
            if (sweep_eta >= 0.0) cfg.eta = sweep_eta;
            if (!sweep_rule.empty()) cfg.step_rule = step_rule_from_string(sweep_rule);
            if (sweep_p > 0) cfg.p = sweep_p;
            if (sweep_replicas > 0) cfg.replicas = sweep_replicas;
            if (seed_opt->count() > 0)
                cfg.seed = sweep_seed;
            else if (sweep_config.empty())
                throw CLI::ValidationError("sweep", "--seed is required");
            if (sweep->count("--dim") > 0) cfg.dim = sweep_dim;
            if (sweep->count("--model") > 0) cfg.model = sweep_model;
            if (!sweep_data.empty()) cfg.data_path = sweep_data;
            if (sweep_iters > 0) cfg.n_iters = sweep_iters;
            if (sweep->count("--burn-in") > 0) cfg.burn_in_fraction = sweep_burn;
            if (sweep->count("--mode-tol") > 0) cfg.mode_tol = sweep_mode_tol;
            cfg.output_prefix = sweep_out;

            const RunRecord record = run_experiment(cfg);
            std::printf("experiment: %s\nrows: %zu\nwall clock: %.2fs\nwrote %s.csv, %s.json\n",
                        to_string(record.config.experiment), record.rows.size(),
                        record.wall_clock_seconds, sweep_out.c_str(), sweep_out.c_str());
            for (const auto& note : record.notes) std::printf("note: %s\n", note.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
