#include "sgldfp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sgldfp/libsvm.hpp"
#include "sgldfp/metrics.hpp"
#include "sgldfp/posterior_model.hpp"
#include "sgldfp/samplers.hpp"
#include "sgldfp/simulate.hpp"
#include "sgldfp/stationary.hpp"

namespace sgldfp {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_metric(const char* stem, long k) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_k%03ld", stem, k);
    return buf;
}

std::uint64_t cell_seed(std::uint64_t seed, unsigned a, unsigned b, unsigned c, unsigned d) {
    const std::uint64_t id = (static_cast<std::uint64_t>(a) << 48) ^
                             (static_cast<std::uint64_t>(b) << 32) ^
                             (static_cast<std::uint64_t>(c) << 16) ^ static_cast<std::uint64_t>(d);
    return RngStream::derive(seed, id, 0xce11).next_u64();
}

void parallel_for_indices(int n, const std::function<void(int)>& fn) {
    const int n_threads =
        std::max(1, std::min<int>(static_cast<int>(std::thread::hardware_concurrency()), n));
    if (n_threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n; i += n_threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double gamma_for(StepRule rule, double eta, const Eigen::MatrixXd& x) {
    switch (rule) {
        case StepRule::EtaOverN: return eta / static_cast<double>(x.rows());
        case StepRule::Fixed: return eta;
        case StepRule::Spectral: {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x);
            return 1.0 / (1.0 + es.eigenvalues().maxCoeff() / 4.0);
        }
    }
    throw std::logic_error("gamma_for: unreachable");
}

PosteriorModel make_model(const ExperimentConfig& cfg, Dataset data) {
    if (cfg.model == "logistic") return PosteriorModel::logistic_regression(std::move(data), 1.0);
    if (cfg.model == "linear")
        return PosteriorModel::linear_regression(std::move(data), 1.0, 1.0);
    throw std::invalid_argument("run_experiment: unknown model '" + cfg.model + "'");
}

struct RowBuilder {
    const ExperimentConfig& cfg;
    std::vector<MetricRow>& rows;

    void add(const std::string& kind, long n, double gamma, const std::string& name,
             double value, double se) const {
        if (!std::isfinite(value) || !std::isfinite(se))
            throw std::logic_error("run_experiment: non-finite metric " + name);
        MetricRow r;
        r.experiment = to_string(cfg.experiment);
        r.kind = kind;
        r.n = n;
        r.gamma = gamma;
        r.step_rule = to_string(*cfg.step_rule);
        r.p = *cfg.p;
        r.replicas = *cfg.replicas;
        r.metric_name = name;
        r.metric_value = value;
        r.stderr_value = se;
        r.seed = cfg.seed;
        rows.push_back(std::move(r));
    }
};

Dataset master_dataset(const ExperimentConfig& cfg, long n_needed,
                       std::vector<std::string>& notes) {
    if (!cfg.data_path.empty()) {
        LibsvmReport report;
        Dataset data = parse_libsvm(cfg.data_path, &report);
        notes.push_back("data: " + cfg.data_path + " (" + std::to_string(report.n_rows) +
                        " rows, " + std::to_string(report.n_features) + " features, labels " +
                        report.label_mapping + ")");
        if (data.n() < n_needed)
            throw std::invalid_argument("run_experiment: dataset smaller than the N grid needs");
        return data;
    }
    notes.push_back("data: simulated logistic, d=" + std::to_string(cfg.dim) +
                    ", master N=" + std::to_string(n_needed));
    return simulate_logistic_dataset(static_cast<int>(n_needed), cfg.dim, cfg.seed);
}

void add_slope_rows(const RowBuilder& out, const std::string& kind,
                    const std::vector<std::pair<double, double>>& points,
                    const std::string& metric_name, std::vector<std::string>& notes) {
    if (points.size() < 2) {
        notes.push_back("slope skipped for " + kind + "/" + metric_name +
                        ": fewer than two positive points");
        return;
    }
    const LogLogFit fit = fit_loglog_slope(points);
    out.add(kind, 0, 0.0, "loglog_slope_" + metric_name, fit.slope, fit.residual);
}

constexpr SamplerKind kAllKinds[] = {SamplerKind::LMC, SamplerKind::SGLD, SamplerKind::SGLDFP,
                                     SamplerKind::SGD};
constexpr SamplerKind kSubsampledKinds[] = {SamplerKind::SGLD, SamplerKind::SGLDFP,
                                            SamplerKind::SGD};

// figures 1 and 2: distance to the mode / covariance trace, swept over N
void run_moment_sweep(const ExperimentConfig& cfg, std::vector<MetricRow>& rows,
                      std::vector<std::string>& notes) {
    const bool want_cov = cfg.experiment == ExperimentId::Fig2CovTraceSweep;
    const RowBuilder out{cfg, rows};
    const Dataset master = master_dataset(cfg, cfg.n_grid.back(), notes);
    const int replicas = *cfg.replicas;

    // per kind: (N, metric) points for the slope fits
    std::vector<std::vector<std::pair<double, double>>> dist_avg(4), dist_mean(4), cov_tr(4);

    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const long n = cfg.n_grid[gi];
        const PosteriorModel model = make_model(cfg, master.prefix(static_cast<int>(n)));
        const Eigen::VectorXd mode = find_mode(model, cfg.mode_tol, 500);
        const double gamma = gamma_for(*cfg.step_rule, *cfg.eta, model.data().X);
        const long n_iters =
            cfg.n_iters > 0 ? cfg.n_iters : static_cast<long>(std::ceil(1.0 / gamma));
        const ControlVariateCache cv = ControlVariateCache::build(model, mode);

        for (unsigned ki = 0; ki < 4; ++ki) {
            const SamplerKind kind = kAllKinds[ki];
            std::vector<std::optional<Eigen::VectorXd>> means(replicas);
            std::vector<std::optional<double>> traces(replicas);
            std::vector<std::string> replica_notes(replicas);
            parallel_for_indices(replicas, [&](int r) {
                ChainConfig cc;
                cc.kind = kind;
                cc.gamma = gamma;
                cc.p = *cfg.p;
                cc.n_iters = n_iters;
                cc.burn_in_fraction = cfg.burn_in_fraction;
                cc.seed = cell_seed(cfg.seed, static_cast<unsigned>(gi), ki,
                                    static_cast<unsigned>(r), 1);
                cc.init = mode;
                try {
                    const ChainOutput res = run_chain(model, cc, &cv);
                    means[r] = res.moments.mean();
                    if (res.moments.count() >= 2) traces[r] = res.moments.covariance().trace();
                } catch (const DivergenceError& e) {
                    replica_notes[r] = e.what();
                }
            });
            for (int r = 0; r < replicas; ++r)
                if (!replica_notes[r].empty())
                    notes.push_back("N=" + std::to_string(n) + " " + to_string(kind) +
                                    " replica " + std::to_string(r) + ": " + replica_notes[r]);

            if (want_cov) {
                RunningStat stat;
                for (const auto& t : traces)
                    if (t) stat.add(*t);
                if (stat.count() > 0) {
                    out.add(to_string(kind), n, gamma, "cov_trace", stat.mean(),
                            stat.stderr_of_mean());
                    if (stat.mean() > 0.0) cov_tr[ki].emplace_back(n, stat.mean());
                }
            } else {
                RunningStat dist;
                Eigen::VectorXd avg = Eigen::VectorXd::Zero(model.dim());
                long n_ok = 0;
                for (const auto& m : means)
                    if (m) {
                        dist.add((*m - mode).norm());
                        avg += *m;
                        ++n_ok;
                    }
                if (n_ok == 0) continue;
                avg /= static_cast<double>(n_ok);
                out.add(to_string(kind), n, gamma, "distance_to_mode_mean", dist.mean(),
                        dist.stderr_of_mean());
                // norm of the replica-averaged posterior-mean estimate; its
                // standard error comes from the replica spread along the
                // bias direction
                const Eigen::VectorXd delta = avg - mode;
                const double dist_of_avg = delta.norm();
                double se = 0.0;
                if (dist_of_avg > 0.0 && n_ok > 1) {
                    const Eigen::VectorXd u = delta / dist_of_avg;
                    RunningStat proj;
                    for (const auto& m : means)
                        if (m) proj.add(u.dot(*m - mode));
                    se = proj.stderr_of_mean();
                }
                out.add(to_string(kind), n, gamma, "distance_to_mode_of_avg", dist_of_avg, se);
                if (dist.mean() > 0.0) dist_mean[ki].emplace_back(n, dist.mean());
                if (dist_of_avg > 0.0) dist_avg[ki].emplace_back(n, dist_of_avg);
            }
        }
    }
    for (unsigned ki = 0; ki < 4; ++ki) {
        const std::string kind = to_string(kAllKinds[ki]);
        if (want_cov) {
            add_slope_rows(out, kind, cov_tr[ki], "cov_trace", notes);
        } else {
            add_slope_rows(out, kind, dist_mean[ki], "distance_to_mode_mean", notes);
            add_slope_rows(out, kind, dist_avg[ki], "distance_to_mode_of_avg", notes);
        }
    }
}

// figure 3: variance of the stochastic gradients along each kernel's
// trajectory, swept over N
void run_grad_variance_sweep(const ExperimentConfig& cfg, std::vector<MetricRow>& rows,
                             std::vector<std::string>& notes) {
    const RowBuilder out{cfg, rows};
    const Dataset master = master_dataset(cfg, cfg.n_grid.back(), notes);
    const int replicas = *cfg.replicas;
    notes.push_back("grad variance measured over the post-burn-in trajectory gradients");

    std::vector<std::vector<std::pair<double, double>>> points(3);
    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const long n = cfg.n_grid[gi];
        const PosteriorModel model = make_model(cfg, master.prefix(static_cast<int>(n)));
        const Eigen::VectorXd mode = find_mode(model, cfg.mode_tol, 500);
        const double gamma = gamma_for(*cfg.step_rule, *cfg.eta, model.data().X);
        const long n_iters =
            cfg.n_iters > 0 ? cfg.n_iters : static_cast<long>(std::ceil(1.0 / gamma));
        const long burn = static_cast<long>(cfg.burn_in_fraction * n_iters);
        const ControlVariateCache cv = ControlVariateCache::build(model, mode);

        for (unsigned ki = 0; ki < 3; ++ki) {
            const SamplerKind kind = kSubsampledKinds[ki];
            std::vector<std::optional<double>> variances(replicas);
            std::vector<std::string> replica_notes(replicas);
            parallel_for_indices(replicas, [&](int r) {
                ChainConfig cc;
                cc.kind = kind;
                cc.gamma = gamma;
                cc.p = *cfg.p;
                cc.n_iters = n_iters;
                cc.burn_in_fraction = cfg.burn_in_fraction;
                cc.seed = cell_seed(cfg.seed, static_cast<unsigned>(gi), ki,
                                    static_cast<unsigned>(r), 3);
                cc.init = mode;
                MomentAccumulator grads(model.dim());
                try {
                    run_chain(model, cc, &cv,
                              [&](long k, const Eigen::VectorXd&, const Eigen::VectorXd& g) {
                                  if (k > burn) grads.add(g);
                              });
                    if (grads.count() >= 2)
                        variances[r] = grads.covariance().diagonal().mean();
                } catch (const DivergenceError& e) {
                    replica_notes[r] = e.what();
                }
            });
            for (int r = 0; r < replicas; ++r)
                if (!replica_notes[r].empty())
                    notes.push_back("N=" + std::to_string(n) + " " + to_string(kind) +
                                    " replica " + std::to_string(r) + ": " + replica_notes[r]);
            RunningStat stat;
            for (const auto& v : variances)
                if (v) stat.add(*v);
            if (stat.count() > 0) {
                out.add(to_string(kind), n, gamma, "grad_variance", stat.mean(),
                        stat.stderr_of_mean());
                if (stat.mean() > 0.0) points[ki].emplace_back(n, stat.mean());
            }
        }
    }
    for (unsigned ki = 0; ki < 3; ++ki)
        add_slope_rows(out, to_string(kSubsampledKinds[ki]), points[ki], "grad_variance", notes);
}

// figure 4: held-out negative log-likelihood per iteration block
void run_test_nll_sweep(const ExperimentConfig& cfg, std::vector<MetricRow>& rows,
                        std::vector<std::string>& notes) {
    constexpr int kBlocks = 10;
    const RowBuilder out{cfg, rows};
    // last 20% of the master rows are the held-out split, never shuffled
    const long train_needed = cfg.n_grid.back();
    const long master_n = cfg.data_path.empty()
                              ? static_cast<long>(std::ceil(train_needed / 0.8))
                              : train_needed;  // file size checked below
    Dataset master = master_dataset(cfg, master_n, notes);
    const long split = static_cast<long>(std::floor(master.n() * 0.8));
    if (split < train_needed)
        throw std::invalid_argument("run_experiment: train split smaller than the N grid needs");
    const Dataset train_pool = master.prefix(static_cast<int>(split));
    Dataset test(master.X.bottomRows(master.n() - split),
                 master.y.tail(master.n() - split));
    notes.push_back("test split: last " + std::to_string(test.n()) + " rows of the master");
    const int replicas = *cfg.replicas;

    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
        const long n = cfg.n_grid[gi];
        const PosteriorModel model = make_model(cfg, train_pool.prefix(static_cast<int>(n)));
        const Eigen::VectorXd mode = find_mode(model, cfg.mode_tol, 500);
        const double gamma = gamma_for(*cfg.step_rule, *cfg.eta, model.data().X);
        const long n_iters =
            cfg.n_iters > 0 ? cfg.n_iters : static_cast<long>(std::ceil(1.0 / gamma));
        const long burn = static_cast<long>(cfg.burn_in_fraction * n_iters);
        const long kept = n_iters - burn;
        if (kept < kBlocks) {
            notes.push_back("N=" + std::to_string(n) + ": too few kept iterations for blocks");
            continue;
        }
        const ControlVariateCache cv = ControlVariateCache::build(model, mode);

        for (unsigned ki = 0; ki < 3; ++ki) {
            const SamplerKind kind = kSubsampledKinds[ki];
            std::vector<std::optional<std::vector<double>>> curves(replicas);
            std::vector<std::string> replica_notes(replicas);
            parallel_for_indices(replicas, [&](int r) {
                ChainConfig cc;
                cc.kind = kind;
                cc.gamma = gamma;
                cc.p = *cfg.p;
                cc.n_iters = n_iters;
                cc.burn_in_fraction = cfg.burn_in_fraction;
                cc.seed = cell_seed(cfg.seed, static_cast<unsigned>(gi), ki,
                                    static_cast<unsigned>(r), 4);
                cc.init = mode;
                Eigen::VectorXd running_sum = Eigen::VectorXd::Zero(model.dim());
                long kept_count = 0;
                int next_block = 1;
                std::vector<double> nll;
                try {
                    run_chain(model, cc, &cv,
                              [&](long k, const Eigen::VectorXd& theta, const Eigen::VectorXd&) {
                                  if (k <= burn) return;
                                  running_sum += theta;
                                  ++kept_count;
                                  if (kept_count == kept * next_block / kBlocks) {
                                      nll.push_back(logistic_mean_nll(
                                          test, running_sum / static_cast<double>(kept_count)));
                                      ++next_block;
                                  }
                              });
                    curves[r] = std::move(nll);
                } catch (const DivergenceError& e) {
                    replica_notes[r] = e.what();
                }
            });
            for (int r = 0; r < replicas; ++r)
                if (!replica_notes[r].empty())
                    notes.push_back("N=" + std::to_string(n) + " " + to_string(kind) +
                                    " replica " + std::to_string(r) + ": " + replica_notes[r]);
            for (int b = 0; b < kBlocks; ++b) {
                RunningStat stat;
                for (const auto& c : curves)
                    if (c && static_cast<int>(c->size()) > b) stat.add((*c)[b]);
                if (stat.count() == 0) continue;
                out.add(to_string(kind), n, gamma, fmt_metric("test_nll_block", b + 1),
                        stat.mean(), stat.stderr_of_mean());
                if (b == kBlocks - 1)
                    out.add(to_string(kind), n, gamma, "test_nll_final", stat.mean(),
                            stat.stderr_of_mean());
            }
        }
    }
}

// closed-form stationary covariances versus a long empirical chain
void run_oracle_linreg(const ExperimentConfig& cfg, std::vector<MetricRow>& rows,
                       std::vector<std::string>& notes) {
    constexpr int kBatches = 100;
    const RowBuilder out{cfg, rows};
    const Dataset data =
        cfg.data_path.empty() ? oracle_fixture_dataset(cfg.dim) : parse_libsvm(cfg.data_path);
    const PosteriorModel model = PosteriorModel::linear_regression(data, 1.0, 1.0);
    const LinRegPosterior post = linreg_posterior_params(model);
    const long n = model.n_data();
    const double gamma = *cfg.eta / static_cast<double>(n);
    const long n_iters = cfg.n_iters > 0 ? cfg.n_iters : 200000;
    const long burn = static_cast<long>(cfg.burn_in_fraction * n_iters);
    const long kept = n_iters - burn;
    const long block = kept / kBatches;
    if (block < 2) throw std::invalid_argument("oracle_linreg: n_iters too small for batches");
    notes.push_back("oracle fixture: linear regression d=" + std::to_string(model.dim()) +
                    ", N=" + std::to_string(n) + ", batch means over " +
                    std::to_string(kBatches) + " blocks of " + std::to_string(block));
    const ControlVariateCache cv = ControlVariateCache::build(model, post.theta_star);
    const int d = model.dim();
    std::map<SamplerKind, GaussianSummary> oracle_laws, empirical_laws;

    for (unsigned ki = 0; ki < 4; ++ki) {
        const SamplerKind kind = kAllKinds[ki];
        const Eigen::MatrixXd oracle = stationary_cov_linreg(kind, model, gamma, *cfg.p);
        // the linear-regression kernels are unbiased, so the oracle law is
        // centered at the mode
        oracle_laws[kind] = GaussianSummary{post.theta_star, oracle, 0};
        out.add(to_string(kind), n, gamma, "oracle_cov_trace", oracle.trace(), 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                char name[48];
                std::snprintf(name, sizeof(name), "oracle_cov_%d_%d", i, j);
                out.add(to_string(kind), n, gamma, name, oracle(i, j), 0.0);
            }
        if (d == 1 && (kind == SamplerKind::SGLD || kind == SamplerKind::SGLDFP)) {
            const Sgld1dMoments m = sgld_1d_stationary_moments(model, gamma, *cfg.p, kind);
            out.add(to_string(kind), n, gamma, "oracle_var_recursion", m.stationary_variance,
                    0.0);
        }

        // one long chain; batch means give the Monte-Carlo standard errors
        ChainConfig cc;
        cc.kind = kind;
        cc.gamma = gamma;
        cc.p = *cfg.p;
        cc.n_iters = n_iters;
        cc.burn_in_fraction = cfg.burn_in_fraction;
        cc.seed = cell_seed(cfg.seed, 0, ki, 0, 5);
        cc.init = post.theta_star;
        std::vector<std::vector<RunningStat>> entry_stats(d, std::vector<RunningStat>(d));
        RunningStat trace_stat;
        MomentAccumulator block_acc(d);
        MomentAccumulator chain_acc(d);
        long block_count = 0;
        run_chain(model, cc, &cv,
                  [&](long k, const Eigen::VectorXd& theta, const Eigen::VectorXd&) {
                      if (k <= burn) return;
                      chain_acc.add(theta);
                      if (block_count >= kBatches) return;
                      block_acc.add(theta);
                      if (block_acc.count() == block) {
                          const Eigen::MatrixXd c = block_acc.covariance();
                          for (int i = 0; i < d; ++i)
                              for (int j = i; j < d; ++j) entry_stats[i][j].add(c(i, j));
                          trace_stat.add(c.trace());
                          block_acc = MomentAccumulator(d);
                          ++block_count;
                      }
                  });
        empirical_laws[kind] = empirical_moments(chain_acc);
        out.add(to_string(kind), n, gamma, "empirical_cov_trace", trace_stat.mean(),
                trace_stat.stderr_of_mean());
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                char name[48];
                std::snprintf(name, sizeof(name), "empirical_cov_%d_%d", i, j);
                out.add(to_string(kind), n, gamma, name, entry_stats[i][j].mean(),
                        entry_stats[i][j].stderr_of_mean());
            }
    }

    // Gaussian Wasserstein-2 lower bound between the subsampled and
    // control-variate stationary laws, from the closed-form and the
    // empirical moment pairs
    out.add("SGLD_vs_SGLDFP", n, gamma, "w2_lower_bound_oracle",
            w2_gaussian(oracle_laws[SamplerKind::SGLD], oracle_laws[SamplerKind::SGLDFP]), 0.0);
    out.add("SGLD_vs_SGLDFP", n, gamma, "w2_lower_bound_empirical",
            w2_gaussian(empirical_laws[SamplerKind::SGLD], empirical_laws[SamplerKind::SGLDFP]),
            0.0);
}

// synchronously coupled same-kind chains against the contraction rate
void run_coupling_contraction(const ExperimentConfig& cfg, std::vector<MetricRow>& rows,
                              std::vector<std::string>& notes) {
    const RowBuilder out{cfg, rows};
    const Dataset data =
        cfg.data_path.empty() ? contraction_fixture_dataset() : parse_libsvm(cfg.data_path);
    const PosteriorModel model = PosteriorModel::linear_regression(data, 1.0, 1.0);
    const LinRegPosterior post = linreg_posterior_params(model);
    const ModelConstants consts = lipschitz_constants(model, post.theta_star);
    const double gamma = *cfg.eta;
    const long n_iters = cfg.n_iters > 0 ? cfg.n_iters : 40;
    const long n = model.n_data();
    notes.push_back("contraction constants: m=" + fmt17(consts.m) + ", L=" + fmt17(consts.L));

    const Eigen::VectorXd init_a = post.theta_star.array() + 2.0;
    const Eigen::VectorXd init_b = post.theta_star.array() - 1.0;
    const double d0_sq = (init_a - init_b).squaredNorm();
    const double factor = 1.0 - 2.0 * consts.m * gamma * (1.0 - gamma * consts.L / 2.0);
    const ControlVariateCache cv = ControlVariateCache::build(model, post.theta_star);

    for (unsigned ki = 0; ki < 4; ++ki) {
        const SamplerKind kind = kAllKinds[ki];
        const CoupledDistanceCurve curve = run_coupled_chains(
            model, kind, kind, gamma, *cfg.p, n_iters, cell_seed(cfg.seed, 0, ki, 0, 6), init_a,
            init_b, *cfg.replicas, &cv);
        for (long k = 0; k <= n_iters; ++k) {
            out.add(to_string(kind), n, gamma, fmt_metric("coupled_sq_dist", k),
                    curve.mean_sq_dist[k], curve.stderr_sq_dist[k]);
            out.add(to_string(kind), n, gamma, fmt_metric("contraction_bound", k),
                    std::pow(factor, static_cast<double>(k)) * d0_sq, 0.0);
        }
    }
}

}  // namespace

const char* to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::Fig1BiasSweep: return "fig1_bias_sweep";
        case ExperimentId::Fig2CovTraceSweep: return "fig2_cov_trace_sweep";
        case ExperimentId::Fig3GradVariance: return "fig3_grad_variance";
        case ExperimentId::Fig4TestNll: return "fig4_test_nll";
        case ExperimentId::OracleLinreg: return "oracle_linreg";
        case ExperimentId::CouplingContraction: return "coupling_contraction";
    }
    return "?";
}

ExperimentId experiment_from_string(const std::string& name) {
    for (ExperimentId id :
         {ExperimentId::Fig1BiasSweep, ExperimentId::Fig2CovTraceSweep,
          ExperimentId::Fig3GradVariance, ExperimentId::Fig4TestNll, ExperimentId::OracleLinreg,
          ExperimentId::CouplingContraction})
        if (name == to_string(id)) return id;
    throw std::invalid_argument("unknown experiment: " + name);
}

const char* to_string(StepRule rule) {
    switch (rule) {
        case StepRule::EtaOverN: return "eta_over_N";
        case StepRule::Spectral: return "spectral";
        case StepRule::Fixed: return "fixed";
    }
    return "?";
}

StepRule step_rule_from_string(const std::string& name) {
    for (StepRule r : {StepRule::EtaOverN, StepRule::Spectral, StepRule::Fixed})
        if (name == to_string(r)) return r;
    throw std::invalid_argument("unknown step rule: " + name);
}

Dataset oracle_fixture_dataset(int dim) {
    if (dim == 1) {
        Eigen::MatrixXd x(2, 1);
        x << 1.0, 1.0;
        Eigen::VectorXd y(2);
        y << 0.0, 1.0;
        return Dataset(x, y);
    }
    if (dim == 2) {
        Eigen::MatrixXd x(4, 2);
        x << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -0.5, 0.5;
        Eigen::VectorXd y(4);
        y << 0.2, -0.1, 0.4, 0.0;
        return Dataset(x, y);
    }
    throw std::invalid_argument("oracle_fixture_dataset: dim must be 1 or 2");
}

Dataset contraction_fixture_dataset() {
    Eigen::MatrixXd x(2, 1);
    x << 1.0, 2.0;
    Eigen::VectorXd y(2);
    y << 0.5, 1.0;
    return Dataset(x, y);
}

ExperimentConfig with_defaults(ExperimentConfig cfg) {
    const std::vector<long> desk_grid = {100, 316, 1000, 3162, 10000};
    switch (cfg.experiment) {
        case ExperimentId::Fig1BiasSweep:
        case ExperimentId::Fig2CovTraceSweep:
            if (cfg.n_grid.empty()) cfg.n_grid = desk_grid;
            if (!cfg.step_rule) cfg.step_rule = StepRule::Spectral;
            if (!cfg.eta) cfg.eta = 1.0;
            if (!cfg.p) cfg.p = 10;
            if (!cfg.replicas) cfg.replicas = 20;
            break;
        case ExperimentId::Fig3GradVariance:
            if (cfg.n_grid.empty()) cfg.n_grid = desk_grid;
            if (!cfg.step_rule) cfg.step_rule = StepRule::EtaOverN;
            if (!cfg.eta) cfg.eta = 1.0;
            if (!cfg.p) cfg.p = 10;
            if (!cfg.replicas) cfg.replicas = 20;
            break;
        case ExperimentId::Fig4TestNll:
            if (cfg.n_grid.empty()) cfg.n_grid = {100, 316, 1000};
            if (!cfg.step_rule) cfg.step_rule = StepRule::EtaOverN;
            if (!cfg.eta) cfg.eta = 1.0;
            if (!cfg.p) cfg.p = 10;
            if (!cfg.replicas) cfg.replicas = 20;
            break;
        case ExperimentId::OracleLinreg:
            if (cfg.n_grid.empty()) cfg.n_grid = {0};  // fixture-sized
            if (!cfg.step_rule) cfg.step_rule = StepRule::EtaOverN;
            if (!cfg.eta) cfg.eta = cfg.dim == 1 ? 0.2 : 0.08;
            if (!cfg.p) cfg.p = 1;
            if (!cfg.replicas) cfg.replicas = 1;
            cfg.model = "linear";
            break;
        case ExperimentId::CouplingContraction:
            if (cfg.n_grid.empty()) cfg.n_grid = {0};
            if (!cfg.step_rule) cfg.step_rule = StepRule::Fixed;
            if (!cfg.eta) cfg.eta = 0.05;
            if (!cfg.p) cfg.p = 1;
            if (!cfg.replicas) cfg.replicas = 200;
            cfg.model = "linear";
            break;
    }
    if (!std::is_sorted(cfg.n_grid.begin(), cfg.n_grid.end()))
        throw std::invalid_argument("ExperimentConfig: n_grid must be sorted ascending");
    if (*cfg.replicas < 1) throw std::invalid_argument("ExperimentConfig: replicas >= 1");
    return cfg;
}

RunRecord run_experiment(const ExperimentConfig& raw) {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord record;
    record.config = with_defaults(raw);
    const ExperimentConfig& cfg = record.config;
    switch (cfg.experiment) {
        case ExperimentId::Fig1BiasSweep:
        case ExperimentId::Fig2CovTraceSweep:
            run_moment_sweep(cfg, record.rows, record.notes);
            break;
        case ExperimentId::Fig3GradVariance:
            run_grad_variance_sweep(cfg, record.rows, record.notes);
            break;
        case ExperimentId::Fig4TestNll:
            run_test_nll_sweep(cfg, record.rows, record.notes);
            break;
        case ExperimentId::OracleLinreg:
            run_oracle_linreg(cfg, record.rows, record.notes);
            break;
        case ExperimentId::CouplingContraction:
            run_coupling_contraction(cfg, record.rows, record.notes);
            break;
    }
    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.output_prefix.empty()) {
        emit_csv(record.rows, cfg.output_prefix + ".csv");
        emit_json(record, cfg.output_prefix + ".json");
    }
    return record;
}

std::string csv_string(const std::vector<MetricRow>& rows) {
    std::ostringstream out;
    out << "experiment,kind,N,gamma,step_rule,p,replicas,metric_name,metric_value,stderr,seed\n";
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.kind << ',' << r.n << ',' << fmt17(r.gamma) << ','
            << r.step_rule << ',' << r.p << ',' << r.replicas << ',' << r.metric_name << ','
            << fmt17(r.metric_value) << ',' << fmt17(r.stderr_value) << ',' << r.seed << '\n';
    }
    return out.str();
}

void emit_csv(const std::vector<MetricRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    out << csv_string(rows);
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

std::vector<MetricRow> parse_csv_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse_csv: empty input");
    const std::string expected =
        "experiment,kind,N,gamma,step_rule,p,replicas,metric_name,metric_value,stderr,seed";
    if (line != expected) throw std::runtime_error("parse_csv: unexpected header: " + line);
    std::vector<MetricRow> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string tok;
        std::istringstream ls(line);
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        if (f.size() != 11)
            throw std::runtime_error("parse_csv: line " + std::to_string(line_no) +
                                     ": expected 11 fields, got " + std::to_string(f.size()));
        MetricRow r;
        r.experiment = f[0];
        r.kind = f[1];
        r.n = std::stol(f[2]);
        r.gamma = std::stod(f[3]);
        r.step_rule = f[4];
        r.p = std::stoi(f[5]);
        r.replicas = std::stoi(f[6]);
        r.metric_name = f[7];
        r.metric_value = std::stod(f[8]);
        r.stderr_value = std::stod(f[9]);
        r.seed = std::stoull(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<MetricRow> parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_csv: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_string(buf.str());
}

namespace {

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = to_string(cfg.experiment);
    j["n_grid"] = cfg.n_grid;
    if (cfg.eta) j["eta"] = *cfg.eta;
    if (cfg.step_rule) j["step_rule"] = to_string(*cfg.step_rule);
    if (cfg.p) j["p"] = *cfg.p;
    if (cfg.replicas) j["replicas"] = *cfg.replicas;
    j["seed"] = cfg.seed;
    j["dim"] = cfg.dim;
    j["model"] = cfg.model;
    j["data_path"] = cfg.data_path;
    j["n_iters"] = cfg.n_iters;
    j["burn_in_fraction"] = cfg.burn_in_fraction;
    j["mode_tol"] = cfg.mode_tol;
    j["output_prefix"] = cfg.output_prefix;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    if (j.contains("n_grid")) cfg.n_grid = j["n_grid"].get<std::vector<long>>();
    if (j.contains("eta")) cfg.eta = j["eta"].get<double>();
    if (j.contains("step_rule"))
        cfg.step_rule = step_rule_from_string(j["step_rule"].get<std::string>());
    if (j.contains("p")) cfg.p = j["p"].get<int>();
    if (j.contains("replicas")) cfg.replicas = j["replicas"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("dim")) cfg.dim = j["dim"].get<int>();
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();
    if (j.contains("data_path")) cfg.data_path = j["data_path"].get<std::string>();
    if (j.contains("n_iters")) cfg.n_iters = j["n_iters"].get<long>();
    if (j.contains("burn_in_fraction")) cfg.burn_in_fraction = j["burn_in_fraction"].get<double>();
    if (j.contains("mode_tol")) cfg.mode_tol = j["mode_tol"].get<double>();
    if (j.contains("output_prefix")) cfg.output_prefix = j["output_prefix"].get<std::string>();
    return cfg;
}

}  // namespace

std::string json_string(const RunRecord& record) {
    nlohmann::json j;
    j["schema_version"] = record.schema_version;
    j["config"] = config_to_json(record.config);
    j["wall_clock_seconds"] = record.wall_clock_seconds;
    j["notes"] = record.notes;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : record.rows) {
        nlohmann::json jr;
        jr["experiment"] = r.experiment;
        jr["kind"] = r.kind;
        jr["N"] = r.n;
        jr["gamma"] = r.gamma;
        jr["step_rule"] = r.step_rule;
        jr["p"] = r.p;
        jr["replicas"] = r.replicas;
        jr["metric_name"] = r.metric_name;
        jr["metric_value"] = r.metric_value;
        jr["stderr"] = r.stderr_value;
        jr["seed"] = r.seed;
        rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    return j.dump(2);
}

void emit_json(const RunRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_json: cannot open " + path);
    out << json_string(record) << '\n';
    if (!out) throw std::runtime_error("emit_json: write failed for " + path);
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config_from_json_file: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

}  // namespace sgldfp
