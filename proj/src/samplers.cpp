#include "sgldfp/samplers.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace sgldfp {

namespace {

constexpr double kDivergenceRadius = 1e8;

// stream_id tags; coupled replicas add the replica index
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kBatchStream = 2;

void check_finite(const Eigen::VectorXd& theta, SamplerKind kind, double gamma, long iteration) {
    if (theta.allFinite() && theta.norm() <= kDivergenceRadius) return;
    std::ostringstream msg;
    msg << "divergence: " << to_string(kind) << " with gamma=" << gamma;
    if (iteration >= 0) msg << " at iteration " << iteration;
    msg << " produced a non-finite or exploding iterate";
    throw DivergenceError(kind, gamma, iteration, msg.str());
}

void validate_config(const PosteriorModel& model, const ChainConfig& config,
                     const ControlVariateCache* cv) {
    if (config.gamma <= 0.0) throw std::invalid_argument("run_chain: gamma must be positive");
    const double limit = 2.0 / gradient_lipschitz_tight(model);
    if (config.gamma >= limit) {
        std::ostringstream msg;
        msg << "run_chain: gamma=" << config.gamma << " outside the stable range (0, " << limit
            << ")";
        throw std::invalid_argument(msg.str());
    }
    if (config.burn_in_fraction < 0.0 || config.burn_in_fraction >= 1.0)
        throw std::invalid_argument("run_chain: burn_in_fraction must be in [0, 1)");
    if (config.n_iters < 0) throw std::invalid_argument("run_chain: n_iters must be >= 0");
    if (config.init.size() != model.dim())
        throw std::invalid_argument("run_chain: init has wrong dimension");
    if (uses_minibatch(config.kind) && config.p < 1)
        throw std::invalid_argument("run_chain: p must be >= 1");
    if (config.kind == SamplerKind::SGLDFP && cv == nullptr)
        throw std::invalid_argument("run_chain: SGLDFP needs a control-variate cache");
}

}  // namespace

const char* to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::LMC: return "LMC";
        case SamplerKind::SGLD: return "SGLD";
        case SamplerKind::SGLDFP: return "SGLDFP";
        case SamplerKind::SGD: return "SGD";
    }
    return "?";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
    if (name == "LMC") return SamplerKind::LMC;
    if (name == "SGLD") return SamplerKind::SGLD;
    if (name == "SGLDFP") return SamplerKind::SGLDFP;
    if (name == "SGD") return SamplerKind::SGD;
    throw std::invalid_argument("unknown sampler kind: " + name);
}

Eigen::VectorXd kernel_gradient(const PosteriorModel& model, SamplerKind kind,
                                const Eigen::VectorXd& theta, const Minibatch* batch,
                                const ControlVariateCache* cv) {
    switch (kind) {
        case SamplerKind::LMC: return model.grad_full(theta);
        case SamplerKind::SGLD:
        case SamplerKind::SGD:
            if (batch == nullptr) throw std::invalid_argument("kernel_gradient: missing batch");
            return sgld_gradient(model, theta, *batch);
        case SamplerKind::SGLDFP:
            if (batch == nullptr || cv == nullptr)
                throw std::invalid_argument("kernel_gradient: SGLDFP needs batch and cache");
            return fp_gradient(model, theta, *batch, *cv);
    }
    throw std::logic_error("kernel_gradient: unreachable");
}

Eigen::VectorXd step(const PosteriorModel& model, SamplerKind kind,
                     const Eigen::VectorXd& theta, double gamma, const Eigen::VectorXd* z,
                     const Minibatch* batch, const ControlVariateCache* cv) {
    if (gamma <= 0.0) throw std::invalid_argument("step: gamma must be positive");
    Eigen::VectorXd next = theta - gamma * kernel_gradient(model, kind, theta, batch, cv);
    if (uses_gaussian(kind)) {
        if (z == nullptr) throw std::invalid_argument("step: missing Gaussian draw");
        next += std::sqrt(2.0 * gamma) * (*z);
    }
    check_finite(next, kind, gamma, -1);
    return next;
}

Eigen::VectorXd step(const PosteriorModel& model, SamplerKind kind,
                     const Eigen::VectorXd& theta, double gamma, int p,
                     RngStream& noise_stream, RngStream& batch_stream,
                     const ControlVariateCache* cv) {
    std::optional<Minibatch> batch;
    if (uses_minibatch(kind)) batch = draw_minibatch(model.n_data(), p, batch_stream);
    std::optional<Eigen::VectorXd> z;
    if (uses_gaussian(kind)) z = noise_stream.normal_vector(model.dim());
    return step(model, kind, theta, gamma, z ? &*z : nullptr, batch ? &*batch : nullptr, cv);
}

ChainOutput run_chain(const PosteriorModel& model, const ChainConfig& config,
                      const ControlVariateCache* cv, const ChainObserver& observer) {
    validate_config(model, config, cv);
    RngStream noise = RngStream::derive(config.seed, kNoiseStream);
    RngStream batches = RngStream::derive(config.seed, kBatchStream);

    const long burn = static_cast<long>(config.burn_in_fraction * config.n_iters);
    ChainOutput out(model.dim());
    Eigen::VectorXd theta = config.init;
    const double noise_scale = std::sqrt(2.0 * config.gamma);

    for (long k = 1; k <= config.n_iters; ++k) {
        std::optional<Minibatch> batch;
        if (uses_minibatch(config.kind))
            batch = draw_minibatch(model.n_data(), config.p, batches);
        const Eigen::VectorXd grad =
            kernel_gradient(model, config.kind, theta, batch ? &*batch : nullptr, cv);
        theta -= config.gamma * grad;
        if (uses_gaussian(config.kind)) theta += noise_scale * noise.normal_vector(model.dim());
        check_finite(theta, config.kind, config.gamma, k);

        if (observer) observer(k, theta, grad);
        if (k > burn) {
            out.moments.add(theta);
            if (config.store_samples) out.samples.push_back(theta);
        }
    }
    out.n_kept = config.n_iters - burn;
    out.final_state = theta;
    return out;
}

CoupledDistanceCurve run_coupled_chains(const PosteriorModel& model, SamplerKind kind_a,
                                        SamplerKind kind_b, double gamma, int p, long n_iters,
                                        std::uint64_t seed, const Eigen::VectorXd& init_a,
                                        const Eigen::VectorXd& init_b, int n_replicas,
                                        const ControlVariateCache* cv) {
    if (n_replicas < 1) throw std::invalid_argument("run_coupled_chains: n_replicas >= 1");
    if ((kind_a == SamplerKind::SGLDFP || kind_b == SamplerKind::SGLDFP) && cv == nullptr)
        throw std::invalid_argument("run_coupled_chains: SGLDFP needs a control-variate cache");
    if (gamma <= 0.0 || gamma >= 2.0 / gradient_lipschitz_tight(model))
        throw std::invalid_argument("run_coupled_chains: gamma outside the stable range");

    const int d = model.dim();
    const long n_points = n_iters + 1;
    // per-replica squared distances, reduced in replica order afterwards
    std::vector<std::vector<double>> sq(n_replicas, std::vector<double>(n_points, 0.0));

    auto run_replica = [&](int r) {
        RngStream noise = RngStream::derive(seed, static_cast<std::uint64_t>(r), kNoiseStream);
        RngStream batches = RngStream::derive(seed, static_cast<std::uint64_t>(r), kBatchStream);
        Eigen::VectorXd a = init_a, b = init_b;
        sq[r][0] = (a - b).squaredNorm();
        const double noise_scale = std::sqrt(2.0 * gamma);
        for (long k = 1; k <= n_iters; ++k) {
            // one draw per iteration, shared by both chains; streams advance
            // in lockstep even when a kind ignores a component
            const Minibatch batch = draw_minibatch(model.n_data(), p, batches);
            const Eigen::VectorXd z = noise.normal_vector(d);
            a -= gamma * kernel_gradient(model, kind_a, a, &batch, cv);
            if (uses_gaussian(kind_a)) a += noise_scale * z;
            b -= gamma * kernel_gradient(model, kind_b, b, &batch, cv);
            if (uses_gaussian(kind_b)) b += noise_scale * z;
            check_finite(a, kind_a, gamma, k);
            check_finite(b, kind_b, gamma, k);
            sq[r][k] = (a - b).squaredNorm();
        }
    };

    const int n_threads =
        std::max(1, std::min<int>(static_cast<int>(std::thread::hardware_concurrency()),
                                  n_replicas));
    if (n_threads <= 1 || n_replicas == 1) {
        for (int r = 0; r < n_replicas; ++r) run_replica(r);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n_threads);
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (int r = t; r < n_replicas; r += n_threads) run_replica(r);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    CoupledDistanceCurve curve;
    curve.mean_sq_dist.resize(n_points);
    curve.stderr_sq_dist.resize(n_points);
    for (long k = 0; k < n_points; ++k) {
        RunningStat stat;
        for (int r = 0; r < n_replicas; ++r) stat.add(sq[r][k]);
        curve.mean_sq_dist[k] = stat.mean();
        curve.stderr_sq_dist[k] = stat.stderr_of_mean();
    }
    return curve;
}

}  // namespace sgldfp
