#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgldfp/minibatch.hpp"
#include "sgldfp/posterior_model.hpp"
#include "sgldfp/welford.hpp"

namespace sgldfp {

/// The four constant-step-size kernels. LMC uses the full gradient plus
/// Gaussian noise; SGLD the subsampled gradient plus Gaussian noise; SGLDFP
/// the control-variate gradient plus Gaussian noise; SGD the subsampled
/// gradient alone.
enum class SamplerKind { LMC, SGLD, SGLDFP, SGD };

const char* to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

inline bool uses_gaussian(SamplerKind kind) { return kind != SamplerKind::SGD; }
inline bool uses_minibatch(SamplerKind kind) { return kind != SamplerKind::LMC; }

struct DivergenceError : std::runtime_error {
    DivergenceError(SamplerKind kind_, double gamma_, long iteration_, const std::string& msg)
        : std::runtime_error(msg), kind(kind_), gamma(gamma_), iteration(iteration_) {}
    SamplerKind kind;
    double gamma;
    long iteration;  // -1 when outside a chain run
};

struct ChainConfig {
    SamplerKind kind = SamplerKind::LMC;
    double gamma = 0.0;
    int p = 1;
    long n_iters = 0;
    double burn_in_fraction = 0.10;
    std::uint64_t seed = 0;
    Eigen::VectorXd init;
    bool store_samples = false;
};

struct ChainOutput {
    MomentAccumulator moments;  // post-burn-in iterates
    long n_kept = 0;
    Eigen::VectorXd final_state;
    std::vector<Eigen::VectorXd> samples;  // only when store_samples

    explicit ChainOutput(int dim) : moments(dim) {}
};

/// The gradient estimator the kernel uses at theta. batch may be null for
/// LMC; cv is required for SGLDFP.
Eigen::VectorXd kernel_gradient(const PosteriorModel& model, SamplerKind kind,
                                const Eigen::VectorXd& theta, const Minibatch* batch,
                                const ControlVariateCache* cv);

/// One kernel transition with the iteration's randomness passed in; z may be
/// null for SGD and batch for LMC. Throws DivergenceError on a non-finite or
/// exploding iterate.
Eigen::VectorXd step(const PosteriorModel& model, SamplerKind kind,
                     const Eigen::VectorXd& theta, double gamma, const Eigen::VectorXd* z,
                     const Minibatch* batch, const ControlVariateCache* cv = nullptr);

/// Convenience overload drawing the randomness from the given streams.
Eigen::VectorXd step(const PosteriorModel& model, SamplerKind kind,
                     const Eigen::VectorXd& theta, double gamma, int p,
                     RngStream& noise_stream, RngStream& batch_stream,
                     const ControlVariateCache* cv = nullptr);

/// Called after every iteration with the new state and the gradient estimate
/// that produced it.
using ChainObserver =
    std::function<void(long iteration, const Eigen::VectorXd& theta, const Eigen::VectorXd& grad)>;

/// Run one chain. Deterministic given (config.seed, config); moments are
/// accumulated streaming so long runs need no sample storage.
ChainOutput run_chain(const PosteriorModel& model, const ChainConfig& config,
                      const ControlVariateCache* cv = nullptr,
                      const ChainObserver& observer = nullptr);

struct CoupledDistanceCurve {
    std::vector<double> mean_sq_dist;    // index k = 0 .. n_iters
    std::vector<double> stderr_sq_dist;  // Monte-Carlo standard error over replicas
};

/// Synchronously coupled pair: per replica, one Gaussian stream and one
/// minibatch stream are drawn once per iteration and consumed by both chains.
/// Returns per-iteration squared-distance averages over the replicas.
CoupledDistanceCurve run_coupled_chains(const PosteriorModel& model, SamplerKind kind_a,
                                        SamplerKind kind_b, double gamma, int p, long n_iters,
                                        std::uint64_t seed, const Eigen::VectorXd& init_a,
                                        const Eigen::VectorXd& init_b, int n_replicas,
                                        const ControlVariateCache* cv = nullptr);

}  // namespace sgldfp
