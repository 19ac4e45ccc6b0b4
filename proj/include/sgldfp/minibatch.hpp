#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgldfp/posterior_model.hpp"
#include "sgldfp/rng.hpp"

namespace sgldfp {

/// Minibatch of size p drawn i.i.d. uniformly with replacement; entries are
/// 0-based row indices into the dataset (duplicates allowed).
struct Minibatch {
    std::vector<int> indices;
    int size() const { return static_cast<int>(indices.size()); }
};

Minibatch draw_minibatch(int n_data, int p, RngStream& rng);

/// Per-datum gradients precomputed at the control-variate center (normally
/// the posterior mode, but any center is accepted).
struct ControlVariateCache {
    Eigen::VectorXd center;
    Eigen::MatrixXd center_grads;      // d x N, column i-1 holds grad of U_i at center
    Eigen::VectorXd prior_center_grad; // grad of U_0 at center
    Eigen::VectorXd center_grad_sum;   // grad of U at center (prior included)

    static ControlVariateCache build(const PosteriorModel& model, Eigen::VectorXd center);
};

/// Subsampled gradient estimator: grad U_0(theta) + (N/p) sum_{i in S} grad U_i(theta).
Eigen::VectorXd sgld_gradient(const PosteriorModel& model, const Eigen::VectorXd& theta,
                              const Minibatch& batch);

/// Control-variate estimator: the subsampled gradient of U shifted by the
/// cached per-datum gradients at the center. Identically zero noise at
/// theta == center.
Eigen::VectorXd fp_gradient(const PosteriorModel& model, const Eigen::VectorXd& theta,
                            const Minibatch& batch, const ControlVariateCache& cv);

enum class NoiseMode { Sgld, Fp };

/// Estimator minus grad U(theta) for the given batch.
Eigen::VectorXd gradient_noise(const PosteriorModel& model, const Eigen::VectorXd& theta,
                               const Minibatch& batch, NoiseMode mode,
                               const ControlVariateCache* cv = nullptr);

enum class EstimatorKind { FullBatch, Subsampled, ControlVariate };

struct GradientVariance {
    Eigen::VectorXd per_coordinate;  // unbiased sample variance per dimension
    double mean_over_dims;
};

/// Sample variance of the chosen estimator's coordinates at a fixed theta,
/// over n_draws fresh minibatches.
GradientVariance empirical_gradient_variance(const PosteriorModel& model,
                                             const Eigen::VectorXd& theta, EstimatorKind kind,
                                             int p, int n_draws, RngStream& rng,
                                             const ControlVariateCache* cv = nullptr);

}  // namespace sgldfp
