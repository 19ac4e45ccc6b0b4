#include "sgldfp/minibatch.hpp"

#include <stdexcept>

namespace sgldfp {

Minibatch draw_minibatch(int n_data, int p, RngStream& rng) {
    if (p < 1) throw std::invalid_argument("draw_minibatch: p must be >= 1");
    if (n_data < 1) throw std::invalid_argument("draw_minibatch: n_data must be >= 1");
    Minibatch b;
    b.indices.resize(p);
    for (int j = 0; j < p; ++j) b.indices[j] = rng.uniform_index(n_data);
    return b;
}

ControlVariateCache ControlVariateCache::build(const PosteriorModel& model,
                                               Eigen::VectorXd center) {
    ControlVariateCache cv;
    cv.center = std::move(center);
    const int n = model.n_data();
    cv.center_grads.resize(model.dim(), n);
    for (int i = 1; i <= n; ++i) cv.center_grads.col(i - 1) = model.grad_datum(i, cv.center);
    cv.prior_center_grad = model.grad_datum(0, cv.center);
    cv.center_grad_sum = cv.prior_center_grad + cv.center_grads.rowwise().sum();
    return cv;
}

Eigen::VectorXd sgld_gradient(const PosteriorModel& model, const Eigen::VectorXd& theta,
                              const Minibatch& batch) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.dim());
    for (int idx : batch.indices) acc += model.grad_datum(idx + 1, theta);
    const double scale = static_cast<double>(model.n_data()) / batch.size();
    return model.grad_datum(0, theta) + scale * acc;
}

Eigen::VectorXd fp_gradient(const PosteriorModel& model, const Eigen::VectorXd& theta,
                            const Minibatch& batch, const ControlVariateCache& cv) {
    if (cv.center_grads.cols() != model.n_data() || cv.center.size() != model.dim())
        throw std::invalid_argument("fp_gradient: control-variate cache does not match model");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.dim());
    for (int idx : batch.indices)
        acc += model.grad_datum(idx + 1, theta) - cv.center_grads.col(idx);
    const double scale = static_cast<double>(model.n_data()) / batch.size();
    return (model.grad_datum(0, theta) - cv.prior_center_grad) + scale * acc;
}

Eigen::VectorXd gradient_noise(const PosteriorModel& model, const Eigen::VectorXd& theta,
                               const Minibatch& batch, NoiseMode mode,
                               const ControlVariateCache* cv) {
    if (mode == NoiseMode::Fp) {
        if (cv == nullptr) throw std::invalid_argument("gradient_noise: Fp mode needs a cache");
        return fp_gradient(model, theta, batch, *cv) - model.grad_full(theta);
    }
    return sgld_gradient(model, theta, batch) - model.grad_full(theta);
}

GradientVariance empirical_gradient_variance(const PosteriorModel& model,
                                             const Eigen::VectorXd& theta, EstimatorKind kind,
                                             int p, int n_draws, RngStream& rng,
                                             const ControlVariateCache* cv) {
    if (n_draws < 2) throw std::invalid_argument("empirical_gradient_variance: n_draws >= 2");
    if (kind == EstimatorKind::ControlVariate && cv == nullptr)
        throw std::invalid_argument("empirical_gradient_variance: missing control-variate cache");

    const int d = model.dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd full = model.grad_full(theta);
    for (int k = 1; k <= n_draws; ++k) {
        Eigen::VectorXd g;
        switch (kind) {
            case EstimatorKind::FullBatch: g = full; break;
            case EstimatorKind::Subsampled: {
                Minibatch b = draw_minibatch(model.n_data(), p, rng);
                g = sgld_gradient(model, theta, b);
                break;
            }
            case EstimatorKind::ControlVariate: {
                Minibatch b = draw_minibatch(model.n_data(), p, rng);
                g = fp_gradient(model, theta, b, *cv);
                break;
            }
        }
        const Eigen::VectorXd delta = g - mean;
        mean += delta / k;
        m2.array() += delta.array() * (g - mean).array();
    }
    GradientVariance out;
    out.per_coordinate = m2 / (n_draws - 1);
    out.mean_over_dims = out.per_coordinate.mean();
    return out;
}

}  // namespace sgldfp
