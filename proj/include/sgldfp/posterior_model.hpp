#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgldfp/dataset.hpp"

namespace sgldfp {

enum class ModelKind { LinearRegression, LogisticRegression };

/// Dense symmetric order-3 tensor; entry(k, i, j) = third partial derivative
/// of the potential w.r.t. coordinates k, i, j. Stored as d^3 doubles.
class SymmetricTensor3 {
public:
    explicit SymmetricTensor3(int d) : d_(d), v_(static_cast<std::size_t>(d) * d * d, 0.0) {}

    int dim() const { return d_; }

    double operator()(int k, int i, int j) const {
        return v_[(static_cast<std::size_t>(k) * d_ + i) * d_ + j];
    }
    double& operator()(int k, int i, int j) {
        return v_[(static_cast<std::size_t>(k) * d_ + i) * d_ + j];
    }

    /// += w * x (outer) x (outer) x
    void add_rank_one(double w, const Eigen::VectorXd& x);

    /// Contraction T[A]: result_k = sum_{ij} T(k,i,j) A(i,j).
    Eigen::VectorXd contract(const Eigen::MatrixXd& a) const;

    double max_abs() const;

private:
    int d_;
    std::vector<double> v_;
};

/// Negative log-posterior U = U_0 + sum_{i=1}^N U_i for a Gaussian-prior
/// Bayesian regression. U_0 is the isotropic mean-zero prior term; U_i the
/// i-th likelihood term. All evaluations are pure functions of (model, theta)
/// and safe for concurrent use.
class PosteriorModel {
public:
    static PosteriorModel linear_regression(Dataset data, double sigma_y_sq,
                                            double sigma_theta_sq);
    static PosteriorModel logistic_regression(Dataset data, double prior_variance);

    ModelKind kind() const { return kind_; }
    int n_data() const { return data_.n(); }
    int dim() const { return data_.dim(); }
    const Dataset& data() const { return data_; }

    double prior_variance() const { return sigma_theta_sq_; }
    /// Observation noise variance; linear regression only.
    double noise_variance() const;

    /// Gradient of U_i; i = 0 is the prior term, i in 1..N the data terms.
    Eigen::VectorXd grad_datum(int i, const Eigen::VectorXd& theta) const;
    Eigen::VectorXd grad_full(const Eigen::VectorXd& theta) const;

    Eigen::MatrixXd hessian_datum(int i, const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd hessian_at(const Eigen::VectorXd& theta) const;

    /// Full third-derivative tensor of U; identically zero for linear
    /// regression. Dense storage, intended for d <= 50.
    SymmetricTensor3 third_derivative_at(const Eigen::VectorXd& theta) const;

    /// U(theta) up to an additive constant.
    double potential(const Eigen::VectorXd& theta) const;

private:
    PosteriorModel(Dataset data, ModelKind kind, double sigma_y_sq, double sigma_theta_sq);

    Dataset data_;
    ModelKind kind_;
    double sigma_y_sq_;      // linear only
    double sigma_theta_sq_;  // prior variance for both kinds
};

/// Gaussian posterior parameters of the linear-regression model:
/// Sigma = Id/sigma_theta^2 + X^T X/sigma_y^2 and Sigma theta_star = X^T y/sigma_y^2.
struct LinRegPosterior {
    Eigen::MatrixXd Sigma;
    Eigen::VectorXd theta_star;
};

LinRegPosterior linreg_posterior_params(const PosteriorModel& model);

/// Smoothness / convexity constants: L_tilde bounds every per-term gradient
/// Lipschitz constant, L = (N+1) L_tilde, and m is the strong-convexity
/// constant (smallest Hessian eigenvalue at the mode; for logistic regression
/// this is a local surrogate).
struct ModelConstants {
    double m;
    double L;
    double L_tilde;
};

ModelConstants lipschitz_constants(const PosteriorModel& model);
ModelConstants lipschitz_constants(const PosteriorModel& model, const Eigen::VectorXd& mode);

/// Sharp global bound on the largest eigenvalue of the Hessian of U, used to
/// validate step sizes. Much tighter than (N+1) L_tilde.
double gradient_lipschitz_tight(const PosteriorModel& model);

struct ModeFindingError : std::runtime_error {
    ModeFindingError(const std::string& msg, Eigen::VectorXd last, double grad_norm_)
        : std::runtime_error(msg), last_iterate(std::move(last)), grad_norm(grad_norm_) {}
    Eigen::VectorXd last_iterate;
    double grad_norm;
};

/// Posterior mode. Linear regression solves the normal equations directly;
/// logistic regression runs damped Newton with a halving line search and a
/// gradient-descent fallback when the Newton system is bad.
Eigen::VectorXd find_mode(const PosteriorModel& model, double tol = 1e-10, int max_iters = 200);

/// Average negative log-likelihood of a logistic model over a dataset
/// (prior excluded); the held-out score used by the experiment sweeps.
double logistic_mean_nll(const Dataset& data, const Eigen::VectorXd& theta);

double sigmoid(double t);

}  // namespace sgldfp
