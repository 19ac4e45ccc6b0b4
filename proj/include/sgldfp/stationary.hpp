#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgldfp/kron.hpp"
#include "sgldfp/posterior_model.hpp"
#include "sgldfp/samplers.hpp"

namespace sgldfp {

/// Hessians of the likelihood terms U_1..U_N at theta.
std::vector<Eigen::MatrixXd> likelihood_hessians(const PosteriorModel& model,
                                                 const Eigen::VectorXd& theta);

/// H = Hess (x) Id + Id (x) Hess - gamma Hess (x) Hess, acting on d x d
/// matrices; the Gaussian-noise covariance operator of the discretized
/// dynamics.
KronOperator build_H(const Eigen::MatrixXd& hessian, double gamma);

/// Multiplicative-noise operator: (N/p) sum_i (Hess_i - mean_j Hess_j)^(x2),
/// built from the per-datum Hessians at the mode.
KronOperator build_L(const std::vector<Eigen::MatrixXd>& per_datum_hessians, int p);

/// G = Hess (x) Id + Id (x) Hess - gamma (Hess (x) Hess + L).
KronOperator build_G(const Eigen::MatrixXd& hessian, const KronOperator& l_op, double gamma);

/// Linear-regression specialization of the multiplicative-noise operator:
/// (N/p) sum_i (x_i x_i^T/sigma_y^2 + Id/(N sigma_theta^2) - Sigma/N)^(x2).
KronOperator build_T(const LinRegPosterior& linreg, const Dataset& data, int p,
                     double sigma_y_sq, double sigma_theta_sq);

/// M = sum_i (grad U_i(theta_star) - mean_j grad U_j(theta_star))^(x2);
/// the additive gradient-noise covariance (likelihood terms only).
Eigen::MatrixXd build_M(const PosteriorModel& model, const Eigen::VectorXd& theta_star);

/// Second moment of the additive noise xi(S) of the subsampled gradient for
/// linear regression: (N/p) sum_i {(x_i^T theta* - y_i) x_i / sigma_y^2
/// + theta*/(N sigma_theta^2)}^(x2). Equals (N/p) M at the exact mode.
Eigen::MatrixXd xi_second_moment(const PosteriorModel& model, int p);

/// r^2 = largest generalized eigenvalue of (l_op, hessian^(x2)) restricted to
/// symmetric matrices, so that l_op <= r^2 hessian^(x2).
double multiplicative_noise_ratio_sq(const KronOperator& l_op, const Eigen::MatrixXd& hessian);

/// Exact stationary covariance of the four kernels for Bayesian linear
/// regression: the vectorized linear system
///   {Id (x) Sigma + Sigma (x) Id - gamma (Sigma^(x2) + T)} C = rhs
/// with rhs 2 Id (LMC, without T; SGLDFP), 2 Id + gamma E[xi xi^T] (SGLD) or
/// gamma E[xi xi^T] (SGD).
Eigen::MatrixXd stationary_cov_linreg(SamplerKind kind, const LinRegPosterior& linreg,
                                      const KronOperator& t_op, double gamma,
                                      const Eigen::MatrixXd& additive_noise_matrix);
Eigen::MatrixXd stationary_cov_linreg(SamplerKind kind, const PosteriorModel& model,
                                      double gamma, int p);

/// One-dimensional linear regression: the scalar second-moment recursion
/// var_{k+1} = mu var_k + 2 gamma (+ gamma^2 A for the subsampled kernel).
struct Sgld1dMoments {
    double mu;                      // contraction factor of the variance recursion
    double additive_second_moment;  // A
    double stationary_variance;
};

Sgld1dMoments sgld_1d_stationary_moments(const PosteriorModel& model, double gamma, int p,
                                         SamplerKind kind);

/// Variance of the n-th iterate started at the mode: (1 - mu^n)/(1 - mu) times
/// the per-step injection.
double sgld_1d_variance_at_iteration(const Sgld1dMoments& m, double gamma, SamplerKind kind,
                                     long n);

struct MomentExpansion {
    Eigen::MatrixXd cov;
    Eigen::VectorXd mean_bias;  // stationary mean minus theta_star
};

/// Leading-order moments of the target posterior around the mode:
/// cov ~ Hess^-1, bias ~ -(1/2) Hess^-1 D3U[Hess^-1].
MomentExpansion posterior_moment_expansion(const PosteriorModel& model,
                                           const Eigen::VectorXd& theta_star);

/// Step-size threshold eta_0 = min{N/(12 max(L,1)), 2N/((1+r^2) L)} evaluated
/// at the configured N.
double eta_threshold(const PosteriorModel& model, int p, const Eigen::VectorXd& theta_star);

/// Leading-order stationary moments of the four kernels with gamma = eta/N:
/// LMC cov ~ H^-1(2 Id), SGLDFP cov ~ G^-1(2 Id), SGLD cov ~ G^-1{2 Id +
/// (eta/p) M}, SGD cov ~ (eta/p) G^-1 M; each bias is
/// -(1/2) Hess^-1 D3U[cov]. Rejects eta >= eta_0. The SGLD/SGD expansions
/// additionally assume N >= 1/eta, which callers are expected to honor.
MomentExpansion stationary_moment_expansion(SamplerKind kind, const PosteriorModel& model,
                                            double gamma, int p);
MomentExpansion stationary_moment_expansion(SamplerKind kind, const PosteriorModel& model,
                                            double gamma, int p,
                                            const Eigen::VectorXd& theta_star);

}  // namespace sgldfp
