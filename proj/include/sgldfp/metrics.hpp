#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgldfp/welford.hpp"

namespace sgldfp {

/// First and second moments of a sample stream or an analytic law
/// (n_samples = 0 for analytic).
struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    long n_samples = 0;
};

GaussianSummary empirical_moments(const MomentAccumulator& acc);
GaussianSummary empirical_moments(const std::vector<Eigen::VectorXd>& samples);

/// PSD square root by eigendecomposition. Eigenvalues below
/// -1e-10 * max(lambda_max, 1) reject the input; small negatives are clipped
/// to zero (clip count reported through n_clipped when given).
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& c, int* n_clipped = nullptr);

/// Gaussian Wasserstein-2 distance between the moment pairs:
/// W2^2 = |m_a - m_b|^2 + Tr(C_a + C_b - 2 (C_a^1/2 C_b C_a^1/2)^1/2).
/// For non-Gaussian laws with these moments this is a lower bound on W2.
/// n_clipped, when given, counts eigenvalues clipped to zero on the way.
double w2_gaussian(const GaussianSummary& a, const GaussianSummary& b,
                   int* n_clipped = nullptr);

struct LogLogFit {
    double slope;
    double intercept;
    double residual;  // RMS residual in log10 space
};

/// Ordinary least squares on (log10 x, log10 y); all inputs must be positive.
LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace sgldfp
