#include "sgldfp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sgldfp {

namespace {

void require_symmetric(const Eigen::MatrixXd& c, const char* who) {
    if (c.rows() != c.cols()) throw std::invalid_argument(std::string(who) + ": square required");
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
}

}  // namespace

GaussianSummary empirical_moments(const MomentAccumulator& acc) {
    if (acc.count() < 2) throw std::invalid_argument("empirical_moments: need n >= 2");
    return GaussianSummary{acc.mean(), acc.covariance(), acc.count()};
}

GaussianSummary empirical_moments(const std::vector<Eigen::VectorXd>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("empirical_moments: need n >= 2");
    MomentAccumulator acc(static_cast<int>(samples.front().size()));
    for (const auto& s : samples) acc.add(s);
    return empirical_moments(acc);
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& c, int* n_clipped) {
    require_symmetric(c, "matrix_sqrt_psd");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()));
    Eigen::VectorXd lambda = es.eigenvalues();
    const double floor = -1e-10 * std::max(lambda.maxCoeff(), 1.0);
    int clipped = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < floor)
            throw std::invalid_argument("matrix_sqrt_psd: matrix is indefinite beyond tolerance");
        if (lambda(i) < 0.0) {
            lambda(i) = 0.0;
            ++clipped;
        }
    }
    if (n_clipped != nullptr) *n_clipped = clipped;
    const Eigen::MatrixXd s =
        es.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (s + s.transpose());
}

double w2_gaussian(const GaussianSummary& a, const GaussianSummary& b, int* n_clipped) {
    if (a.mean.size() != b.mean.size())
        throw std::invalid_argument("w2_gaussian: dimension mismatch");
    int clip_a = 0, clip_b = 0;
    const Eigen::MatrixXd sa = matrix_sqrt_psd(a.cov, &clip_a);
    const Eigen::MatrixXd sb = matrix_sqrt_psd(b.cov, &clip_b);
    if (n_clipped != nullptr) *n_clipped = clip_a + clip_b;
    // Bures term via its Procrustes form |Sa - Sb R|_F with R the closest
    // orthogonal matrix to Sb Sa; algebraically equal to
    // Tr(Ca + Cb - 2 (Sa Cb Sa)^1/2) but free of the cancellation that form
    // suffers when the covariances nearly coincide.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sb * sa,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
    const double w2_sq =
        (a.mean - b.mean).squaredNorm() + (sa - sb * rot).squaredNorm();
    return std::sqrt(std::max(w2_sq, 0.0));
}

LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 points");
    const auto n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        if (x <= 0.0 || y <= 0.0)
            throw std::invalid_argument("fit_loglog_slope: all values must be positive");
        const double lx = std::log10(x), ly = std::log10(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
    LogLogFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double r = std::log10(y) - (fit.intercept + fit.slope * std::log10(x));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace sgldfp
