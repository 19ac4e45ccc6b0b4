#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace sgldfp {

/// Single-pass mean and covariance accumulator (Welford update, Chan et al.
/// merge). Numerically stable for millions of samples with no storage.
class MomentAccumulator {
public:
    explicit MomentAccumulator(int dim)
        : n_(0), mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

    void add(const Eigen::VectorXd& x) {
        ++n_;
        const Eigen::VectorXd delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_).transpose();
    }

    void merge(const MomentAccumulator& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
        const Eigen::VectorXd delta = other.mean_ - mean_;
        m2_ += other.m2_ + (na * nb / (na + nb)) * (delta * delta.transpose());
        mean_ = (na * mean_ + nb * other.mean_) / (na + nb);
        n_ += other.n_;
    }

    long count() const { return n_; }
    int dim() const { return static_cast<int>(mean_.size()); }

    Eigen::VectorXd mean() const {
        if (n_ < 1) throw std::logic_error("MomentAccumulator: no samples");
        return mean_;
    }

    /// Unbiased covariance (n-1 denominator).
    Eigen::MatrixXd covariance() const {
        if (n_ < 2) throw std::logic_error("MomentAccumulator: need at least two samples");
        Eigen::MatrixXd c = m2_ / static_cast<double>(n_ - 1);
        return 0.5 * (c + c.transpose());
    }

private:
    long n_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd m2_;
};

/// Scalar flavor, for per-coordinate or per-batch statistics.
class RunningStat {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    long count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stderr_of_mean() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace sgldfp
