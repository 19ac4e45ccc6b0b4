#include "sgldfp/kron.hpp"

#include <cmath>
#include <stdexcept>

namespace sgldfp {

Eigen::MatrixXd kron_std(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

KronOperator KronOperator::zero(int d) {
    return KronOperator(d, Eigen::MatrixXd::Zero(d * d, d * d));
}

KronOperator KronOperator::identity(int d) {
    return KronOperator(d, Eigen::MatrixXd::Identity(d * d, d * d));
}

KronOperator KronOperator::product_pair(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2) {
    if (a1.rows() != a1.cols() || a2.rows() != a2.cols() || a1.rows() != a2.rows())
        throw std::invalid_argument("KronOperator: square matrices of equal size required");
    return KronOperator(static_cast<int>(a1.rows()), kron_std(a2.transpose(), a1));
}

KronOperator& KronOperator::operator+=(const KronOperator& other) {
    if (d_ != other.d_) throw std::invalid_argument("KronOperator: dimension mismatch");
    mat_ += other.mat_;
    return *this;
}

KronOperator& KronOperator::operator-=(const KronOperator& other) {
    if (d_ != other.d_) throw std::invalid_argument("KronOperator: dimension mismatch");
    mat_ -= other.mat_;
    return *this;
}

KronOperator& KronOperator::operator*=(double s) {
    mat_ *= s;
    return *this;
}

Eigen::MatrixXd KronOperator::apply(const Eigen::MatrixXd& q) const {
    if (q.rows() != d_ || q.cols() != d_)
        throw std::invalid_argument("KronOperator::apply: wrong operand size");
    const Eigen::Map<const Eigen::VectorXd> v(q.data(), d_ * d_);
    Eigen::VectorXd r = mat_ * v;
    return Eigen::Map<Eigen::MatrixXd>(r.data(), d_, d_);
}

Eigen::MatrixXd KronOperator::solve(const Eigen::MatrixXd& rhs) const {
    if (rhs.rows() != d_ || rhs.cols() != d_)
        throw std::invalid_argument("KronOperator::solve: wrong operand size");
    const Eigen::Map<const Eigen::VectorXd> v(rhs.data(), d_ * d_);
    Eigen::VectorXd x = mat_.partialPivLu().solve(v);
    const double residual = (mat_ * x - v).norm();
    if (!x.allFinite() || residual > 1e-8 * (v.norm() + 1.0))
        throw std::runtime_error("KronOperator::solve: operator is singular or ill-conditioned");
    return Eigen::Map<Eigen::MatrixXd>(x.data(), d_, d_);
}

double KronOperator::min_eigenvalue_symmetric() const {
    const Eigen::MatrixXd basis = symmetric_basis(d_);
    const Eigen::MatrixXd restricted = basis.transpose() * mat_ * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (restricted + restricted.transpose()));
    return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd symmetric_basis(int d) {
    const int s = d * (d + 1) / 2;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d * d, s);
    int col = 0;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < d; ++i) {
        basis(i * d + i, col++) = 1.0;  // E_ii; vec index of (r, c) is c*d + r
    }
    for (int c = 0; c < d; ++c)
        for (int r = c + 1; r < d; ++r) {
            basis(c * d + r, col) = inv_sqrt2;
            basis(r * d + c, col) = inv_sqrt2;
            ++col;
        }
    return basis;
}

}  // namespace sgldfp
