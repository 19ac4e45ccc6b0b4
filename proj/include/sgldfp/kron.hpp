#pragma once

#include <Eigen/Dense>

namespace sgldfp {

/// Standard Kronecker product of two d x d matrices (d^2 x d^2 result).
Eigen::MatrixXd kron_std(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Linear operator on d x d matrices materialized as its d^2 x d^2 matrix.
/// Vectorization is column-major, so the operator Q -> A1 Q A2 has matrix
/// kron_std(A2^T, A1); apply() and solve() encapsulate the convention.
class KronOperator {
public:
    static KronOperator zero(int d);
    static KronOperator identity(int d);
    /// The operator Q -> A1 Q A2.
    static KronOperator product_pair(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2);

    KronOperator& operator+=(const KronOperator& other);
    KronOperator& operator-=(const KronOperator& other);
    KronOperator& operator*=(double s);
    friend KronOperator operator+(KronOperator a, const KronOperator& b) { return a += b; }
    friend KronOperator operator-(KronOperator a, const KronOperator& b) { return a -= b; }
    friend KronOperator operator*(double s, KronOperator a) { return a *= s; }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& q) const;

    /// Solve op(Q) = rhs for Q. Throws std::runtime_error when the operator
    /// is singular (solution residual check).
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

    /// Smallest eigenvalue of the operator restricted to symmetric matrices
    /// (orthonormal basis of the d(d+1)/2-dimensional subspace).
    double min_eigenvalue_symmetric() const;

    const Eigen::MatrixXd& mat() const { return mat_; }
    int dim() const { return d_; }

private:
    KronOperator(int d, Eigen::MatrixXd mat) : d_(d), mat_(std::move(mat)) {}
    int d_;
    Eigen::MatrixXd mat_;  // d^2 x d^2
};

/// Columns form an orthonormal basis of symmetric d x d matrices in vec form.
Eigen::MatrixXd symmetric_basis(int d);

}  // namespace sgldfp
