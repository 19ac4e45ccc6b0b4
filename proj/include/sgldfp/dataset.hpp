#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace sgldfp {

/// Covariate matrix X (N rows, d columns; row i is x_i) and responses y.
/// Immutable after construction; all model evaluations read it concurrently.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Dataset(Eigen::MatrixXd X_, Eigen::VectorXd y_) : X(std::move(X_)), y(std::move(y_)) {
        if (X.rows() < 1 || X.cols() < 1)
            throw std::invalid_argument("Dataset: need at least one row and one column");
        if (y.size() != X.rows())
            throw std::invalid_argument("Dataset: y length must match the number of rows of X");
        if (!X.allFinite() || !y.allFinite())
            throw std::invalid_argument("Dataset: non-finite entries");
    }

    int n() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }

    /// First n_rows observations (sweeps truncate one master dataset).
    Dataset prefix(int n_rows) const {
        if (n_rows < 1 || n_rows > n())
            throw std::invalid_argument("Dataset::prefix: row count out of range");
        return Dataset(X.topRows(n_rows), y.head(n_rows));
    }

    /// Every observation repeated k times (rows tiled in order).
    Dataset replicate(int k) const {
        if (k < 1) throw std::invalid_argument("Dataset::replicate: k must be >= 1");
        Eigen::MatrixXd xr(static_cast<Eigen::Index>(k) * X.rows(), X.cols());
        Eigen::VectorXd yr(static_cast<Eigen::Index>(k) * y.size());
        for (int c = 0; c < k; ++c) {
            xr.middleRows(static_cast<Eigen::Index>(c) * X.rows(), X.rows()) = X;
            yr.segment(static_cast<Eigen::Index>(c) * y.size(), y.size()) = y;
        }
        return Dataset(std::move(xr), std::move(yr));
    }
};

}  // namespace sgldfp
