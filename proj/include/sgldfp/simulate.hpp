#pragma once

#include <cstdint>

#include "sgldfp/dataset.hpp"

namespace sgldfp {

/// Covariates drawn i.i.d. standard Gaussian, responses Bernoulli with
/// success probability sigmoid(x_i^T theta_true). When theta_true is null it
/// is drawn standard Gaussian once from the seed. Deterministic given
/// (n, d, seed): truncating n keeps a prefix of the larger dataset.
Dataset simulate_logistic_dataset(int n, int d, std::uint64_t seed,
                                  const Eigen::VectorXd* theta_true = nullptr);

/// The theta_true the simulation uses when none is supplied.
Eigen::VectorXd simulated_theta_true(int d, std::uint64_t seed);

}  // namespace sgldfp
