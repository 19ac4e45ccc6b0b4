#include "sgldfp/simulate.hpp"

#include "sgldfp/posterior_model.hpp"
#include "sgldfp/rng.hpp"

namespace sgldfp {

namespace {
constexpr std::uint64_t kThetaTrueStream = 0x74727565;  // stream tags
constexpr std::uint64_t kRowStream = 0x726f77;
}  // namespace

Eigen::VectorXd simulated_theta_true(int d, std::uint64_t seed) {
    RngStream rng = RngStream::derive(seed, kThetaTrueStream);
    return rng.normal_vector(d);
}

Dataset simulate_logistic_dataset(int n, int d, std::uint64_t seed,
                                  const Eigen::VectorXd* theta_true) {
    if (n < 1 || d < 1) throw std::invalid_argument("simulate_logistic_dataset: n, d >= 1");
    const Eigen::VectorXd theta =
        theta_true != nullptr ? *theta_true : simulated_theta_true(d, seed);
    if (theta.size() != d)
        throw std::invalid_argument("simulate_logistic_dataset: theta_true has wrong dimension");

    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        // one stream per row, so any n is a prefix of a longer simulation
        RngStream rng = RngStream::derive(seed, kRowStream, static_cast<std::uint64_t>(i));
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
        y(i) = rng.uniform01() < sigmoid(x.row(i).dot(theta)) ? 1.0 : 0.0;
    }
    return Dataset(std::move(x), std::move(y));
}

}  // namespace sgldfp
