#include <doctest.h>

#include <cmath>

#include "sgldfp/samplers.hpp"
#include "sgldfp/stationary.hpp"
#include "test_support.hpp"

using namespace sgldfp;

namespace {

// Sigma = 4 and theta* = 1/2 exactly in floating point
PosteriorModel linreg_pow2() {
    Eigen::MatrixXd x(2, 1);
    x << 1.0, 1.0;
    Eigen::VectorXd y(2);
    y << 1.0, 1.0;
    return PosteriorModel::linear_regression(Dataset(x, y), 1.0, 0.5);
}

}  // namespace

TEST_CASE("SGD keeps the mode fixed when the gradient vanishes termwise") {
    Eigen::MatrixXd x(1, 1);
    x << 1.0;
    Eigen::VectorXd y(1);
    y << 1.0;
    auto model = PosteriorModel::linear_regression(Dataset(x, y), 1.0, 1.0);
    const Eigen::VectorXd star = linreg_posterior_params(model).theta_star;
    CHECK(star(0) == 0.5);
    const Minibatch b{{0}};
    const Eigen::VectorXd next = step(model, SamplerKind::SGD, star, 0.25, nullptr, &b);
    CHECK(next(0) == star(0));
}

TEST_CASE("LMC with zeroed noise and gamma = 1/Sigma is an exact Newton step") {
    auto model = linreg_pow2();
    const Eigen::VectorXd star = linreg_posterior_params(model).theta_star;
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd theta(1);
    theta << 0.75;
    const Eigen::VectorXd next = step(model, SamplerKind::LMC, theta, 0.25, &z, nullptr);
    CHECK(next(0) == star(0));
    Eigen::VectorXd far(1);
    far << -3.5;
    CHECK(step(model, SamplerKind::LMC, far, 0.25, &z, nullptr)(0) == star(0));
}

TEST_CASE("SGLD minus SGD from the same point is exactly the Gaussian kick") {
    auto model = testsup::linreg_1d_x12();
    RngStream noise = RngStream::derive(41, 1);
    RngStream batches = RngStream::derive(41, 2);
    Eigen::VectorXd theta(1);
    theta << 0.9;
    const double gamma = 0.05;
    for (int k = 0; k < 20; ++k) {
        const Minibatch b = draw_minibatch(model.n_data(), 1, batches);
        const Eigen::VectorXd z = noise.normal_vector(1);
        const Eigen::VectorXd sgld = step(model, SamplerKind::SGLD, theta, gamma, &z, &b);
        const Eigen::VectorXd sgd = step(model, SamplerKind::SGD, theta, gamma, &z, &b);
        const double kick = std::sqrt(2.0 * gamma) * z(0);
        CHECK(std::abs((sgld(0) - sgd(0)) - kick) <= 4e-16 * (1.0 + std::abs(kick)));
        theta = sgld;
    }
}

TEST_CASE("SGLDFP started at the center stays there without Gaussian noise") {
    auto model = testsup::linreg_1d_exact_mode();
    const Eigen::VectorXd center = linreg_posterior_params(model).theta_star;
    const ControlVariateCache cv = ControlVariateCache::build(model, center);
    RngStream batches = RngStream::derive(42, 2);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd theta = center;
    for (int k = 0; k < 10; ++k) {
        const Minibatch b = draw_minibatch(model.n_data(), 1, batches);
        theta = step(model, SamplerKind::SGLDFP, theta, 0.05, &z, &b, &cv);
        CHECK(theta(0) == center(0));
    }
}

TEST_CASE("run_chain basics") {
    auto model = testsup::linreg_1d();
    ChainConfig cc;
    cc.kind = SamplerKind::LMC;
    cc.gamma = 0.1;
    cc.n_iters = 0;
    cc.seed = 7;
    cc.init = Eigen::VectorXd::Constant(1, 2.5);
    const ChainOutput out = run_chain(model, cc);
    CHECK(out.n_kept == 0);
    CHECK(out.moments.count() == 0);
    CHECK(out.final_state(0) == 2.5);

    cc.n_iters = 1000;
    cc.store_samples = true;
    const ChainOutput run1 = run_chain(model, cc);
    const ChainOutput run2 = run_chain(model, cc);
    CHECK(run1.n_kept == 900);
    CHECK(static_cast<long>(run1.samples.size()) == run1.n_kept);
    CHECK(run1.final_state(0) == run2.final_state(0));
    CHECK(run1.moments.mean()(0) == run2.moments.mean()(0));
    CHECK(run1.moments.covariance()(0, 0) == run2.moments.covariance()(0, 0));
}

TEST_CASE("retained samples reproduce the streaming accumulator exactly") {
    auto model = testsup::linreg_1d();
    ChainConfig cc;
    cc.kind = SamplerKind::SGLD;
    cc.gamma = 0.1;
    cc.p = 1;
    cc.n_iters = 500;
    cc.seed = 99;
    cc.init = Eigen::VectorXd::Zero(1);
    cc.store_samples = true;
    const ChainOutput out = run_chain(model, cc);
    MomentAccumulator replay(1);
    for (const auto& s : out.samples) replay.add(s);
    CHECK(replay.mean()(0) == out.moments.mean()(0));
    CHECK(replay.covariance()(0, 0) == out.moments.covariance()(0, 0));
}

TEST_CASE("stream-drawing step overload is deterministic given its streams") {
    auto model = testsup::linreg_1d_x12();
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.2);
    RngStream n1 = RngStream::derive(4, 1), b1 = RngStream::derive(4, 2);
    RngStream n2 = RngStream::derive(4, 1), b2 = RngStream::derive(4, 2);
    for (int k = 0; k < 10; ++k) {
        const Eigen::VectorXd a = step(model, SamplerKind::SGLD, theta, 0.05, 1, n1, b1);
        const Eigen::VectorXd b = step(model, SamplerKind::SGLD, theta, 0.05, 1, n2, b2);
        CHECK(a(0) == b(0));
        theta = a;
    }
}

TEST_CASE("run_chain validation") {
    auto model = testsup::linreg_1d();
    ChainConfig cc;
    cc.kind = SamplerKind::SGLD;
    cc.gamma = 0.0;
    cc.n_iters = 10;
    cc.init = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(run_chain(model, cc), std::invalid_argument);
    cc.gamma = 1.0;  // above 2/lambda_max(Sigma) = 2/3
    CHECK_THROWS_AS(run_chain(model, cc), std::invalid_argument);
    cc.gamma = 0.1;
    cc.kind = SamplerKind::SGLDFP;
    CHECK_THROWS_AS(run_chain(model, cc), std::invalid_argument);  // missing cache
    cc.kind = SamplerKind::SGLD;
    cc.burn_in_fraction = 1.0;
    CHECK_THROWS_AS(run_chain(model, cc), std::invalid_argument);
}

TEST_CASE("divergence is reported with kind and step size") {
    auto model = testsup::linreg_1d_x12();
    Eigen::VectorXd huge(1);
    huge << 1e9;
    const Minibatch b{{0}};
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
    try {
        (void)step(model, SamplerKind::SGD, huge, 0.05, &z, &b);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.kind == SamplerKind::SGD);
        CHECK(e.gamma == 0.05);
        CHECK(std::string(e.what()).find("SGD") != std::string::npos);
    }
}

TEST_CASE("LMC long-run variance matches the closed form") {
    auto model = testsup::linreg_1d();
    const double gamma = 0.05;
    const Eigen::MatrixXd oracle = stationary_cov_linreg(SamplerKind::LMC, model, gamma, 1);
    ChainConfig cc;
    cc.kind = SamplerKind::LMC;
    cc.gamma = gamma;
    cc.n_iters = 200000;
    cc.seed = 17;
    cc.init = linreg_posterior_params(model).theta_star;
    const ChainOutput out = run_chain(model, cc);
    const double v = out.moments.covariance()(0, 0);
    CHECK(std::abs(v - oracle(0, 0)) <= 0.05 * oracle(0, 0));
}

TEST_CASE("coupled chains: same kind, same init never separate") {
    auto model = testsup::linreg_1d_x12();
    const Eigen::VectorXd init = Eigen::VectorXd::Constant(1, 0.7);
    const ControlVariateCache cv =
        ControlVariateCache::build(model, linreg_posterior_params(model).theta_star);
    for (SamplerKind kind :
         {SamplerKind::LMC, SamplerKind::SGLD, SamplerKind::SGLDFP, SamplerKind::SGD}) {
        const CoupledDistanceCurve curve =
            run_coupled_chains(model, kind, kind, 0.05, 1, 30, 5, init, init, 4, &cv);
        for (double v : curve.mean_sq_dist) CHECK(v == 0.0);
    }
}

TEST_CASE("coupled same-kind distance is non-increasing within Monte-Carlo error") {
    auto model = testsup::linreg_1d_x12();
    const Eigen::VectorXd star = linreg_posterior_params(model).theta_star;
    const ControlVariateCache cv = ControlVariateCache::build(model, star);
    const Eigen::VectorXd init_a = star.array() + 2.0;
    const Eigen::VectorXd init_b = star.array() - 1.0;
    const double gamma = 0.05;  // below 1/L = 1/12
    for (SamplerKind kind :
         {SamplerKind::LMC, SamplerKind::SGLD, SamplerKind::SGLDFP, SamplerKind::SGD}) {
        const CoupledDistanceCurve curve =
            run_coupled_chains(model, kind, kind, gamma, 1, 20, 6, init_a, init_b, 100, &cv);
        for (std::size_t k = 0; k + 1 < curve.mean_sq_dist.size(); ++k) {
            const double slack =
                3.0 * (curve.stderr_sq_dist[k] + curve.stderr_sq_dist[k + 1]);
            CHECK(curve.mean_sq_dist[k + 1] <= curve.mean_sq_dist[k] + slack);
        }
    }
}

TEST_CASE("SGLD / SGD coupled pair plateaus near 2d/m") {
    auto model = testsup::linreg_1d_x12();
    const Eigen::VectorXd star = linreg_posterior_params(model).theta_star;
    const ModelConstants consts = lipschitz_constants(model, star);
    const double gamma = 0.05;
    const long n = 200;
    const CoupledDistanceCurve curve =
        run_coupled_chains(model, SamplerKind::SGLD, SamplerKind::SGD, gamma, 1, n, 8, star,
                           star, 200);
    const double plateau_bound = 2.0 * model.dim() / consts.m;
    for (long k = n / 2; k <= n; ++k) {
        CHECK(curve.mean_sq_dist[k] <= plateau_bound + 3.0 * curve.stderr_sq_dist[k]);
    }
    CHECK(curve.mean_sq_dist[n] >= gamma * model.dim());
}
