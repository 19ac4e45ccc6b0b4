#include "sgldfp/stationary.hpp"

#include <cmath>
#include <sstream>

namespace sgldfp {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

void require_linear(const PosteriorModel& model, const char* who) {
    if (model.kind() != ModelKind::LinearRegression)
        throw std::invalid_argument(std::string(who) + ": linear regression only");
}

}  // namespace

std::vector<Eigen::MatrixXd> likelihood_hessians(const PosteriorModel& model,
                                                 const Eigen::VectorXd& theta) {
    std::vector<Eigen::MatrixXd> hs;
    hs.reserve(model.n_data());
    for (int i = 1; i <= model.n_data(); ++i) hs.push_back(model.hessian_datum(i, theta));
    return hs;
}

KronOperator build_H(const Eigen::MatrixXd& hessian, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("build_H: gamma must be positive");
    const int d = static_cast<int>(hessian.rows());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    return KronOperator::product_pair(hessian, id) + KronOperator::product_pair(id, hessian) -
           gamma * KronOperator::product_pair(hessian, hessian);
}

KronOperator build_L(const std::vector<Eigen::MatrixXd>& per_datum_hessians, int p) {
    if (per_datum_hessians.empty()) throw std::invalid_argument("build_L: no Hessians");
    if (p < 1) throw std::invalid_argument("build_L: p must be >= 1");
    const int n = static_cast<int>(per_datum_hessians.size());
    const int d = static_cast<int>(per_datum_hessians.front().rows());
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
    for (const auto& h : per_datum_hessians) mean += h;
    mean /= n;
    KronOperator op = KronOperator::zero(d);
    for (const auto& h : per_datum_hessians) {
        const Eigen::MatrixXd c = h - mean;
        op += KronOperator::product_pair(c, c);
    }
    op *= static_cast<double>(n) / p;
    return op;
}

KronOperator build_G(const Eigen::MatrixXd& hessian, const KronOperator& l_op, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("build_G: gamma must be positive");
    const int d = static_cast<int>(hessian.rows());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    KronOperator op =
        KronOperator::product_pair(hessian, id) + KronOperator::product_pair(id, hessian);
    KronOperator noise = KronOperator::product_pair(hessian, hessian) + l_op;
    noise *= gamma;
    op -= noise;
    return op;
}

KronOperator build_T(const LinRegPosterior& linreg, const Dataset& data, int p,
                     double sigma_y_sq, double sigma_theta_sq) {
    if (p < 1) throw std::invalid_argument("build_T: p must be >= 1");
    const int d = data.dim();
    const int n = data.n();
    const Eigen::MatrixXd prior_share =
        Eigen::MatrixXd::Identity(d, d) / (n * sigma_theta_sq) - linreg.Sigma / n;
    KronOperator op = KronOperator::zero(d);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = data.X.row(i).transpose();
        const Eigen::MatrixXd c = (x * x.transpose()) / sigma_y_sq + prior_share;
        op += KronOperator::product_pair(c, c);
    }
    op *= static_cast<double>(n) / p;
    return op;
}

Eigen::MatrixXd build_M(const PosteriorModel& model, const Eigen::VectorXd& theta_star) {
    const int d = model.dim();
    const int n = model.n_data();
    Eigen::MatrixXd grads(d, n);
    for (int i = 1; i <= n; ++i) grads.col(i - 1) = model.grad_datum(i, theta_star);
    const Eigen::VectorXd mean = grads.rowwise().mean();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd c = grads.col(i) - mean;
        m += c * c.transpose();
    }
    return symmetrize(m);
}

Eigen::MatrixXd xi_second_moment(const PosteriorModel& model, int p) {
    require_linear(model, "xi_second_moment");
    if (p < 1) throw std::invalid_argument("xi_second_moment: p must be >= 1");
    const LinRegPosterior post = linreg_posterior_params(model);
    const int d = model.dim();
    const int n = model.n_data();
    const Eigen::VectorXd prior_share = post.theta_star / (n * model.prior_variance());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = model.data().X.row(i).transpose();
        const Eigen::VectorXd v =
            ((x.dot(post.theta_star) - model.data().y(i)) / model.noise_variance()) * x +
            prior_share;
        out += v * v.transpose();
    }
    out *= static_cast<double>(n) / p;
    return symmetrize(out);
}

double multiplicative_noise_ratio_sq(const KronOperator& l_op, const Eigen::MatrixXd& hessian) {
    const int d = static_cast<int>(hessian.rows());
    const Eigen::MatrixXd basis = symmetric_basis(d);
    const Eigen::MatrixXd l_sym =
        symmetrize(basis.transpose() * l_op.mat() * basis);
    const Eigen::MatrixXd h2_sym =
        symmetrize(basis.transpose() * KronOperator::product_pair(hessian, hessian).mat() * basis);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(l_sym, h2_sym);
    return std::max(0.0, es.eigenvalues().maxCoeff());
}

Eigen::MatrixXd stationary_cov_linreg(SamplerKind kind, const LinRegPosterior& linreg,
                                      const KronOperator& t_op, double gamma,
                                      const Eigen::MatrixXd& additive_noise_matrix) {
    if (gamma <= 0.0) throw std::invalid_argument("stationary_cov_linreg: gamma must be positive");
    const int d = static_cast<int>(linreg.Sigma.rows());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    KronOperator op = KronOperator::product_pair(linreg.Sigma, id) +
                      KronOperator::product_pair(id, linreg.Sigma) -
                      gamma * KronOperator::product_pair(linreg.Sigma, linreg.Sigma);
    if (kind != SamplerKind::LMC) {
        KronOperator t = t_op;
        t *= gamma;
        op -= t;
    }
    if (op.min_eigenvalue_symmetric() <= 0.0) {
        std::ostringstream msg;
        msg << "stationary_cov_linreg: gamma=" << gamma
            << " outside the validity range (operator not positive definite)";
        throw std::domain_error(msg.str());
    }
    Eigen::MatrixXd rhs;
    switch (kind) {
        case SamplerKind::LMC:
        case SamplerKind::SGLDFP: rhs = 2.0 * id; break;
        case SamplerKind::SGLD: rhs = 2.0 * id + gamma * additive_noise_matrix; break;
        case SamplerKind::SGD: rhs = gamma * additive_noise_matrix; break;
    }
    return symmetrize(op.solve(rhs));
}

Eigen::MatrixXd stationary_cov_linreg(SamplerKind kind, const PosteriorModel& model,
                                      double gamma, int p) {
    require_linear(model, "stationary_cov_linreg");
    const LinRegPosterior post = linreg_posterior_params(model);
    const KronOperator t_op =
        build_T(post, model.data(), p, model.noise_variance(), model.prior_variance());
    const Eigen::MatrixXd additive = kind == SamplerKind::SGLD || kind == SamplerKind::SGD
                                         ? xi_second_moment(model, p)
                                         : Eigen::MatrixXd::Zero(model.dim(), model.dim());
    return stationary_cov_linreg(kind, post, t_op, gamma, additive);
}

Sgld1dMoments sgld_1d_stationary_moments(const PosteriorModel& model, double gamma, int p,
                                         SamplerKind kind) {
    require_linear(model, "sgld_1d_stationary_moments");
    if (model.dim() != 1)
        throw std::invalid_argument("sgld_1d_stationary_moments: dimension 1 only");
    if (kind != SamplerKind::SGLD && kind != SamplerKind::SGLDFP)
        throw std::invalid_argument("sgld_1d_stationary_moments: SGLD or SGLDFP only");
    if (p < 1) throw std::invalid_argument("sgld_1d_stationary_moments: p must be >= 1");

    const int n = model.n_data();
    const double sy2 = model.noise_variance();
    const double st2 = model.prior_variance();
    const LinRegPosterior post = linreg_posterior_params(model);
    const double sigma = post.Sigma(0, 0);
    const double theta_star = post.theta_star(0);

    const Eigen::VectorXd xsq = model.data().X.col(0).array().square();
    const double sum_xsq = xsq.sum();

    const double gamma_max = (1.0 / sigma) / (1.0 + n / (p * sum_xsq));
    if (gamma <= 0.0 || gamma > gamma_max) {
        std::ostringstream msg;
        msg << "sgld_1d_stationary_moments: gamma=" << gamma << " outside (0, " << gamma_max
            << "]";
        throw std::domain_error(msg.str());
    }

    const double mean_xsq = sum_xsq / n;
    double centered_sq = 0.0;
    for (int i = 0; i < n; ++i) centered_sq += (xsq(i) - mean_xsq) * (xsq(i) - mean_xsq);

    Sgld1dMoments out;
    out.mu = 1.0 - 2.0 * gamma * sigma +
             gamma * gamma * (sigma * sigma + n * centered_sq / (sy2 * sy2 * p));

    double a = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = model.data().X(i, 0);
        const double v = (x * theta_star - model.data().y(i)) * x / sy2 + theta_star / (n * st2);
        a += v * v;
    }
    a *= static_cast<double>(n) / p;
    out.additive_second_moment = a;

    const double injection =
        2.0 * gamma + (kind == SamplerKind::SGLD ? gamma * gamma * a : 0.0);
    out.stationary_variance = injection / (1.0 - out.mu);
    return out;
}

double sgld_1d_variance_at_iteration(const Sgld1dMoments& m, double gamma, SamplerKind kind,
                                     long n) {
    const double injection =
        2.0 * gamma +
        (kind == SamplerKind::SGLD ? gamma * gamma * m.additive_second_moment : 0.0);
    return (1.0 - std::pow(m.mu, static_cast<double>(n))) / (1.0 - m.mu) * injection;
}

MomentExpansion posterior_moment_expansion(const PosteriorModel& model,
                                           const Eigen::VectorXd& theta_star) {
    const Eigen::MatrixXd hess = model.hessian_at(theta_star);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::domain_error("posterior_moment_expansion: Hessian not positive definite");
    MomentExpansion out;
    out.cov = symmetrize(hess.ldlt().solve(Eigen::MatrixXd::Identity(model.dim(), model.dim())));
    const SymmetricTensor3 d3 = model.third_derivative_at(theta_star);
    out.mean_bias = -0.5 * hess.ldlt().solve(d3.contract(out.cov)).eval();
    return out;
}

double eta_threshold(const PosteriorModel& model, int p, const Eigen::VectorXd& theta_star) {
    const ModelConstants consts = lipschitz_constants(model, theta_star);
    const KronOperator l_op = build_L(likelihood_hessians(model, theta_star), p);
    const double r_sq = multiplicative_noise_ratio_sq(l_op, model.hessian_at(theta_star));
    const double n = static_cast<double>(model.n_data());
    return std::min(n / (12.0 * std::max(consts.L, 1.0)),
                    2.0 * n / ((1.0 + r_sq) * consts.L));
}

MomentExpansion stationary_moment_expansion(SamplerKind kind, const PosteriorModel& model,
                                            double gamma, int p) {
    Eigen::VectorXd theta_star;
    if (model.kind() == ModelKind::LinearRegression)
        theta_star = linreg_posterior_params(model).theta_star;
    else
        theta_star = find_mode(model, 1e-10, 300);
    return stationary_moment_expansion(kind, model, gamma, p, theta_star);
}

MomentExpansion stationary_moment_expansion(SamplerKind kind, const PosteriorModel& model,
                                            double gamma, int p,
                                            const Eigen::VectorXd& theta_star) {
    if (gamma <= 0.0)
        throw std::invalid_argument("stationary_moment_expansion: gamma must be positive");
    if (p < 1) throw std::invalid_argument("stationary_moment_expansion: p must be >= 1");
    const double n = static_cast<double>(model.n_data());
    const double eta = gamma * n;
    const double eta0 = eta_threshold(model, p, theta_star);
    if (eta >= eta0) {
        std::ostringstream msg;
        msg << "stationary_moment_expansion: eta=" << eta << " >= eta_0=" << eta0;
        throw std::domain_error(msg.str());
    }
    // The subsampled-kernel expansions additionally assume N >= 1/eta; the
    // formulas still evaluate below that threshold, so it is not checked here.

    const Eigen::MatrixXd hess = model.hessian_at(theta_star);
    const int d = model.dim();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);

    MomentExpansion out;
    switch (kind) {
        case SamplerKind::LMC: {
            out.cov = build_H(hess, gamma).solve(2.0 * id);
            break;
        }
        case SamplerKind::SGLDFP: {
            const KronOperator g =
                build_G(hess, build_L(likelihood_hessians(model, theta_star), p), gamma);
            out.cov = g.solve(2.0 * id);
            break;
        }
        case SamplerKind::SGLD:
        case SamplerKind::SGD: {
            const KronOperator g =
                build_G(hess, build_L(likelihood_hessians(model, theta_star), p), gamma);
            const Eigen::MatrixXd m = build_M(model, theta_star);
            const Eigen::MatrixXd rhs = kind == SamplerKind::SGLD
                                            ? (2.0 * id + (eta / p) * m).eval()
                                            : ((eta / p) * m).eval();
            out.cov = g.solve(rhs);
            break;
        }
    }
    out.cov = symmetrize(out.cov);
    const SymmetricTensor3 d3 = model.third_derivative_at(theta_star);
    out.mean_bias = -0.5 * hess.ldlt().solve(d3.contract(out.cov)).eval();
    return out;
}

}  // namespace sgldfp
