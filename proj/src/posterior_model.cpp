#include "sgldfp/posterior_model.hpp"

#include <cmath>
#include <sstream>

namespace sgldfp {

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

namespace {

// log(1 + e^t), overflow-safe
double log1p_exp(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

double sigmoid_d1(double t) {
    const double s = sigmoid(t);
    return s * (1.0 - s);
}

double sigmoid_d2(double t) {
    const double s = sigmoid(t);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
}

}  // namespace

void SymmetricTensor3::add_rank_one(double w, const Eigen::VectorXd& x) {
    for (int k = 0; k < d_; ++k) {
        const double wk = w * x(k);
        for (int i = 0; i < d_; ++i) {
            const double wki = wk * x(i);
            for (int j = 0; j < d_; ++j) (*this)(k, i, j) += wki * x(j);
        }
    }
}

Eigen::VectorXd SymmetricTensor3::contract(const Eigen::MatrixXd& a) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d_);
    for (int k = 0; k < d_; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) acc += (*this)(k, i, j) * a(i, j);
        out(k) = acc;
    }
    return out;
}

double SymmetricTensor3::max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
}

PosteriorModel::PosteriorModel(Dataset data, ModelKind kind, double sigma_y_sq,
                               double sigma_theta_sq)
    : data_(std::move(data)), kind_(kind), sigma_y_sq_(sigma_y_sq),
      sigma_theta_sq_(sigma_theta_sq) {
    if (sigma_theta_sq_ <= 0.0)
        throw std::invalid_argument("PosteriorModel: prior variance must be positive");
}

PosteriorModel PosteriorModel::linear_regression(Dataset data, double sigma_y_sq,
                                                 double sigma_theta_sq) {
    if (sigma_y_sq <= 0.0)
        throw std::invalid_argument("PosteriorModel: sigma_y^2 must be positive");
    return PosteriorModel(std::move(data), ModelKind::LinearRegression, sigma_y_sq,
                          sigma_theta_sq);
}

PosteriorModel PosteriorModel::logistic_regression(Dataset data, double prior_variance) {
    for (int i = 0; i < data.n(); ++i) {
        const double yi = data.y(i);
        if (yi != 0.0 && yi != 1.0)
            throw std::invalid_argument("PosteriorModel: logistic responses must be 0 or 1");
    }
    return PosteriorModel(std::move(data), ModelKind::LogisticRegression, 0.0, prior_variance);
}

double PosteriorModel::noise_variance() const {
    if (kind_ != ModelKind::LinearRegression)
        throw std::logic_error("noise_variance: linear regression only");
    return sigma_y_sq_;
}

Eigen::VectorXd PosteriorModel::grad_datum(int i, const Eigen::VectorXd& theta) const {
    if (i < 0 || i > n_data()) throw std::out_of_range("grad_datum: index out of range");
    if (i == 0) return theta / sigma_theta_sq_;
    const auto x = data_.X.row(i - 1).transpose();
    const double t = x.dot(theta);
    if (kind_ == ModelKind::LinearRegression)
        return ((t - data_.y(i - 1)) / sigma_y_sq_) * x;
    return (sigmoid(t) - data_.y(i - 1)) * x;
}

Eigen::VectorXd PosteriorModel::grad_full(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd t = data_.X * theta;
    if (kind_ == ModelKind::LinearRegression)
        return data_.X.transpose() * (t - data_.y) / sigma_y_sq_ + theta / sigma_theta_sq_;
    Eigen::VectorXd s(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) s(i) = sigmoid(t(i));
    return data_.X.transpose() * (s - data_.y) + theta / sigma_theta_sq_;
}

Eigen::MatrixXd PosteriorModel::hessian_datum(int i, const Eigen::VectorXd& theta) const {
    if (i < 0 || i > n_data()) throw std::out_of_range("hessian_datum: index out of range");
    const int d = dim();
    if (i == 0) return Eigen::MatrixXd::Identity(d, d) / sigma_theta_sq_;
    const auto x = data_.X.row(i - 1).transpose();
    if (kind_ == ModelKind::LinearRegression) return (x * x.transpose()) / sigma_y_sq_;
    return sigmoid_d1(x.dot(theta)) * (x * x.transpose());
}

Eigen::MatrixXd PosteriorModel::hessian_at(const Eigen::VectorXd& theta) const {
    const int d = dim();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d) / sigma_theta_sq_;
    if (kind_ == ModelKind::LinearRegression) {
        h += data_.X.transpose() * data_.X / sigma_y_sq_;
    } else {
        const Eigen::VectorXd t = data_.X * theta;
        Eigen::VectorXd w(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) w(i) = sigmoid_d1(t(i));
        h += data_.X.transpose() * w.asDiagonal() * data_.X;
    }
    return 0.5 * (h + h.transpose());
}

SymmetricTensor3 PosteriorModel::third_derivative_at(const Eigen::VectorXd& theta) const {
    SymmetricTensor3 t3(dim());
    if (kind_ == ModelKind::LinearRegression) return t3;  // quadratic potential
    for (int i = 0; i < n_data(); ++i) {
        const Eigen::VectorXd x = data_.X.row(i).transpose();
        t3.add_rank_one(sigmoid_d2(x.dot(theta)), x);
    }
    return t3;
}

double PosteriorModel::potential(const Eigen::VectorXd& theta) const {
    double u = 0.5 * theta.squaredNorm() / sigma_theta_sq_;
    const Eigen::VectorXd t = data_.X * theta;
    if (kind_ == ModelKind::LinearRegression) {
        u += 0.5 * (t - data_.y).squaredNorm() / sigma_y_sq_;
    } else {
        for (Eigen::Index i = 0; i < t.size(); ++i)
            u += log1p_exp(t(i)) - data_.y(i) * t(i);
    }
    return u;
}

LinRegPosterior linreg_posterior_params(const PosteriorModel& model) {
    if (model.kind() != ModelKind::LinearRegression)
        throw std::invalid_argument("linreg_posterior_params: linear regression only");
    const auto& data = model.data();
    const int d = model.dim();
    LinRegPosterior out;
    out.Sigma = Eigen::MatrixXd::Identity(d, d) / model.prior_variance() +
                data.X.transpose() * data.X / model.noise_variance();
    out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose()).eval();
    out.theta_star = out.Sigma.ldlt().solve(data.X.transpose() * data.y / model.noise_variance());
    return out;
}

ModelConstants lipschitz_constants(const PosteriorModel& model) {
    Eigen::VectorXd mode;
    if (model.kind() == ModelKind::LinearRegression)
        mode = linreg_posterior_params(model).theta_star;
    else
        mode = find_mode(model, 1e-9, 300);
    return lipschitz_constants(model, mode);
}

ModelConstants lipschitz_constants(const PosteriorModel& model, const Eigen::VectorXd& mode) {
    const double c_kind =
        model.kind() == ModelKind::LinearRegression ? 1.0 / model.noise_variance() : 0.25;
    double max_xsq = 0.0;
    for (int i = 0; i < model.n_data(); ++i)
        max_xsq = std::max(max_xsq, model.data().X.row(i).squaredNorm());
    ModelConstants c;
    c.L_tilde = std::max(max_xsq * c_kind, 1.0 / model.prior_variance());
    c.L = (model.n_data() + 1) * c.L_tilde;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.hessian_at(mode));
    c.m = es.eigenvalues().minCoeff();
    if (!(c.m >= 0.0 && c.m <= c.L))
        throw std::logic_error("lipschitz_constants: expected 0 <= m <= L");
    return c;
}

double gradient_lipschitz_tight(const PosteriorModel& model) {
    const auto& x = model.data().X;
    const int d = model.dim();
    const double c_kind =
        model.kind() == ModelKind::LinearRegression ? 1.0 / model.noise_variance() : 0.25;
    Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(d, d) / model.prior_variance() + c_kind * x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    return es.eigenvalues().maxCoeff();
}

Eigen::VectorXd find_mode(const PosteriorModel& model, double tol, int max_iters) {
    if (tol <= 0.0) throw std::invalid_argument("find_mode: tol must be positive");
    if (model.kind() == ModelKind::LinearRegression) {
        Eigen::VectorXd mode = linreg_posterior_params(model).theta_star;
        if (model.grad_full(mode).norm() <= tol) return mode;
        // fall through to Newton for badly conditioned systems
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.dim());
    if (model.kind() == ModelKind::LinearRegression)
        theta = linreg_posterior_params(model).theta_star;
    const double grad_step = 1.0 / gradient_lipschitz_tight(model);

    for (int iter = 0; iter < max_iters; ++iter) {
        const Eigen::VectorXd g = model.grad_full(theta);
        const double gnorm = g.norm();
        if (gnorm <= tol) return theta;

        Eigen::VectorXd dir = -model.hessian_at(theta).ldlt().solve(g);
        if (!dir.allFinite() || g.dot(dir) >= 0.0) dir = -grad_step * g;  // fallback

        // accept a full step that shrinks the gradient (Newton's quadratic
        // phase, where potential decrements fall below rounding)
        const Eigen::VectorXd full = theta + dir;
        if (full.allFinite() && model.grad_full(full).norm() < gnorm) {
            theta = full;
            continue;
        }

        // otherwise halve along the direction until the potential drops
        const double u = model.potential(theta);
        const double slope = g.dot(dir);
        double t = 1.0;
        Eigen::VectorXd cand = full;
        while (model.potential(cand) > u + 1e-4 * t * slope && t > 1e-14) {
            t *= 0.5;
            cand = theta + t * dir;
        }
        theta = cand;
    }
    const double gnorm = model.grad_full(theta).norm();
    if (gnorm <= tol) return theta;
    std::ostringstream msg;
    msg << "find_mode: no convergence after " << max_iters
        << " iterations; gradient norm " << gnorm << " > tol " << tol;
    throw ModeFindingError(msg.str(), theta, gnorm);
}

double logistic_mean_nll(const Dataset& data, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd t = data.X * theta;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) acc += log1p_exp(t(i)) - data.y(i) * t(i);
    return acc / static_cast<double>(data.n());
}

}  // namespace sgldfp
