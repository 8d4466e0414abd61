#include "czp/fit.hpp"

#include <sstream>

namespace czp {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Packed {
    int k;
    double eps_pole;

    int size() const { return 4 * k + 1; }

    CZPModel unpack(const Eigen::VectorXd& theta, FrequencyUnit unit) const {
        CZPModel m;
        m.log_c0 = theta[0];
        m.eps_pole = eps_pole;
        m.unit = unit;
        m.zeros.reserve(static_cast<size_t>(k));
        m.poles.reserve(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) {
            m.zeros.emplace_back(theta[1 + i], theta[1 + k + i]);
            m.poles.emplace_back(theta[1 + 2 * k + i], eps_pole + softplus(theta[1 + 3 * k + i]));
        }
        return m;
    }
};

// Residuals r_m = model(w_m) - y_m and the analytic Jacobian.
void residuals_and_jacobian(const Packed& packed, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& omega, const Eigen::VectorXd& target,
                            Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const int m = static_cast<int>(omega.size());
    const int k = packed.k;
    r.resize(m);
    if (jac) jac->setZero(m, packed.size());
    for (int j = 0; j < m; ++j) {
        const double w = omega[j];
        double acc = theta[0];
        if (jac) (*jac)(j, 0) = 1.0;
        for (int i = 0; i < k; ++i) {
            const double zr = theta[1 + i], zi = theta[1 + k + i];
            const double dzr = w - zr;
            const double dz2 = std::max(dzr * dzr + zi * zi, 1e-300);
            acc += 0.5 * std::log(dz2);
            const double pr = theta[1 + 2 * k + i], pu = theta[1 + 3 * k + i];
            const double pi = packed.eps_pole + softplus(pu);
            const double dpr = w - pr;
            const double dp2 = dpr * dpr + pi * pi;
            acc -= 0.5 * std::log(dp2);
            if (jac) {
                (*jac)(j, 1 + i) = -dzr / dz2;
                (*jac)(j, 1 + k + i) = zi / dz2;
                (*jac)(j, 1 + 2 * k + i) = dpr / dp2;
                (*jac)(j, 1 + 3 * k + i) = -pi / dp2 * sigmoid(pu);
            }
        }
        r[j] = acc - target[j];
    }
}

double loss_of_residuals(const Eigen::VectorXd& r, const FitOptions& opt) {
    const int m = static_cast<int>(r.size());
    if (opt.loss == LossKind::mse) return r.squaredNorm() / m;
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
        const double l = std::abs(r[j]);
        acc += l * l / (1.0 + std::exp(opt.shrink_a * (opt.shrink_c - l)));
    }
    return acc / m;
}

// dL/dtheta for the shrinkage loss, given residuals and Jacobian.
Eigen::VectorXd shrinkage_gradient(const Eigen::VectorXd& r, const Eigen::MatrixXd& jac,
                                   const FitOptions& opt) {
    const int m = static_cast<int>(r.size());
    Eigen::VectorXd dldr(m);
    for (int j = 0; j < m; ++j) {
        const double l = std::abs(r[j]);
        const double s = sigmoid(opt.shrink_a * (l - opt.shrink_c));
        const double dl = 2.0 * l * s + opt.shrink_a * l * l * s * (1.0 - s);
        dldr[j] = (r[j] > 0.0 ? dl : (r[j] < 0.0 ? -dl : 0.0)) / m;
    }
    return jac.transpose() * dldr;
}

struct LocalFit {
    double loss = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd theta;
};

LocalFit run_lm(const Packed& packed, Eigen::VectorXd theta, const Eigen::VectorXd& omega,
                const Eigen::VectorXd& target, const FitOptions& opt) {
    LocalFit best;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals_and_jacobian(packed, theta, omega, target, r, &jac);
    double loss = loss_of_residuals(r, opt);
    double mu = 1e-3;
    int iter = 0;
    for (; iter < opt.max_iters; ++iter) {
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * r;
        if (jtr.lpNorm<Eigen::Infinity>() <= 1e-14) {
            best.converged = true;
            break;
        }
        bool stepped = false;
        for (int tries = 0; tries < 25; ++tries) {
            Eigen::MatrixXd damped = jtj;
            for (int d = 0; d < damped.rows(); ++d)
                damped(d, d) += mu * std::max(jtj(d, d), 1e-12);
            Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
            Eigen::VectorXd candidate = theta + delta;
            Eigen::VectorXd r2;
            residuals_and_jacobian(packed, candidate, omega, target, r2, nullptr);
            const double loss2 = loss_of_residuals(r2, opt);
            if (std::isfinite(loss2) && loss2 < loss) {
                theta = candidate;
                loss = loss2;
                mu = std::max(mu / 3.0, 1e-12);
                stepped = true;
                if (delta.norm() <= 1e-14 * (1.0 + theta.norm())) {
                    best.converged = true;
                }
                break;
            }
            mu *= 2.0;
            if (mu > 1e12) break;
        }
        if (!stepped || best.converged || loss <= 1e-17) {
            if (loss <= 1e-17 || !stepped) best.converged = best.converged || loss <= 1e-17;
            break;
        }
        residuals_and_jacobian(packed, theta, omega, target, r, &jac);
    }
    best.loss = loss;
    best.iterations = iter;
    best.theta = std::move(theta);
    return best;
}

LocalFit run_gd(const Packed& packed, Eigen::VectorXd theta, const Eigen::VectorXd& omega,
                const Eigen::VectorXd& target, const FitOptions& opt) {
    LocalFit out;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals_and_jacobian(packed, theta, omega, target, r, &jac);
    double loss = loss_of_residuals(r, opt);
    double step = 0.1;
    int iter = 0;
    for (; iter < opt.max_iters * 5; ++iter) {
        Eigen::VectorXd grad = shrinkage_gradient(r, jac, opt);
        const double gnorm = grad.norm();
        if (gnorm <= 1e-12) {
            out.converged = true;
            break;
        }
        bool stepped = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::VectorXd candidate = theta - step * grad;
            Eigen::VectorXd r2;
            residuals_and_jacobian(packed, candidate, omega, target, r2, nullptr);
            const double loss2 = loss_of_residuals(r2, opt);
            if (std::isfinite(loss2) && loss2 <= loss - 1e-4 * step * gnorm * gnorm) {
                theta = candidate;
                loss = loss2;
                step *= 1.5;
                stepped = true;
                break;
            }
            step *= 0.5;
        }
        if (!stepped) break;
        residuals_and_jacobian(packed, theta, omega, target, r, &jac);
    }
    out.loss = loss;
    out.iterations = iter;
    out.theta = std::move(theta);
    return out;
}

}  // namespace

FitReport fit_czp(const FrequencyResponse& target, int degree, const FitOptions& options) {
    require(degree >= 0, Errc::invalid_argument, "fit_czp: degree must be >= 0");
    require(options.restarts >= 1, Errc::invalid_argument, "fit_czp: restarts must be >= 1");
    const int m = target.grid.count();
    require(m >= 2 * degree + 1, Errc::invalid_argument,
            "fit_czp: grid must have at least 2K+1 points");
    require(target.log_mag.allFinite(), Errc::invalid_argument, "fit_czp: target must be finite");

    const Packed packed{degree, options.eps_pole};
    const Eigen::VectorXd& omega = target.grid.values;
    const double lo = omega[0], hi = omega[m - 1];
    const double span = hi - lo;

    LocalFit best;
    int best_restart = -1;
    std::vector<double> restart_losses;
    for (int restart = 0; restart < options.restarts; ++restart) {
        Rng rng(mix_seed(options.seed, static_cast<std::uint64_t>(restart)));
        Eigen::VectorXd theta(packed.size());
        theta[0] = target.log_mag.mean();
        for (int i = 0; i < degree; ++i) {
            // poles spread over the band, zeros jittered off the poles
            const double pr = lo + span * (i + 0.5) / std::max(degree, 1) +
                              0.05 * span * rng.normal();
            const double pim = rng.uniform(0.1, 1.0);
            theta[1 + 2 * degree + i] = pr;
            theta[1 + 3 * degree + i] = softplus_inv(std::max(pim - options.eps_pole, 1e-6));
            theta[1 + i] = pr + 0.05 * span * rng.normal();
            theta[1 + degree + i] = pim + 0.2 * std::abs(rng.normal());
        }
        LocalFit fit = options.loss == LossKind::mse
                           ? run_lm(packed, theta, omega, target.log_mag, options)
                           : run_gd(packed, theta, omega, target.log_mag, options);
        restart_losses.push_back(fit.loss);
        if (std::isfinite(fit.loss) && fit.loss < best.loss) {
            best = std::move(fit);
            best_restart = restart;
        }
    }

    if (best_restart < 0) {
        std::ostringstream msg;
        msg << "fit_czp: all restarts diverged; losses:";
        for (double l : restart_losses) msg << " " << l;
        fail(Errc::fit_failure, msg.str());
    }

    FitReport report;
    report.model = packed.unpack(best.theta, target.grid.unit);
    report.final_loss = best.loss;
    report.iterations = best.iterations;
    report.restarts_used = options.restarts;
    report.converged = best.converged;
    return report;
}

}  // namespace czp
