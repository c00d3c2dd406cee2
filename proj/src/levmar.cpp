#include "resokit/levmar.hpp"

#include <cmath>
#include <utility>

namespace resokit {

Eigen::MatrixXd LmResult::covariance() const {
    const auto m = residuals.size();
    const auto n = params.size();
    const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
    // Column equilibration keeps the rank decision of the pseudo-inverse
    // independent of the parameter units.
    Eigen::VectorXd norms = jacobian.colwise().norm().transpose();
    for (auto& v : norms)
        v = v > 0.0 ? 1.0 / v : 1.0;
    const Eigen::MatrixXd js = jacobian * norms.asDiagonal();
    const Eigen::MatrixXd inv = (js.transpose() * js).completeOrthogonalDecomposition().pseudoInverse();
    return (rss / dof) * norms.asDiagonal() * inv * norms.asDiagonal();
}

LmResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian,
                             Eigen::VectorXd p, const LmOptions& options) {
    Eigen::VectorXd r;
    residual(p, r);
    double rss = r.squaredNorm();
    Eigen::MatrixXd J;
    jacobian(p, J);

    LmResult out;
    double lambda = options.initial_lambda;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Eigen::MatrixXd jtj = J.transpose() * J;
        const Eigen::VectorXd grad = J.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() == 0.0) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);
        bool accepted = false;
        bool tiny_step = false;
        while (lambda < 1e20) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * diag;
            const Eigen::VectorXd step = damped.ldlt().solve(-grad);
            tiny_step = step.norm() <= options.step_tolerance * (p.norm() + options.step_tolerance);
            Eigen::VectorXd trial = p + step;
            Eigen::VectorXd r_trial;
            residual(trial, r_trial);
            const double rss_trial = r_trial.allFinite() ? r_trial.squaredNorm() : INFINITY;
            if (rss_trial < rss) {
                p = std::move(trial);
                r = std::move(r_trial);
                rss = rss_trial;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                break;
            }
            if (tiny_step)
                break;
            lambda *= 10.0;
        }
        if (accepted)
            jacobian(p, J);
        if (tiny_step) {
            out.converged = true;
            ++it;
            break;
        }
        if (!accepted) {
            ++it;
            break;
        }
    }
    out.params = std::move(p);
    out.residuals = std::move(r);
    out.jacobian = std::move(J);
    out.rss = rss;
    out.iterations = it;
    return out;
}

JacobianFn numeric_jacobian(ResidualFn residual, Eigen::VectorXd steps) {
    return [residual = std::move(residual), steps = std::move(steps)](const Eigen::VectorXd& p,
                                                                       Eigen::MatrixXd& J) {
        Eigen::VectorXd rp, rm;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            Eigen::VectorXd q = p;
            const double h = steps[k] * std::max(1.0, std::abs(p[k]));
            q[k] = p[k] + h;
            residual(q, rp);
            q[k] = p[k] - h;
            residual(q, rm);
            if (k == 0)
                J.resize(rp.size(), p.size());
            J.col(k) = (rp - rm) / (2.0 * h);
        }
    };
}

} // namespace resokit
