#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace resokit {

/// Residual callback: fills `r` for parameters `p`.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)>;
/// Jacobian callback: fills `J` (rows = residuals, cols = parameters).
using JacobianFn = std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& J)>;

struct LmOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;   // relative parameter step
    double initial_lambda = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;   // at the returned parameters
    double rss = 0.0;           // Σ r²
    int iterations = 0;
    bool converged = false;

    /// s²·(JᵀJ)⁻¹ with s² = rss / (m − n).
    Eigen::MatrixXd covariance() const;
};

/// Damped Gauss–Newton with Marquardt diagonal scaling. Converged means the
/// last (accepted or rejected) step was below `step_tolerance` relative to the
/// parameter norm; `converged` is false when the iteration budget ran out or
/// no finite descent step could be found.
LmResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian,
                             Eigen::VectorXd p0, const LmOptions& options = {});

/// Central-difference Jacobian, used where an analytic one is not worth it.
JacobianFn numeric_jacobian(ResidualFn residual, Eigen::VectorXd steps);

} // namespace resokit
