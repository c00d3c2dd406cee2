#pragma once

// Power-dependent intrinsic loss of a resonator limited by saturable two-level
// systems plus a power-independent background:
//   1/Qi = p·δ_TLS · tanh(hf/2kT) / sqrt(1 + (n/n_c)^β) + δ_e

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace resokit {

struct PowerSweepPoint {
    double n_avg = 0.0;
    double qi = 0.0;
    double qi_err = 0.0;        // 0 when unknown
    double f = 0.0;             // Hz
    double temperature = 0.01;  // K
};

struct TlsParameters {
    double p_delta_tls = 0.0;
    double n_c = 0.0;
    double beta = 0.0;
    double delta_e = 0.0;
};

/// tanh(hf / 2kT).
double thermal_factor(double f, double temperature);

/// 1/Qi at mean photon number n_avg. Requires n_avg >= 0 and T > 0.
double tls_loss_model(double n_avg, double f, double temperature, const TlsParameters& p);

struct TlsFit {
    TlsParameters params;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // order: pδ, n_c, β, δ_e
    double qi0 = 0.0;       // 1 / p·δ_TLS
    double qi_high = 0.0;   // 1 / δ_e
    double sigma_qi0 = 0.0;
    double sigma_qi_high = 0.0;
    double rss = 0.0;
    int iterations = 0;
    bool weighted = false;
    std::vector<std::string> warnings;

    double sigma(int k) const;

    /// Fills qi0, qi_high and their delta-method uncertainties from the
    /// parameters and covariance.
    static TlsFit from_parameters(const TlsParameters& params,
                                  const Eigen::Matrix4d& covariance = Eigen::Matrix4d::Zero());
};

struct TlsFitOptions {
    /// Optimize log(parameters), which keeps them positive. The linear-space
    /// variant rejects steps that leave the positive orthant instead.
    bool log_parameters = true;
    int max_iterations = 200;
    double step_tolerance = 1e-10;
};

/// Weighted nonlinear least squares on 1/Qi. Weights are 1/σ(1/Qi)² when
/// every point carries qi_err > 0, uniform otherwise.
///
/// Throws DomainError for fewer than 6 points or non-positive n/Qi,
/// DynamicRangeError when n_avg spans less than two decades and TlsFitError
/// when the optimizer does not converge. A span between two and three decades
/// is fitted but reported in `warnings`, as is β outside (0.1, 1].
TlsFit fit_tls(std::span<const PowerSweepPoint> points, const TlsFitOptions& options = {});

} // namespace resokit
