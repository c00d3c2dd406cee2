#include "resokit/tls.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"
#include "resokit/levmar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resokit {

double thermal_factor(double f, double temperature) {
    return std::tanh(constants::planck * f / (2.0 * constants::boltzmann * temperature));
}

double tls_loss_model(double n_avg, double f, double temperature, const TlsParameters& p) {
    if (!(n_avg >= 0.0))
        throw DomainError("photon number must be non-negative");
    if (!(temperature > 0.0))
        throw DomainError("temperature must be positive");
    const double saturation = std::sqrt(1.0 + std::pow(n_avg / p.n_c, p.beta));
    return p.p_delta_tls * thermal_factor(f, temperature) / saturation + p.delta_e;
}

double TlsFit::sigma(int k) const {
    return std::sqrt(std::max(0.0, covariance(k, k)));
}

TlsFit TlsFit::from_parameters(const TlsParameters& params, const Eigen::Matrix4d& covariance) {
    TlsFit fit;
    fit.params = params;
    fit.covariance = covariance;
    fit.qi0 = 1.0 / params.p_delta_tls;
    fit.qi_high = 1.0 / params.delta_e;
    fit.sigma_qi0 = fit.sigma(0) / (params.p_delta_tls * params.p_delta_tls);
    fit.sigma_qi_high = fit.sigma(3) / (params.delta_e * params.delta_e);
    return fit;
}

namespace {

TlsParameters initial_guess(std::span<const PowerSweepPoint> pts, double n_min, double n_max) {
    double high = 0.0, low = 0.0, low_tanh = 0.0;
    int n_high = 0, n_low = 0;
    for (const auto& p : pts) {
        if (p.n_avg >= n_max / 10.0) {
            high += 1.0 / p.qi;
            ++n_high;
        }
        if (p.n_avg <= n_min * 10.0) {
            low += 1.0 / p.qi;
            low_tanh += thermal_factor(p.f, p.temperature);
            ++n_low;
        }
    }
    TlsParameters g;
    g.delta_e = high / n_high;
    const double low_mean = low / n_low;
    const double tanh_mean = low_tanh / n_low;
    g.p_delta_tls = (low_mean > 1.5 * g.delta_e ? low_mean - g.delta_e : 0.5 * low_mean) / tanh_mean;
    g.n_c = std::sqrt(n_min * n_max);
    g.beta = 0.5;
    return g;
}

} // namespace

TlsFit fit_tls(std::span<const PowerSweepPoint> points, const TlsFitOptions& options) {
    if (points.size() < 6)
        throw DomainError("TLS fit needs at least 6 points, got " + std::to_string(points.size()));
    double n_min = std::numeric_limits<double>::infinity(), n_max = 0.0;
    bool weighted = true;
    for (const auto& p : points) {
        if (!(p.n_avg > 0.0) || !(p.qi > 0.0) || !(p.f > 0.0) || !(p.temperature > 0.0))
            throw DomainError("TLS fit: photon number, Qi, frequency and temperature must be positive");
        n_min = std::min(n_min, p.n_avg);
        n_max = std::max(n_max, p.n_avg);
        weighted = weighted && p.qi_err > 0.0;
    }
    const double decades = std::log10(n_max / n_min);
    if (decades < 2.0)
        throw DynamicRangeError("photon numbers span only " + std::to_string(decades) +
                                " decades; at least 2 are required");

    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd target(m), weight(m), tanh_f(m), n(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& p = points[static_cast<std::size_t>(k)];
        target[k] = 1.0 / p.qi;
        weight[k] = weighted ? p.qi * p.qi / p.qi_err : 1.0;
        tanh_f[k] = thermal_factor(p.f, p.temperature);
        n[k] = p.n_avg;
    }
    const bool logp = options.log_parameters;
    const TlsParameters guess = initial_guess(points, n_min, n_max);
    const Eigen::Vector4d p0(guess.p_delta_tls, guess.n_c, guess.beta, guess.delta_e);
    // The linear variant works in units of the initial guess so that the
    // relative step criterion sees all four parameters on the same footing.
    auto to_linear = [&](const Eigen::VectorXd& q) -> Eigen::Vector4d {
        return logp ? Eigen::Vector4d(q.array().exp()) : Eigen::Vector4d(q.cwiseProduct(p0));
    };

    // Residuals are normalized by the mean target when unweighted so the
    // damping thresholds see numbers of order one.
    const double scale = weighted ? 1.0 : 1.0 / target.mean();
    auto residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        const Eigen::Vector4d p = to_linear(q);
        r.resize(m);
        if ((p.array() <= 0.0).any()) {
            r.setConstant(std::numeric_limits<double>::quiet_NaN());
            return;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            const double model =
                p[0] * tanh_f[k] / std::sqrt(1.0 + std::pow(n[k] / p[1], p[2])) + p[3];
            r[k] = (model - target[k]) * weight[k] * scale;
        }
    };
    auto jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& J) {
        const Eigen::Vector4d p = to_linear(q);
        J.resize(m, 4);
        for (Eigen::Index k = 0; k < m; ++k) {
            const double x = n[k] / p[1];
            const double xb = std::pow(x, p[2]);
            const double s = std::sqrt(1.0 + xb);
            const double tls = p[0] * tanh_f[k] / s;
            // d(tls)/d(xb) = −tls / (2(1 + xb))
            const double dxb = -tls / (2.0 * (1.0 + xb));
            Eigen::Vector4d g(tanh_f[k] / s,
                              dxb * (-p[2] * xb / p[1]),
                              dxb * xb * std::log(x),
                              1.0);
            g = g.cwiseProduct(logp ? p : p0);
            J.row(k) = g.transpose() * weight[k] * scale;
        }
    };

    Eigen::VectorXd q0 = logp ? Eigen::VectorXd(p0.array().log()) : Eigen::VectorXd::Ones(4);
    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.step_tolerance = options.step_tolerance;
    const LmResult res = levenberg_marquardt(residual, jacobian, q0, lm);
    if (!res.converged)
        throw TlsFitError("TLS fit did not converge after " + std::to_string(res.iterations) +
                          " iterations");

    const Eigen::Vector4d p = to_linear(res.params);
    Eigen::Matrix4d cov = res.covariance();
    const Eigen::Vector4d dp_dq = logp ? p : p0;
    cov = dp_dq.asDiagonal() * cov * dp_dq.asDiagonal();
    TlsFit fit = TlsFit::from_parameters({p[0], p[1], p[2], p[3]}, cov);
    fit.rss = res.rss / (scale * scale);
    fit.iterations = res.iterations;
    fit.weighted = weighted;
    if (decades < 3.0)
        fit.warnings.push_back("photon numbers span fewer than 3 decades");
    if (!(p[2] > 0.1 && p[2] <= 1.0))
        fit.warnings.push_back("beta = " + std::to_string(p[2]) + " lies outside (0.1, 1]");
    return fit;
}

} // namespace resokit
