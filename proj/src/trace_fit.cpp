#include "resokit/trace_fit.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"
#include "resokit/levmar.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace resokit {

namespace {

constexpr double two_pi = 2.0 * constants::pi;

double wrap_angle(double a) {
    return std::remainder(a, two_pi);
}

std::vector<double> unwrapped_phase(std::span<const Complex> z) {
    std::vector<double> out(z.size());
    double offset = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double raw = std::arg(z[k]);
        if (k > 0) {
            const double prev = out[k - 1] - offset;
            offset += two_pi * std::round((prev - raw) / two_pi);
        }
        out[k] = raw + offset;
    }
    return out;
}

// Least-squares slope of y on x over [first, last).
double slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t first,
             std::size_t last) {
    const double n = static_cast<double>(last - first);
    double mx = 0.0, my = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

std::size_t baseline_count(std::size_t n) {
    return std::max<std::size_t>(3, n / 10);
}

// Delay from the phase slope of the outer 10% on each side. Biased by the
// resonance tails; only a starting point for the joint fit.
double baseline_delay(const S21Trace& trace) {
    const auto& f = trace.freqs();
    const std::vector<double> phase = unwrapped_phase(trace.s21());
    const std::size_t n = trace.size();
    const std::size_t nb = baseline_count(n);
    const double s = 0.5 * (slope(f, phase, 0, nb) + slope(f, phase, n - nb, n));
    return -s / two_pi;
}

struct Estimate {
    double f0, ql, qc, phi, tau, amplitude, alpha;
};

Estimate initial_estimate(const S21Trace& trace) {
    const auto& f = trace.freqs();
    const std::size_t n = trace.size();
    const double tau = baseline_delay(trace);
    std::vector<Complex> z(n);
    for (std::size_t k = 0; k < n; ++k)
        z[k] = trace.s21()[k] * std::polar(1.0, two_pi * f[k] * tau);

    const CircleFit circle = fit_circle(z);

    const std::size_t nb = baseline_count(n);
    Complex off(0.0, 0.0);
    for (std::size_t k = 0; k < nb; ++k)
        off += z[k] + z[n - 1 - k];
    off /= static_cast<double>(2 * nb);

    std::size_t k_res = 0;
    double dmax = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (const double d = std::abs(z[k] - off); d > dmax) {
            dmax = d;
            k_res = k;
        }
    std::size_t lo = k_res, hi = k_res;
    const double half = 0.5 * dmax * dmax;
    while (lo > 0 && std::norm(z[lo - 1] - off) >= half)
        --lo;
    while (hi + 1 < n && std::norm(z[hi + 1] - off) >= half)
        ++hi;
    const double spacing = (f.back() - f.front()) / static_cast<double>(n - 1);
    const double fwhm = std::max(f[hi] - f[lo] + spacing, 3.0 * spacing);
    const double fr_guess = f[k_res];
    const double ql_guess = fr_guess / fwhm;

    // Phase of the circle-centered samples: θ0 + 2·atan(2Ql(1 − f/fr)).
    std::vector<Complex> centered(n);
    for (std::size_t k = 0; k < n; ++k)
        centered[k] = z[k] - circle.center;
    const std::vector<double> theta = unwrapped_phase(centered);
    const double lw = fr_guess / ql_guess;
    auto phase_residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        const double ql = std::exp(p[1]);
        const double fr = fr_guess + p[2] * lw;
        r.resize(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k)
            r[static_cast<Eigen::Index>(k)] =
                p[0] + 2.0 * std::atan(2.0 * ql * (fr - f[k]) / fr) - theta[k];
    };
    auto phase_jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
        const double ql = std::exp(p[1]);
        const double fr = fr_guess + p[2] * lw;
        J.resize(static_cast<Eigen::Index>(n), 3);
        for (std::size_t k = 0; k < n; ++k) {
            const double y = 2.0 * ql * (fr - f[k]) / fr;
            const double dy = 2.0 / (1.0 + y * y);
            const auto row = static_cast<Eigen::Index>(k);
            J(row, 0) = 1.0;
            J(row, 1) = dy * y;
            J(row, 2) = dy * 2.0 * ql * f[k] / (fr * fr) * lw;
        }
    };
    Eigen::VectorXd p0(3);
    p0 << theta[k_res], std::log(ql_guess), 0.0;
    LmOptions phase_opts;
    phase_opts.step_tolerance = 1e-8;
    const LmResult phase_fit = levenberg_marquardt(phase_residual, phase_jacobian, p0, phase_opts);

    Estimate est{};
    est.f0 = fr_guess + phase_fit.params[2] * lw;
    est.ql = std::exp(phase_fit.params[1]);
    if (!(est.f0 > f.front() && est.f0 < f.back()) || !(est.ql > 0.0) || !std::isfinite(est.ql)) {
        est.f0 = fr_guess;
        est.ql = ql_guess;
    }
    const Complex off_resonant = circle.center + circle.radius * std::polar(1.0, phase_fit.params[0] + constants::pi);
    est.amplitude = std::abs(off_resonant);
    est.alpha = std::arg(off_resonant);
    const Complex center_n = circle.center / off_resonant;
    const double diameter = 2.0 * circle.radius / est.amplitude;
    est.phi = std::arg(1.0 - center_n);
    est.qc = est.ql / std::max(diameter, 1e-6);
    est.tau = tau;
    return est;
}

void check_off_resonance(const S21Trace& trace, double f0, double ql) {
    std::size_t off = 0;
    for (double f : trace.freqs())
        if (std::abs(2.0 * ql * (f - f0) / f0) > 2.0)
            ++off;
    if (10 * off < trace.size())
        throw FitError("fewer than 10% of the samples are off resonance");
}

} // namespace

NotchParameters ResonanceFit::parameters() const {
    return NotchParameters{f0, ql, qc_mag, phi, tau, amplitude, alpha};
}

CircleFit fit_circle(std::span<const Complex> points) {
    const std::size_t n = points.size();
    if (n < 3)
        throw FitError("circle fit needs at least three points");
    Complex mean(0.0, 0.0);
    for (const auto& z : points)
        mean += z;
    mean /= static_cast<double>(n);
    double scale = 0.0;
    for (const auto& z : points)
        scale += std::norm(z - mean);
    scale = std::sqrt(scale / static_cast<double>(n));
    if (!(scale > 1e-12 * std::abs(mean)) || !std::isfinite(scale))
        throw FitError("circle fit: points are coincident");

    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    for (const auto& z : points) {
        const Complex w = (z - mean) / scale;
        Eigen::Vector4d row(std::norm(w), w.real(), w.imag(), 1.0);
        m += row * row.transpose();
    }
    // Pratt constraint A1² + A2² − 4·A0·A3 = 1.
    Eigen::Matrix4d b_inv = Eigen::Matrix4d::Zero();
    b_inv(0, 3) = b_inv(3, 0) = -0.5;
    b_inv(1, 1) = b_inv(2, 2) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(b_inv * m);

    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector4d coef = Eigen::Vector4d::Zero();
    for (int k = 0; k < 4; ++k) {
        if (std::abs(es.eigenvalues()[k].imag()) > 1e-9 * (1.0 + std::abs(es.eigenvalues()[k].real())))
            continue;
        Eigen::Vector4d v = es.eigenvectors().col(k).real();
        const double constraint = v[1] * v[1] + v[2] * v[2] - 4.0 * v[0] * v[3];
        if (!(constraint > 0.0))
            continue;
        const double eta = v.dot(m * v) / constraint;
        if (eta < best) {
            best = eta;
            coef = v / std::sqrt(constraint);
        }
    }
    if (!std::isfinite(best) || std::abs(coef[0]) < 1e-10)
        throw FitError("circle fit: points are collinear");

    const Complex c_scaled(-coef[1] / (2.0 * coef[0]), -coef[2] / (2.0 * coef[0]));
    const double r_scaled = 1.0 / (2.0 * std::abs(coef[0]));
    CircleFit out;
    out.center = mean + scale * c_scaled;
    out.radius = scale * r_scaled;
    double ss = 0.0;
    for (const auto& z : points) {
        const double d = std::abs(z - out.center) - out.radius;
        ss += d * d;
    }
    out.rms_residual = std::sqrt(ss / static_cast<double>(n));
    return out;
}

ResonanceFit fit_resonance(const S21Trace& trace, const FitOptions& options) {
    const Estimate est = initial_estimate(trace);
    const auto& f = trace.freqs();
    const auto& z = trace.s21();
    const std::size_t n = trace.size();
    const double fref = est.f0;
    const double lw = est.f0 / est.ql;
    const double span = f.back() - f.front();

    // q = [f0 offset in linewidths, ln Ql, ln|Qc|, φ, ln a, α at fref, 2π·span·τ]
    auto unpack = [&](const Eigen::VectorXd& q) {
        return NotchParameters{fref + q[0] * lw,          std::exp(q[1]), std::exp(q[2]), q[3],
                               q[6] / (two_pi * span),    std::exp(q[4]), q[5]};
    };
    auto residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        const NotchParameters p = unpack(q);
        r.resize(static_cast<Eigen::Index>(2 * n));
        for (std::size_t k = 0; k < n; ++k) {
            const Complex env = p.amplitude * std::polar(1.0, p.alpha - two_pi * (f[k] - fref) * p.tau);
            const Complex denom(1.0, 2.0 * p.ql * (f[k] - p.f0) / p.f0);
            const Complex s = env * (1.0 - (p.ql / p.qc_mag) * std::polar(1.0, p.phi) / denom);
            const Complex d = s - z[k];
            r[static_cast<Eigen::Index>(2 * k)] = d.real();
            r[static_cast<Eigen::Index>(2 * k + 1)] = d.imag();
        }
    };
    auto jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& J) {
        const NotchParameters p = unpack(q);
        J.resize(static_cast<Eigen::Index>(2 * n), 7);
        const Complex i1(0.0, 1.0);
        for (std::size_t k = 0; k < n; ++k) {
            const Complex b = p.amplitude * std::polar(1.0, p.alpha - two_pi * (f[k] - fref) * p.tau);
            const Complex denom(1.0, 2.0 * p.ql * (f[k] - p.f0) / p.f0);
            const Complex ratio = (p.ql / p.qc_mag) * std::polar(1.0, p.phi) / denom;
            const Complex s = b * (1.0 - ratio);
            const Complex dr_df0 = ratio / denom * (2.0 * i1 * p.ql * f[k] / (p.f0 * p.f0));
            const Complex cols[7] = {
                -b * dr_df0 * lw,
                -b * ratio / denom,
                b * ratio,
                -i1 * b * ratio,
                s,
                i1 * s,
                -i1 * ((f[k] - fref) / span) * s,
            };
            for (int c = 0; c < 7; ++c) {
                J(static_cast<Eigen::Index>(2 * k), c) = cols[c].real();
                J(static_cast<Eigen::Index>(2 * k + 1), c) = cols[c].imag();
            }
        }
    };

    Eigen::VectorXd q0(7);
    q0 << 0.0, std::log(est.ql), std::log(est.qc), est.phi, std::log(est.amplitude),
        wrap_angle(est.alpha - two_pi * fref * est.tau), two_pi * span * est.tau;
    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.step_tolerance = options.step_tolerance;
    const LmResult res = levenberg_marquardt(residual, jacobian, q0, lm);
    if (!res.converged)
        throw FitError("resonance fit did not converge in " + std::to_string(res.iterations) +
                       " iterations");

    const NotchParameters p = unpack(res.params);
    ResonanceFit fit;
    fit.f0 = p.f0;
    fit.ql = p.ql;
    fit.qc_mag = p.qc_mag;
    fit.phi = wrap_angle(p.phi);
    fit.tau = p.tau;
    fit.amplitude = p.amplitude;
    fit.alpha = wrap_angle(p.alpha + two_pi * fref * p.tau);
    fit.iterations = res.iterations;
    const double inv_qi = 1.0 / fit.ql - std::cos(fit.phi) / fit.qc_mag;
    fit.qi = 1.0 / inv_qi;
    fit.physical = inv_qi > 0.0 && std::isfinite(fit.qi);

    const double dof = static_cast<double>(2 * n - 7);
    fit.noise_sigma = std::sqrt(res.rss / dof);
    if (!(fit.f0 > f.front() && fit.f0 < f.back()))
        throw FitError("fitted resonance frequency lies outside the sweep");
    if (fit.diameter() * fit.amplitude < 10.0 * fit.noise_sigma)
        throw FitError("no resonance above the noise floor");
    check_off_resonance(trace, fit.f0, fit.ql);
    if (!fit.physical && !options.allow_unphysical)
        throw FitError("unphysical fit: 1/Qi = " + std::to_string(inv_qi) + " <= 0");

    const Eigen::MatrixXd cov = res.covariance();
    auto sd = [&](const Eigen::VectorXd& g) { return std::sqrt(std::max(0.0, g.dot(cov * g))); };
    Eigen::VectorXd g = Eigen::VectorXd::Zero(7);
    g[0] = lw;
    fit.sigma.f0 = sd(g);
    g.setZero();
    g[1] = fit.ql;
    fit.sigma.ql = sd(g);
    g.setZero();
    g[2] = fit.qc_mag;
    fit.sigma.qc_mag = sd(g);
    g.setZero();
    g[3] = 1.0;
    fit.sigma.phi = sd(g);
    g.setZero();
    g[4] = fit.amplitude;
    fit.sigma.amplitude = sd(g);
    g.setZero();
    g[6] = 1.0 / (two_pi * span);
    fit.sigma.tau = sd(g);
    g.setZero();
    g[5] = 1.0;
    g[6] = fref / span;
    fit.sigma.alpha = sd(g);
    g.setZero();
    const double qi2 = fit.qi * fit.qi;
    g[1] = qi2 / fit.ql;
    g[2] = -qi2 * std::cos(fit.phi) / fit.qc_mag;
    g[3] = -qi2 * std::sin(fit.phi) / fit.qc_mag;
    fit.sigma.qi = sd(g);
    return fit;
}

DelayRemoval remove_delay(const S21Trace& trace) {
    FitOptions opts;
    opts.allow_unphysical = true;
    const ResonanceFit fit = fit_resonance(trace, opts);
    std::vector<Complex> corrected(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k)
        corrected[k] = trace.s21()[k] * std::polar(1.0, two_pi * trace.freqs()[k] * fit.tau);
    return DelayRemoval{S21Trace(trace.freqs(), std::move(corrected), trace.metadata()), fit.tau};
}

double harmonic_mean(std::span<const double> values) {
    if (values.empty())
        throw DomainError("harmonic mean of an empty set");
    double inv = 0.0;
    for (double v : values) {
        if (!(v > 0.0))
            throw DomainError("harmonic mean needs positive values");
        inv += 1.0 / v;
    }
    return static_cast<double>(values.size()) / inv;
}

double harmonic_mean_qi(std::span<const ResonanceFit> fits) {
    std::vector<double> qi;
    qi.reserve(fits.size());
    for (const auto& fit : fits)
        qi.push_back(fit.qi);
    return harmonic_mean(qi);
}

} // namespace resokit
