#pragma once

// Quality-factor extraction for notch-coupled resonators: algebraic circle
// fit, phase-slope initialization, then a joint complex least-squares fit of
// the full notch model including cable delay and environment gain/phase.

#include "resokit/trace.hpp"

#include <span>
#include <vector>

namespace resokit {

struct CircleFit {
    Complex center;
    double radius = 0.0;
    double rms_residual = 0.0;  // RMS of |z − center| − radius
};

/// Pratt algebraic circle fit (uniform weights). Needs at least three
/// non-collinear points; throws FitError otherwise.
CircleFit fit_circle(std::span<const Complex> points);

struct ResonanceFit {
    double f0 = 0.0;
    double ql = 0.0;
    double qc_mag = 0.0;
    double phi = 0.0;
    double qi = 0.0;
    double tau = 0.0;       // seconds
    double amplitude = 0.0;
    double alpha = 0.0;     // radians, wrapped to (−π, π]

    struct Sigma {
        double f0 = 0.0, ql = 0.0, qc_mag = 0.0, phi = 0.0, qi = 0.0;
        double tau = 0.0, amplitude = 0.0, alpha = 0.0;
    } sigma;

    double noise_sigma = 0.0;   // per-quadrature residual standard deviation
    int iterations = 0;
    bool physical = true;

    double delay_ns() const { return tau * 1e9; }
    /// Ql/|Qc|, the diameter of the normalized resonance circle.
    double diameter() const { return ql / qc_mag; }
    NotchParameters parameters() const;
};

struct FitOptions {
    /// Return fits with Qi <= 0 (flagged via `physical`) instead of throwing.
    bool allow_unphysical = false;
    int max_iterations = 200;
    double step_tolerance = 1e-10;
};

ResonanceFit fit_resonance(const S21Trace& trace, const FitOptions& options = {});

struct DelayRemoval {
    S21Trace trace;   // samples multiplied by exp(+2πifτ)
    double tau = 0.0;
};

/// Estimates the cable delay jointly with the resonance and removes it.
/// Throws FitError when no resonance stands out of the noise or when fewer
/// than 10% of the samples lie off resonance.
DelayRemoval remove_delay(const S21Trace& trace);

/// n / Σ 1/Qi. Throws DomainError on empty input or non-positive Qi.
double harmonic_mean_qi(std::span<const ResonanceFit> fits);
double harmonic_mean(std::span<const double> values);

} // namespace resokit
