#include "resokit/trace.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace resokit {

S21Trace::S21Trace(std::vector<double> freqs, std::vector<Complex> s21, Metadata meta)
    : freqs_(std::move(freqs)), s21_(std::move(s21)), meta_(std::move(meta)) {
    if (freqs_.size() != s21_.size())
        throw DomainError("S21 trace: frequency and sample counts differ");
    if (freqs_.size() < min_points)
        throw DomainError("S21 trace: need at least 32 points, got " + std::to_string(freqs_.size()));
    for (std::size_t k = 0; k < freqs_.size(); ++k)
        if (!std::isfinite(freqs_[k]) || !std::isfinite(s21_[k].real()) ||
            !std::isfinite(s21_[k].imag()))
            throw DomainError("S21 trace: non-finite entry at index " + std::to_string(k));
    if (freqs_.front() > freqs_.back()) {
        std::reverse(freqs_.begin(), freqs_.end());
        std::reverse(s21_.begin(), s21_.end());
    }
    for (std::size_t k = 1; k < freqs_.size(); ++k)
        if (!(freqs_[k] > freqs_[k - 1]))
            throw DomainError("S21 trace: frequencies must be strictly monotone");
}

double NotchParameters::qi() const {
    return 1.0 / (1.0 / ql - std::cos(phi) / qc_mag);
}

Complex notch_s21(const NotchParameters& p, double f) {
    const Complex env = p.amplitude * std::polar(1.0, p.alpha - 2.0 * constants::pi * f * p.tau);
    const Complex denom(1.0, 2.0 * p.ql * (f - p.f0) / p.f0);
    return env * (1.0 - (p.ql / p.qc_mag) * std::polar(1.0, p.phi) / denom);
}

S21Trace synthesize_notch_trace(const NotchParameters& p, double half_span_linewidths,
                                std::size_t points, double snr_db, std::uint64_t seed) {
    const double half_span = half_span_linewidths * p.f0 / p.ql;
    const double sigma = p.amplitude * std::pow(10.0, -snr_db / 20.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> freqs(points);
    std::vector<Complex> s21(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double f = p.f0 - half_span + 2.0 * half_span * static_cast<double>(k) /
                                                  static_cast<double>(points - 1);
        freqs[k] = f;
        const double nr = noise(rng);
        const double ni = noise(rng);
        s21[k] = notch_s21(p, f) + sigma * Complex(nr, ni);
    }
    return S21Trace(std::move(freqs), std::move(s21), {"synthetic", "", 0.0, false});
}

} // namespace resokit
