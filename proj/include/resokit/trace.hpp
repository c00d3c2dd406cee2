#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace resokit {

using Complex = std::complex<double>;

struct TraceMetadata {
    std::string label;
    std::string timestamp;
    double power_dbm = 0.0;
    bool has_power = false;
};

/// Complex transmission samples of one frequency sweep.
///
/// Construction validates the samples (equal lengths, at least 32 points,
/// finite values, strictly monotone frequencies) and stores them in
/// increasing-frequency order, so a reversed sweep becomes an ordinary one.
class S21Trace {
public:
    using Metadata = TraceMetadata;

    static constexpr std::size_t min_points = 32;

    S21Trace() = default;
    S21Trace(std::vector<double> freqs, std::vector<Complex> s21, Metadata meta = {});

    const std::vector<double>& freqs() const { return freqs_; }
    const std::vector<Complex>& s21() const { return s21_; }
    const Metadata& metadata() const { return meta_; }
    Metadata& metadata() { return meta_; }
    std::size_t size() const { return freqs_.size(); }

private:
    std::vector<double> freqs_;
    std::vector<Complex> s21_;
    Metadata meta_;
};

/// Notch-port resonator seen through a cable with delay and gain:
/// S21(f) = a·e^{iα}·e^{−2πifτ}·[1 − (Ql/|Qc|)·e^{iφ} / (1 + 2iQl(f/f0 − 1))].
struct NotchParameters {
    double f0 = 0.0;
    double ql = 0.0;
    double qc_mag = 0.0;
    double phi = 0.0;
    double tau = 0.0;
    double amplitude = 1.0;
    double alpha = 0.0;

    /// 1/Qi = 1/Ql − cos(φ)/|Qc|.
    double qi() const;
};

Complex notch_s21(const NotchParameters& p, double f);

/// Uniform sweep of `points` samples over f0 ± half_span_linewidths·f0/Ql with
/// complex Gaussian noise of per-quadrature standard deviation
/// a·10^(−snr_db/20). Deterministic for a given seed.
S21Trace synthesize_notch_trace(const NotchParameters& p, double half_span_linewidths,
                                std::size_t points, double snr_db, std::uint64_t seed);

} // namespace resokit
