#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace resokit {

struct LossTimeSeries {
    std::vector<double> timestamps;    // s
    std::vector<double> loss_tangent;  // 1/Qi, strictly positive

    /// Throws StatsError on length mismatch or non-positive loss values.
    void validate() const;
};

/// Standard log-normal density, exp(−ln²(x/x0) / 2σ²) / (xσ√(2π)).
double lognormal_pdf(double x, double x0, double sigma);
double lognormal_cdf(double x, double x0, double sigma);

struct LogNormalFit {
    double x0 = 0.0;
    double sigma = 0.0;
    double ks_statistic = 0.0;  // sup |F_empirical − F_fitted|
    std::size_t samples = 0;
};

/// Maximum-likelihood fit: ln x0 = mean(ln x), σ² = mean((ln x − ln x0)²).
/// Needs at least 30 strictly positive samples (StatsError otherwise).
/// Identical samples give σ = 0.
LogNormalFit fit_lognormal(std::span<const double> samples);

struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max], or equal widths in ln x when `log_bins`.
Histogram histogram(std::span<const double> samples, std::size_t bins, bool log_bins = false);

struct JumpOptions {
    double threshold = 6.0;
    int window = 21;  // odd
};

/// Indices where the level of ln(loss) steps by more than threshold × MAD.
///
/// The scale is the MAD (×1.4826) of the residuals about a centered running
/// median. The step statistic at k compares the medians of the `window`
/// samples before and from k. Each contiguous run of exceedances yields one
/// change point, at the run's maximum. Needs at least 50 points.
std::vector<std::size_t> detect_jumps(const LossTimeSeries& series, const JumpOptions& options = {});

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_err = 0.0;
    double intercept_err = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares of ln y on ln x; standard errors from the residual
/// variance with n − 2 degrees of freedom.
Regression loglog_regression(std::span<const double> x, std::span<const double> y);

/// Weighted least squares of ln y on ln x with weights 1/σ², where σ is the
/// standard error of ln y (σ_y / y). Errors are taken from (XᵀWX)⁻¹.
Regression weighted_loglog_regression(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> sigma_ln_y);

} // namespace resokit
