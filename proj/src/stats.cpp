#include "resokit/stats.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace resokit {

void LossTimeSeries::validate() const {
    if (timestamps.size() != loss_tangent.size())
        throw StatsError("time series: timestamp and loss counts differ");
    for (double v : loss_tangent)
        if (!(v > 0.0) || !std::isfinite(v))
            throw StatsError("time series: loss tangent must be positive and finite");
}

double lognormal_pdf(double x, double x0, double sigma) {
    if (!(x > 0.0))
        return 0.0;
    const double z = std::log(x / x0) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * constants::pi));
}

double lognormal_cdf(double x, double x0, double sigma) {
    if (!(x > 0.0))
        return 0.0;
    const double d = std::log(x / x0);
    if (sigma == 0.0)
        return d >= 0.0 ? 1.0 : 0.0;
    return 0.5 * std::erfc(-d / (sigma * std::sqrt(2.0)));
}

LogNormalFit fit_lognormal(std::span<const double> samples) {
    if (samples.size() < 30)
        throw StatsError("log-normal fit needs at least 30 samples, got " +
                         std::to_string(samples.size()));
    std::vector<double> logs;
    logs.reserve(samples.size());
    for (double x : samples) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw StatsError("log-normal fit needs positive finite samples");
        logs.push_back(std::log(x));
    }
    const double n = static_cast<double>(logs.size());
    double mu = 0.0;
    for (double l : logs)
        mu += l;
    mu /= n;
    double var = 0.0;
    for (double l : logs)
        var += (l - mu) * (l - mu);
    var /= n;

    LogNormalFit fit;
    fit.x0 = std::exp(mu);
    fit.sigma = std::sqrt(var);
    fit.samples = samples.size();
    // Relative spread below rounding noise counts as a point mass.
    if (fit.sigma < 1e-12 * std::max(1.0, std::abs(mu)))
        fit.sigma = 0.0;

    // A point mass matches its own step CDF exactly.
    if (fit.sigma == 0.0)
        return fit;
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double f = lognormal_cdf(sorted[k], fit.x0, fit.sigma);
        d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
    }
    fit.ks_statistic = d;
    return fit;
}

Histogram histogram(std::span<const double> samples, std::size_t bins, bool log_bins) {
    if (samples.empty() || bins == 0)
        throw StatsError("histogram needs samples and at least one bin");
    auto tx = [log_bins](double v) {
        if (log_bins && !(v > 0.0))
            throw StatsError("logarithmic histogram needs positive samples");
        return log_bins ? std::log(v) : v;
    };
    double lo = tx(samples[0]), hi = lo;
    for (double v : samples) {
        lo = std::min(lo, tx(v));
        hi = std::max(hi, tx(v));
    }
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t k = 0; k <= bins; ++k) {
        const double e = k == bins ? hi : lo + width * static_cast<double>(k);
        h.edges.push_back(log_bins ? std::exp(e) : e);
    }
    for (double v : samples) {
        auto b = static_cast<std::size_t>((tx(v) - lo) / width);
        h.counts[std::min(b, bins - 1)]++;
    }
    return h;
}

namespace {

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1)
        return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

double median_of(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    return median(std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(lo),
                                      x.begin() + static_cast<std::ptrdiff_t>(hi)));
}

} // namespace

std::vector<std::size_t> detect_jumps(const LossTimeSeries& series, const JumpOptions& options) {
    series.validate();
    const std::size_t n = series.loss_tangent.size();
    if (n < 50)
        throw StatsError("jump detection needs at least 50 points, got " + std::to_string(n));
    if (options.window < 3 || options.window % 2 == 0)
        throw StatsError("jump detection window must be odd and at least 3");
    const auto w = static_cast<std::size_t>(options.window);
    if (2 * w > n)
        throw StatsError("series shorter than two detection windows");

    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k)
        y[k] = std::log(series.loss_tangent[k]);

    std::vector<double> resid(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k >= w / 2 ? k - w / 2 : 0;
        const std::size_t hi = std::min(n, k + w / 2 + 1);
        resid[k] = y[k] - median_of(y, lo, hi);
    }
    const double center = median(resid);
    for (double& r : resid)
        r = std::abs(r - center);
    const double scale = 1.4826 * median(resid);
    const double limit = options.threshold * scale;

    std::vector<std::size_t> jumps;
    std::size_t best = 0;
    double best_shift = -1.0;
    for (std::size_t k = w; k + w <= n; ++k) {
        const double shift = std::abs(median_of(y, k, k + w) - median_of(y, k - w, k));
        if (shift > limit) {
            if (shift > best_shift) {
                best_shift = shift;
                best = k;
            }
        } else if (best_shift >= 0.0) {
            jumps.push_back(best);
            best_shift = -1.0;
        }
    }
    if (best_shift >= 0.0)
        jumps.push_back(best);
    return jumps;
}

namespace {

Regression solve_weighted(std::span<const double> x, std::span<const double> y,
                          const std::vector<double>& w, bool scale_by_residuals) {
    if (x.size() != y.size())
        throw StatsError("regression: x and y lengths differ");
    if (x.size() < 3)
        throw StatsError("regression needs at least 3 points");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0))
            throw StatsError("log-log regression needs positive values");
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(y[k]));
    }
    double sw = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sw += w[k];
        mx += w[k] * lx[k];
        my += w[k] * ly[k];
    }
    mx /= sw;
    my /= sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += w[k] * (lx[k] - mx) * (lx[k] - mx);
        sxy += w[k] * (lx[k] - mx) * (ly[k] - my);
        syy += w[k] * (ly[k] - my) * (ly[k] - my);
    }
    if (!(sxx > 1e-300 * sw))
        throw StatsError("regression: all x values are equal");
    Regression r;
    r.points = lx.size();
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double rss = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        const double e = ly[k] - r.intercept - r.slope * lx[k];
        rss += w[k] * e * e;
    }
    r.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    const double s2 = scale_by_residuals ? rss / static_cast<double>(lx.size() - 2) : 1.0;
    r.slope_err = std::sqrt(s2 / sxx);
    r.intercept_err = std::sqrt(s2 * (1.0 / sw + mx * mx / sxx));
    return r;
}

} // namespace

Regression loglog_regression(std::span<const double> x, std::span<const double> y) {
    return solve_weighted(x, y, std::vector<double>(x.size(), 1.0), true);
}

Regression weighted_loglog_regression(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> sigma_ln_y) {
    if (sigma_ln_y.size() != y.size())
        throw StatsError("regression: sigma and y lengths differ");
    std::vector<double> w;
    for (double s : sigma_ln_y) {
        if (!(s > 0.0))
            throw StatsError("regression weights need positive sigma");
        w.push_back(1.0 / (s * s));
    }
    return solve_weighted(x, y, w, false);
}

} // namespace resokit
