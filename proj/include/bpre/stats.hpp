// =============================================================================
// stats.hpp — small statistics helpers: normal CDF, weighted
// Kolmogorov-Smirnov distance, and least-squares line fits.
// =============================================================================
#pragma once

#include "bpre/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace bpre {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// sup_x |F_w(x) - Phi(x)| where F_w is the weighted empirical CDF with
/// weights normalized over the sample.  No smoothing.
inline double weighted_ks_normal(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty())
        throw DomainError("weighted_ks_normal: empty or mismatched sample");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw DomainError("weighted_ks_normal: weights must be finite and positive");
        total += w;
    }
    double cum = 0.0;
    double d = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        const double x = values[idx[i]];
        const double before = cum / total;
        // advance over ties so the empirical CDF jumps once per atom
        while (i < idx.size() && values[idx[i]] == x) {
            cum += weights[idx[i]];
            ++i;
        }
        const double after = cum / total;
        const double f = normal_cdf(x);
        d = std::max(d, std::max(std::abs(before - f), std::abs(after - f)));
    }
    return d;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
};

/// Ordinary least squares y = a + b x with residual-based standard errors.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw DomainError("fit_line: need >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit_line: degenerate grid");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ss += r * r;
        }
        const double s2 = ss / static_cast<double>(n - 2);
        f.slope_stderr = std::sqrt(s2 / sxx);
        f.intercept_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    }
    return f;
}

} // namespace bpre
