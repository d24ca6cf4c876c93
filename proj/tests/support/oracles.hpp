// =============================================================================
// oracles.hpp — test-only reference implementations, independent of the
// library code paths they are used to check.
//
//   - Gauss-Hermite quadrature (moment oracle for lognormal environments)
//   - regularized incomplete gamma -> chi-square survival function
//   - one- and two-sample chi-square tests on count data
//   - naive offspring-sum sampling (sum of z individual draws)
//   - central differences (derivative oracle for the rate calculus)
// =============================================================================
#pragma once

#include <bpre/env_model.hpp>
#include <bpre/random.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace oracles {

// ── Gauss-Hermite quadrature: int e^{-x^2} f(x) dx ≈ sum w_i f(x_i) ─────────

inline void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const double pi4 = std::pow(3.14159265358979323846, -0.25);
    const int m = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[i - 2];
        for (int it = 0; it < 200; ++it) {
            double p1 = pi4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
}

/// E[A^alpha] for log A ~ Normal(mu, s2), by 64-node Gauss-Hermite.
inline double lognormal_moment_gh(double mu, double s2, double alpha) {
    std::vector<double> x, w;
    gauss_hermite(64, x, w);
    const double s = std::sqrt(s2);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += w[i] * std::exp(alpha * (mu + std::sqrt(2.0) * s * x[i]));
    return sum / std::sqrt(3.14159265358979323846);
}

// ── Incomplete gamma and chi-square ──────────────────────────────────────────

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

/// Q(a, x) = 1 - P(a, x), the regularized upper incomplete gamma.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_contfrac(a, x);
}

/// Survival function of the chi-square law with k degrees of freedom.
inline double chi2_sf(double x, double k) { return gamma_q(0.5 * k, 0.5 * x); }

/// One-sample chi-square p-value of observed counts against expected counts
/// (same length, tails pre-merged by the caller so that expected >= ~5).
inline double chi2_gof_pvalue(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i)
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    return chi2_sf(stat, static_cast<double>(observed.size() - 1));
}

/// Two-sample chi-square on count histograms (bins merged so both totals per
/// bin stay above min_count).
inline double chi2_two_sample_pvalue(const std::map<std::uint64_t, std::uint64_t>& h1,
                                     const std::map<std::uint64_t, std::uint64_t>& h2,
                                     double min_count = 10.0) {
    std::map<std::uint64_t, std::pair<double, double>> joint;
    for (const auto& [k, v] : h1) joint[k].first += static_cast<double>(v);
    for (const auto& [k, v] : h2) joint[k].second += static_cast<double>(v);
    // merge adjacent bins until each merged bin carries enough mass
    std::vector<std::pair<double, double>> bins;
    double a = 0.0, b = 0.0;
    for (const auto& [k, v] : joint) {
        a += v.first;
        b += v.second;
        if (a + b >= min_count) {
            bins.emplace_back(a, b);
            a = b = 0.0;
        }
    }
    if (a + b > 0.0) {
        if (bins.empty()) bins.emplace_back(a, b);
        else {
            bins.back().first += a;
            bins.back().second += b;
        }
    }
    double n1 = 0.0, n2 = 0.0;
    for (const auto& [x, y] : bins) {
        n1 += x;
        n2 += y;
    }
    const double k1 = std::sqrt(n2 / n1), k2 = std::sqrt(n1 / n2);
    double stat = 0.0;
    std::size_t dof = 0;
    for (const auto& [x, y] : bins) {
        if (x + y <= 0.0) continue;
        stat += (k1 * x - k2 * y) * (k1 * x - k2 * y) / (x + y);
        ++dof;
    }
    return chi2_sf(stat, static_cast<double>(dof - 1));
}

// ── Naive samplers (law oracles for the aggregated draws) ───────────────────

/// Sum of z individual offspring draws, one at a time.
inline std::uint64_t naive_offspring_sum(const bpre::EnvModel& m, double a, std::uint64_t z,
                                         bpre::CounterRng& rng) {
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < z; ++i) {
        if (m.offspring == bpre::OffspringFamily::PoissonMean) {
            total += rng.poisson(a);
        } else {
            // geometric on {0,1,...} with success probability 1/(1+a)
            const double q = a / (1.0 + a);
            const double u = rng.uniform01_pos();
            total += static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(q)));
        }
    }
    return total;
}

// ── Derivative oracles ───────────────────────────────────────────────────────

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_diff2(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// Bisection for E[A^a] = 1 on a closed-form finite table (Cramér-root
/// oracle).
inline double cramer_root_bisect(const std::vector<double>& p, const std::vector<double>& a,
                                 double lo, double hi, double tol = 1e-10) {
    auto lambda = [&](double alpha) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::pow(a[i], alpha);
        return s - 1.0;
    };
    if (lambda(lo) >= 0.0 || lambda(hi) <= 0.0)
        throw std::invalid_argument("cramer_root_bisect: bad bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (lambda(mid) <= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oracles
