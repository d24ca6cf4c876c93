// =============================================================================
// sim.hpp — trajectory generation under the base or tilted environment,
// first-passage runs, perpetuities, and the exact pathwise identities.
//
// Tilting reweights ONLY the environment marginal; offspring totals are
// always drawn from the untilted conditional law given the environment.
// The likelihood ratio of a length-n path against the base measure is then
// a function of the environment walk alone:
//
//     weight = exp(n Lambda(alpha) - alpha S_n).
//
// Passage runs evaluate the likelihood ratio at the (random) stopping index;
// truncated paths carry their truncation-index weight and are flagged so the
// estimators can bound the truncation mass separately.
// =============================================================================
#pragma once

#include "bpre/common.hpp"
#include "bpre/env_model.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bpre {

struct Trajectory {
    std::vector<Population> z;   // Z_0 .. Z_n, Z_0 = 1
    std::vector<double> log_a;   // log A_0 .. log A_{n-1}
    std::vector<double> s;       // S_k = sum_{j<k} log A_j, so Pi_k = e^{S_k}
    std::vector<Population> w_total; // W_k = sum_{j<=k} Z_j
    double weight = 1.0;         // likelihood ratio vs the base measure
    std::optional<double> tilt_alpha;
    bool saturated = false;
};

enum class PassageKind { Z, W };

inline const char* to_string(PassageKind k) { return k == PassageKind::Z ? "Z" : "W"; }

struct PassageRecord {
    double t_threshold = 0.0;
    PassageKind kind = PassageKind::Z;
    std::int64_t T = -1;     // stopping index; meaningful iff finite
    bool finite = false;
    double weight = 1.0;     // likelihood ratio at the stopping/terminal index
    Population terminal = 0; // population at the terminal index
    bool truncated = false;  // n_max reached before passage or extinction
    bool saturated = false;
};

/// Threshold/speed bookkeeping: n = floor(log t / rho) and the fractional
/// part Theta(t) = log t / rho - n, so rho (n + theta) = log t.
struct PassageQuery {
    double log_t = 0.0;
    double rho = 0.0;
    std::int64_t n = 0;
    double theta = 0.0;

    static PassageQuery from(double log_t, double rho) {
        if (!(rho > 0.0)) throw DomainError("PassageQuery: rho must be > 0");
        PassageQuery q;
        q.log_t = log_t;
        q.rho = rho;
        const double x = log_t / rho;
        q.n = static_cast<std::int64_t>(std::floor(x));
        q.theta = x - static_cast<double>(q.n);
        return q;
    }
};

namespace detail {

struct TiltContext {
    const EnvModel* env;      // law to draw the environment from
    double alpha = 0.0;
    double log_lambda = 0.0;  // Lambda(alpha) of the base model
};

inline TiltContext make_context(const EnvModel& base, const TiltedModel* tilted) {
    if (!tilted) return {&base, 0.0, 0.0};
    return {&tilted->tilted, tilted->alpha, tilted->log_lambda};
}

inline Population saturating_add(Population a, Population b) {
    const Population s = a + b;
    return (s < a || s > kPopulationCap) ? kPopulationCap : s;
}

} // namespace detail

inline Trajectory simulate_trajectory(const EnvModel& model, std::int64_t n,
                                      std::optional<double> tilt_alpha, CounterRng& rng) {
    if (n < 0) throw DomainError("simulate_trajectory: n must be >= 0");
    std::optional<TiltedModel> tm;
    if (tilt_alpha) tm = tilt(model, *tilt_alpha);
    const auto ctx = detail::make_context(model, tm ? &*tm : nullptr);

    Trajectory tr;
    tr.tilt_alpha = tilt_alpha;
    tr.z.reserve(n + 1);
    tr.s.reserve(n + 1);
    tr.w_total.reserve(n + 1);
    tr.log_a.reserve(n);
    tr.z.push_back(1);
    tr.s.push_back(0.0);
    tr.w_total.push_back(1);
    for (std::int64_t k = 0; k < n; ++k) {
        const EnvParam a = sample_env_param(*ctx.env, rng);
        const OffspringDraw d = sample_offspring_total(model, a, tr.z.back(), rng);
        tr.saturated = tr.saturated || d.saturated;
        tr.log_a.push_back(std::log(a.a));
        tr.s.push_back(tr.s.back() + tr.log_a.back());
        tr.z.push_back(d.count);
        tr.w_total.push_back(detail::saturating_add(tr.w_total.back(), d.count));
    }
    tr.weight = tilt_alpha
                    ? std::exp(static_cast<double>(n) * ctx.log_lambda - ctx.alpha * tr.s.back())
                    : 1.0;
    return tr;
}

/// Run until Z (or W) strictly exceeds t, the process dies out, or n_max
/// steps elapse.  Extinction ends the run for both kinds: once Z = 0 neither
/// Z nor W can grow again.
inline PassageRecord simulate_until(const EnvModel& model, double t, PassageKind kind,
                                    std::int64_t n_max, std::optional<double> tilt_alpha,
                                    CounterRng& rng) {
    if (!(t > 0.0)) throw DomainError("simulate_until: t must be > 0");
    if (n_max < 1) throw DomainError("simulate_until: n_max must be >= 1");
    std::optional<TiltedModel> tm;
    if (tilt_alpha) tm = tilt(model, *tilt_alpha);
    const auto ctx = detail::make_context(model, tm ? &*tm : nullptr);
    const double alpha = tilt_alpha.value_or(0.0);

    PassageRecord rec;
    rec.t_threshold = t;
    rec.kind = kind;

    Population z = 1;
    Population w = 1;
    double s = 0.0;
    auto weight_at = [&](std::int64_t k) {
        return tilt_alpha ? std::exp(static_cast<double>(k) * ctx.log_lambda - alpha * s) : 1.0;
    };
    if ((kind == PassageKind::Z ? static_cast<double>(z) : static_cast<double>(w)) > t) {
        rec.finite = true;
        rec.T = 0;
        rec.terminal = z;
        rec.weight = 1.0;
        return rec;
    }
    for (std::int64_t k = 1; k <= n_max; ++k) {
        const EnvParam a = sample_env_param(*ctx.env, rng);
        const OffspringDraw d = sample_offspring_total(model, a, z, rng);
        rec.saturated = rec.saturated || d.saturated;
        s += std::log(a.a);
        z = d.count;
        w = detail::saturating_add(w, z);
        const double value = kind == PassageKind::Z ? static_cast<double>(z)
                                                    : static_cast<double>(w);
        if (value > t || d.saturated) {
            rec.finite = true;
            rec.T = k;
            rec.terminal = z;
            rec.weight = weight_at(k);
            return rec;
        }
        if (z == 0) {
            rec.finite = false;
            rec.terminal = 0;
            rec.weight = weight_at(k);
            return rec;
        }
    }
    rec.finite = false;
    rec.truncated = true;
    rec.terminal = z;
    rec.weight = weight_at(n_max);
    return rec;
}

// ── Perpetuities and exact identities ───────────────────────────────────────

/// R_{m,n} = A_m + A_m A_{m+1} + ... + A_m ... A_{n-1} by forward
/// accumulation (n - m summands).
inline double perpetuity(std::span<const double> log_a, std::size_t m, std::size_t n) {
    if (!(m < n) || n > log_a.size()) throw DomainError("perpetuity: need m < n <= path length");
    double prod = 1.0;
    double sum = 0.0;
    for (std::size_t j = m; j < n; ++j) {
        prod *= std::exp(log_a[j]);
        sum += prod;
    }
    return sum;
}

/// Residuals of the three telescoping identities on a realized path, each
/// divided by the magnitude of the terms entering it.  All three are
/// algebraic identities in (A, Z), so the scaled residuals must vanish up to
/// float rounding on every path:
///   (1)  Z_m P(m,n-1) = Z_n + sum_k (A_{k-1} Z_{k-1} - Z_k) P(k,n-1)
///   (2)  Z_n - Z_m P(m,n-1) = sum_k (Z_k - A_{k-1} Z_{k-1}) P(k,n-1)
///   (3)  W_n - W_m = Z_m R_{m,n} + sum_k (Z_k - A_{k-1} Z_{k-1}) (1 + R_{k,n})
/// with P(i,j) = prod_{l=i..j} A_l (empty products = 1) and sums over
/// k = m+1 .. n.
struct IdentityResiduals {
    std::array<double, 3> scaled;
};

inline IdentityResiduals identity_residuals(const Trajectory& tr, std::size_t m, std::size_t n) {
    if (!(m < n) || n >= tr.z.size()) throw DomainError("identity_residuals: need 0 <= m < n within path");
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = std::exp(tr.log_a[k]);

    // pi[k] = P(k, n-1), pi[n] = 1
    std::vector<double> pi(n + 1);
    pi[n] = 1.0;
    for (std::size_t k = n; k-- > m;) pi[k] = a[k] * pi[k + 1];
    // r[k] = R_{k,n}, r[n] = 0
    std::vector<double> r(n + 1);
    r[n] = 0.0;
    for (std::size_t k = n; k-- > m;) r[k] = a[k] * (1.0 + r[k + 1]);

    const double zm = static_cast<double>(tr.z[m]);
    const double zn = static_cast<double>(tr.z[n]);

    double sum1 = 0.0, sum2 = 0.0, sum3 = 0.0;
    double mag1 = std::abs(zm * pi[m]) + std::abs(zn);
    double mag3 = std::abs(zm * r[m]);
    for (std::size_t k = m + 1; k <= n; ++k) {
        const double zk = static_cast<double>(tr.z[k]);
        const double drift = a[k - 1] * static_cast<double>(tr.z[k - 1]);
        sum1 += (drift - zk) * pi[k];
        sum2 += (zk - drift) * pi[k];
        sum3 += (zk - drift) * (1.0 + r[k]);
        mag1 += std::abs((drift - zk) * pi[k]);
        mag3 += std::abs((zk - drift) * (1.0 + r[k]));
    }
    const double w_mn =
        static_cast<double>(tr.w_total[n]) - static_cast<double>(tr.w_total[m]);
    const double res1 = zm * pi[m] - zn - sum1;
    const double res2 = zn - zm * pi[m] - sum2;
    const double res3 = w_mn - zm * r[m] - sum3;
    const double scale1 = std::max(1.0, mag1);
    const double scale3 = std::max(1.0, mag3 + std::abs(w_mn));
    return IdentityResiduals{{res1 / scale1, res2 / scale1, res3 / scale3}};
}

} // namespace bpre
