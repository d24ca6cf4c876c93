// =============================================================================
// estimate.hpp — Monte Carlo estimators with standard errors: rare-event
// probabilities under exponential tilting, first-passage laws, moment-ratio
// constants and the large-deviation prefactor, conditioned passage
// statistics, and tail-index fits.
//
// Tilt selection: fixed-horizon events P[X_n > e^{rho n}] tilt the
// environment at alpha with Lambda'(alpha) = rho; passage and conditioning
// events tilt at the Cramér root alpha0 (lambda(alpha0) = 1).  These are the
// variance-optimal exponential twists for the respective events.
//
// Worker contract: quota w of N paths runs on the counter stream keyed by
// (seed, w); per-worker partial sums are merged in fixed worker order, so
// results are bit-identical for a given (seed, workers, N) regardless of
// scheduling.
//
// stderr of a weighted indicator is the sample standard deviation of the
// per-path weighted contributions divided by sqrt(N); ESS is
// (sum w)^2 / sum w^2 over the nonzero contributions.  Truncated-path weights
// are reported as a separate upper-bound mass, never folded into estimates.
// =============================================================================
#pragma once

#include "bpre/common.hpp"
#include "bpre/env_model.hpp"
#include "bpre/rates.hpp"
#include "bpre/sim.hpp"
#include "bpre/stats.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace bpre {

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    double ess = 0.0;
    double truncated_mass = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t hits = 0;
    std::uint64_t seed = 0;
    std::string method = "naive";
};

enum class LdTarget { Z, Pi, W };
enum class Method { Naive, Tilted };

inline const char* to_string(LdTarget t) {
    switch (t) {
        case LdTarget::Z: return "Z";
        case LdTarget::Pi: return "Pi";
        default: return "W";
    }
}

inline std::string method_label(Method m, double alpha) {
    if (m == Method::Naive) return "naive";
    char buf[64];
    std::snprintf(buf, sizeof buf, "tilted(%.9g)", alpha);
    return buf;
}

namespace detail {

template <typename Acc, typename WorkFn, typename MergeFn>
Acc run_workers(std::uint64_t n_total, unsigned workers, std::uint64_t seed, WorkFn work,
                MergeFn merge) {
    if (workers == 0) workers = 1;
    std::vector<Acc> parts(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto body = [&](unsigned w) {
        try {
            const std::uint64_t quota =
                n_total / workers + (w < n_total % workers ? 1 : 0);
            CounterRng rng(seed, w);
            parts[w] = work(w, quota, rng);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    Acc total{};
    for (auto& p : parts) merge(total, p);
    return total;
}

struct MeanAcc {
    double sum = 0.0;
    double sum2 = 0.0;
    std::uint64_t hits = 0;
    double trunc = 0.0;

    void add(double c, bool hit) {
        sum += c;
        sum2 += c * c;
        hits += hit ? 1 : 0;
    }
    static void merge(MeanAcc& a, const MeanAcc& b) {
        a.sum += b.sum;
        a.sum2 += b.sum2;
        a.hits += b.hits;
        a.trunc += b.trunc;
    }
    Estimate finish(std::uint64_t n, std::uint64_t seed, std::string method) const {
        Estimate e;
        e.n_samples = n;
        e.hits = hits;
        e.seed = seed;
        e.method = std::move(method);
        if (n == 0) return e;
        e.value = sum / static_cast<double>(n);
        if (n > 1) {
            const double var =
                std::max(0.0, (sum2 - static_cast<double>(n) * e.value * e.value) /
                                  static_cast<double>(n - 1));
            e.stderr_ = std::sqrt(var / static_cast<double>(n));
        }
        e.ess = sum2 > 0.0 ? sum * sum / sum2 : 0.0;
        e.truncated_mass = trunc / static_cast<double>(n);
        return e;
    }
};

inline void check_regime_ld(const EnvModel& model, LdTarget target, const RatePack& pack) {
    if (target == LdTarget::Pi) return; // random-walk event, no branching regime needed
    if (!pack.regime_z)
        throw RegimeError("large-deviation regime requires alpha > 1 and lambda(alpha) > lambda(1)");
    if (target == LdTarget::W) {
        if (!pack.above_cramer_root.has_value() || !*pack.above_cramer_root)
            throw RegimeError("W-target requires alpha > alpha0 (Cramér root)");
        if (!(env_log_mean(model) < 0.0))
            throw RegimeError("W-target requires a subcritical model");
    }
}

} // namespace detail

/// Unbiased estimate of P[target_n > e^{rho n}].  Tilted mode draws the
/// environment at alpha = solve_alpha_from_rho(rho) and corrects by
/// exp(n Lambda - alpha S_n).
inline Estimate estimate_ld_prob(const EnvModel& model, LdTarget target, double rho,
                                 std::int64_t n, std::uint64_t n_paths, Method method,
                                 std::uint64_t seed, unsigned workers = 1) {
    if (n < 0) throw DomainError("estimate_ld_prob: n must be >= 0");
    if (n_paths < 1000) throw DomainError("estimate_ld_prob: need N >= 1000");
    const double alpha = solve_alpha_from_rho(model, rho);
    detail::check_regime_ld(model, target, rate_pack(model, alpha));
    const bool tilted = method == Method::Tilted;
    const TiltedModel tm = tilt(model, tilted ? alpha : 0.0);
    const EnvModel& env = tm.tilted;
    const double log_thr = rho * static_cast<double>(n);
    const double thr = std::exp(log_thr);

    auto work = [&](unsigned, std::uint64_t quota, CounterRng& rng) {
        detail::MeanAcc acc;
        for (std::uint64_t p = 0; p < quota; ++p) {
            double s = 0.0;
            bool hit = false;
            if (target == LdTarget::Pi) {
                for (std::int64_t k = 0; k < n; ++k)
                    s += std::log(sample_env_param(env, rng).a);
                hit = s > log_thr;
            } else {
                Population z = 1;
                Population w = 1;
                bool saturated = false;
                for (std::int64_t k = 0; k < n; ++k) {
                    const EnvParam a = sample_env_param(env, rng);
                    const OffspringDraw d = sample_offspring_total(model, a, z, rng);
                    saturated = saturated || d.saturated;
                    s += std::log(a.a);
                    z = d.count;
                    w = detail::saturating_add(w, z);
                }
                const double v = target == LdTarget::Z ? static_cast<double>(z)
                                                       : static_cast<double>(w);
                hit = v > thr || saturated;
            }
            const double weight =
                tilted ? std::exp(static_cast<double>(n) * tm.log_lambda - alpha * s) : 1.0;
            acc.add(hit ? weight : 0.0, hit);
        }
        return acc;
    };
    const auto acc = detail::run_workers<detail::MeanAcc>(n_paths, workers, seed, work,
                                                          detail::MeanAcc::merge);
    return acc.finish(n_paths, seed, method_label(method, tilted ? alpha : 0.0));
}

// ── Exact integer-moment recursions ─────────────────────────────────────────
//
// Conditional cumulants of one offspring given A = a:
//   Poisson:   k1 = a, k2 = a,        k3 = a
//   geometric: k1 = a, k2 = a(1+a),   k3 = a(1+a)(1+2a)
// Summing z individuals multiplies each cumulant by z, which closes the
// moment recursions
//   E[Z_n^2] = l2 E[Z_{n-1}^2] + E[k2(A)] l1^{n-1}
//   E[Z_n^3] = l3 E[Z_{n-1}^3] + 3 E[A k2(A)] E[Z_{n-1}^2] + E[k3(A)] l1^{n-1}
// with l_j = lambda(j).

namespace detail {

struct OffspringCumulants {
    double c2;  // E[k2(A)]
    double c12; // E[A k2(A)]
    double c3;  // E[k3(A)]
};

inline OffspringCumulants offspring_cumulants(const EnvModel& m) {
    const double l1 = env_moment(m, 1.0);
    const double l2 = env_moment(m, 2.0);
    const double l3 = env_moment(m, 3.0);
    if (m.offspring == OffspringFamily::PoissonMean) return {l1, l2, l1};
    // a(1+a) = a + a^2;  a(1+a)(1+2a) = a + 3a^2 + 2a^3
    return {l1 + l2, l2 + l3, l1 + 3.0 * l2 + 2.0 * l3};
}

} // namespace detail

/// Exact series u_k = E[Z_k^alpha] / lambda(norm_alpha)^k for integer
/// alpha in {1,2,3}.  The default normalization is lambda(alpha)^k.
inline std::vector<double> exact_z_moment_series(const EnvModel& m, int alpha,
                                                 std::size_t k_max,
                                                 std::optional<double> norm_alpha = {}) {
    if (alpha < 1 || alpha > 3)
        throw DomainError("exact_z_moment_series: integer alpha in {1,2,3} only");
    const double l1 = env_moment(m, 1.0);
    const double l2 = env_moment(m, 2.0);
    const double l3 = env_moment(m, 3.0);
    const double ln = env_moment(m, norm_alpha.value_or(static_cast<double>(alpha)));
    const auto cum = detail::offspring_cumulants(m);
    std::vector<double> u(k_max + 1);
    double v1 = 1.0; // E[Z_k] / ln^k
    double v2 = 1.0; // E[Z_k^2] / ln^k
    double v3 = 1.0; // E[Z_k^3] / ln^k
    u[0] = 1.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        const double nv2 = (l2 / ln) * v2 + (cum.c2 / ln) * v1;
        const double nv3 = (l3 / ln) * v3 + (3.0 * cum.c12 / ln) * v2 + (cum.c3 / ln) * v1;
        v1 *= l1 / ln;
        v2 = nv2;
        v3 = nv3;
        u[k] = alpha == 1 ? v1 : alpha == 2 ? v2 : v3;
    }
    return u;
}

/// Exact series u_k = E[R_k^alpha] / lambda(alpha)^k for integer alpha in
/// {1,2,3}, where R_k is the environment perpetuity R_{0,k}.  Uses the
/// distributional recursion R_k = A (1 + R_{k-1}).
inline std::vector<double> exact_r_moment_series(const EnvModel& m, int alpha,
                                                 std::size_t k_max) {
    if (alpha < 1 || alpha > 3)
        throw DomainError("exact_r_moment_series: integer alpha in {1,2,3} only");
    const double l1 = env_moment(m, 1.0);
    const double l2 = env_moment(m, 2.0);
    const double l3 = env_moment(m, 3.0);
    const double ln = env_moment(m, static_cast<double>(alpha));
    std::vector<double> u(k_max + 1, 0.0);
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    double lnk = 1.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        const double n3 = l3 * (1.0 + 3.0 * m1 + 3.0 * m2 + m3);
        const double n2 = l2 * (1.0 + 2.0 * m1 + m2);
        const double n1 = l1 * (1.0 + m1);
        m1 = n1;
        m2 = n2;
        m3 = n3;
        lnk *= ln;
        u[k] = (alpha == 1 ? m1 : alpha == 2 ? m2 : m3) / lnk;
    }
    return u;
}

enum class MomentTarget { Z, R };

struct MomentRatioSeries {
    double alpha = 0.0;
    std::string mode;                // "exact-recursion" or "mc"
    std::vector<double> u;           // u_0 .. u_{k_max}
    std::vector<double> u_stderr;    // zeros in exact mode
    double c_limit = 0.0;
};

namespace detail {

inline double aitken_limit(std::span<const double> u) {
    const std::size_t n = u.size();
    if (n < 3) return u.back();
    const double a = u[n - 3], b = u[n - 2], c = u[n - 1];
    const double denom = c - 2.0 * b + a;
    if (std::abs(denom) < 1e-14 * (std::abs(c) + 1.0)) return c;
    return c - (c - b) * (c - b) / denom;
}

inline void check_regime_moment(const EnvModel& m, MomentTarget target, double alpha) {
    if (target == MomentTarget::Z) {
        if (alpha > 1.0 && env_log_moment(m, alpha) <= env_log_moment(m, 1.0))
            throw RegimeError(
                "moment ratio for Z needs lambda(alpha) > lambda(1) when alpha > 1");
    } else {
        const auto root = try_solve_cramer(m);
        if (!root || alpha <= root->alpha0)
            throw RegimeError("moment ratio for R needs alpha > alpha0");
    }
}

} // namespace detail

inline MomentRatioSeries estimate_moment_ratio(const EnvModel& model, MomentTarget target,
                                               double alpha, std::size_t k_max, bool exact,
                                               std::uint64_t n_paths, std::uint64_t seed,
                                               unsigned workers = 1) {
    detail::check_regime_moment(model, target, alpha);
    MomentRatioSeries out;
    out.alpha = alpha;
    if (exact) {
        const int ia = static_cast<int>(std::lround(alpha));
        if (std::abs(alpha - ia) > 1e-9 || ia < 1 || ia > 3)
            throw DomainError("exact moment mode needs integer alpha in {1,2,3}");
        out.mode = "exact-recursion";
        out.u = target == MomentTarget::Z ? exact_z_moment_series(model, ia, k_max)
                                          : exact_r_moment_series(model, ia, k_max);
        out.u_stderr.assign(out.u.size(), 0.0);
        out.c_limit = detail::aitken_limit(out.u);
        return out;
    }
    out.mode = "mc";
    if (n_paths < 2) throw DomainError("estimate_moment_ratio: mc mode needs N >= 2");
    const double log_lam = env_log_moment(model, alpha);
    struct Acc {
        std::vector<double> sum, sum2;
        std::uint64_t n = 0;
    };
    auto work = [&](unsigned, std::uint64_t quota, CounterRng& rng) {
        Acc acc;
        acc.sum.assign(k_max + 1, 0.0);
        acc.sum2.assign(k_max + 1, 0.0);
        acc.n = quota;
        for (std::uint64_t p = 0; p < quota; ++p) {
            if (target == MomentTarget::Z) {
                Population z = 1;
                acc.sum[0] += 1.0;
                acc.sum2[0] += 1.0;
                for (std::size_t k = 1; k <= k_max; ++k) {
                    const EnvParam a = sample_env_param(model, rng);
                    z = sample_offspring_total(model, a, z, rng).count;
                    const double v = std::pow(static_cast<double>(z), alpha);
                    acc.sum[k] += v;
                    acc.sum2[k] += v * v;
                }
            } else {
                double prod = 1.0;
                double r = 0.0;
                for (std::size_t k = 1; k <= k_max; ++k) {
                    prod *= sample_env_param(model, rng).a;
                    r += prod;
                    const double v = std::pow(r, alpha);
                    acc.sum[k] += v;
                    acc.sum2[k] += v * v;
                }
            }
        }
        return acc;
    };
    auto merge = [](Acc& a, const Acc& b) {
        if (a.sum.empty()) {
            a = b;
            return;
        }
        for (std::size_t i = 0; i < a.sum.size(); ++i) {
            a.sum[i] += b.sum[i];
            a.sum2[i] += b.sum2[i];
        }
        a.n += b.n;
    };
    const auto acc = detail::run_workers<Acc>(n_paths, workers, seed, work, merge);
    out.u.resize(k_max + 1);
    out.u_stderr.resize(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) {
        const double scale = std::exp(-static_cast<double>(k) * log_lam);
        const double mean = acc.sum[k] / static_cast<double>(acc.n);
        const double var = std::max(
            0.0, (acc.sum2[k] - static_cast<double>(acc.n) * mean * mean) /
                     static_cast<double>(acc.n - 1));
        out.u[k] = mean * scale;
        out.u_stderr[k] = std::sqrt(var / static_cast<double>(acc.n)) * scale;
    }
    // average of the last three points; the geometric convergence rate makes
    // the remaining bias negligible at the k_max chosen by callers
    const std::size_t last = out.u.size() - 1;
    out.c_limit = (out.u[last] + out.u[last - 1] + out.u[last - 2]) / 3.0;
    return out;
}

/// k_max such that the geometric correction ratio^k drops below `tol`.
inline std::size_t moment_k_max(const EnvModel& m, double alpha, double tol) {
    const double la = env_log_moment(m, alpha);
    const double l1 = env_log_moment(m, 1.0);
    const double lh = env_log_moment(m, alpha / 2.0);
    const double log_ratio = std::max(l1, lh) - la;
    if (!(log_ratio < 0.0)) throw RegimeError("moment_k_max: no geometric convergence");
    const double k = std::log(tol) / log_ratio;
    return static_cast<std::size_t>(std::min(1e5, std::max(8.0, std::ceil(k))));
}

struct PrefactorC1 {
    double value = 0.0;
    double stderr_ = 0.0;
    std::string mode;
    double alpha = 0.0;
    double c_z = 0.0;
};

inline double prefactor_from_parts(double c_z, double alpha, double sigma) {
    return c_z / (alpha * sigma * std::sqrt(2.0 * 3.141592653589793238462643));
}

/// C1(rho) = c_Z(alpha) / (alpha sigma(alpha) sqrt(2 pi)), with the exact
/// recursion when alpha is an integer in {2,3} and Monte Carlo otherwise.
inline PrefactorC1 prefactor_C1(const EnvModel& model, double rho,
                                std::uint64_t mc_paths = 200000, std::uint64_t seed = 0,
                                unsigned workers = 1) {
    const double alpha = solve_alpha_from_rho(model, rho);
    const RatePack pack = rate_pack(model, alpha);
    if (!pack.regime_z)
        throw RegimeError("prefactor_C1 requires alpha > 1 and lambda(alpha) > lambda(1)");
    PrefactorC1 out;
    out.alpha = alpha;
    // 1e-7 sits safely above the root-finder error and below any deliberate
    // non-integer alpha
    const int ia = static_cast<int>(std::lround(alpha));
    if (std::abs(alpha - ia) < 1e-7 && (ia == 2 || ia == 3)) {
        const std::size_t k_max = moment_k_max(model, alpha, 1e-12);
        const auto u = exact_z_moment_series(model, ia, k_max);
        out.mode = "exact-recursion";
        out.c_z = u.back();
        out.value = prefactor_from_parts(out.c_z, alpha, pack.sigma);
        return out;
    }
    const std::size_t k_max = moment_k_max(model, alpha, 1e-3);
    const auto series = estimate_moment_ratio(model, MomentTarget::Z, alpha, k_max, false,
                                              mc_paths, seed, workers);
    out.mode = "mc";
    out.c_z = series.c_limit;
    out.value = prefactor_from_parts(out.c_z, alpha, pack.sigma);
    out.stderr_ = prefactor_from_parts(series.u_stderr.back(), alpha, pack.sigma);
    return out;
}

// ── First-passage estimators ────────────────────────────────────────────────

/// Default horizon for passage runs: under the alpha0 tilt the environment
/// walk drifts at rho0 > 0, so passage happens near log t / rho0; the factor
/// 50 makes the truncated mass negligible and measurable.
inline std::int64_t default_passage_n_max(const EnvModel& model, double log_t) {
    double drift;
    if (const auto root = try_solve_cramer(model)) {
        drift = root->rho0;
    } else {
        drift = std::abs(env_log_mean(model));
    }
    return 50 * static_cast<std::int64_t>(std::ceil(std::max(1.0, log_t / drift)));
}

struct PassagePmf {
    PassageQuery query;
    PassageKind kind = PassageKind::Z;
    double tilt_alpha = 0.0;
    std::int64_t window_lo = 0;
    std::int64_t window_hi = 0;
    std::vector<Estimate> pmf;      // P[T = n] for n in [window_lo, window_hi]
    std::vector<double> cum_below;  // P[T <= n]
    std::vector<double> cum_above;  // P[T >= n, T finite]
    double normalizer = 0.0;        // P[T finite] estimate
    double truncated_mass = 0.0;
    bool truncation_warning = false;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// Weighted estimates of P[T_t = n] across a window of n around n(t),
/// simulated under the tilt at alpha = solve_alpha_from_rho(rho).
inline PassagePmf estimate_passage_pmf(const EnvModel& model, double log_t, PassageKind kind,
                                       double rho, std::int64_t window_lo,
                                       std::int64_t window_hi, std::uint64_t n_paths,
                                       std::uint64_t seed, unsigned workers = 1,
                                       std::optional<std::int64_t> n_max_opt = {}) {
    if (window_lo < 0 || window_hi < window_lo)
        throw DomainError("estimate_passage_pmf: bad window");
    const double alpha = solve_alpha_from_rho(model, rho);
    const RatePack pack = rate_pack(model, alpha);
    if (!pack.regime_z || !(env_log_mean(model) < 0.0))
        throw RegimeError("passage pmf requires alpha > 1, lambda(alpha) > lambda(1), "
                          "and a subcritical model");
    if (kind == PassageKind::W && (!pack.above_cramer_root.has_value() || !*pack.above_cramer_root))
        throw RegimeError("passage pmf for W requires alpha > alpha0");
    const std::int64_t n_max =
        n_max_opt ? *n_max_opt
                  : std::max<std::int64_t>(window_hi + 1, default_passage_n_max(model, log_t));
    const double t = std::exp(log_t);
    const std::size_t width = static_cast<std::size_t>(window_hi - window_lo + 1);

    struct Acc {
        std::vector<double> sum, sum2;
        std::vector<std::uint64_t> hits;
        double below = 0.0, above = 0.0, finite = 0.0, trunc = 0.0;
    };
    auto work = [&](unsigned, std::uint64_t quota, CounterRng& rng) {
        Acc acc;
        acc.sum.assign(width, 0.0);
        acc.sum2.assign(width, 0.0);
        acc.hits.assign(width, 0);
        for (std::uint64_t p = 0; p < quota; ++p) {
            const PassageRecord rec = simulate_until(model, t, kind, n_max, alpha, rng);
            if (rec.truncated) {
                acc.trunc += rec.weight;
                continue;
            }
            if (!rec.finite) continue;
            acc.finite += rec.weight;
            if (rec.T < window_lo) {
                acc.below += rec.weight;
            } else if (rec.T > window_hi) {
                acc.above += rec.weight;
            } else {
                const auto i = static_cast<std::size_t>(rec.T - window_lo);
                acc.sum[i] += rec.weight;
                acc.sum2[i] += rec.weight * rec.weight;
                acc.hits[i] += 1;
            }
        }
        return acc;
    };
    auto merge = [&](Acc& a, const Acc& b) {
        if (a.sum.empty()) {
            a = b;
            return;
        }
        for (std::size_t i = 0; i < a.sum.size(); ++i) {
            a.sum[i] += b.sum[i];
            a.sum2[i] += b.sum2[i];
            a.hits[i] += b.hits[i];
        }
        a.below += b.below;
        a.above += b.above;
        a.finite += b.finite;
        a.trunc += b.trunc;
    };
    const auto acc = detail::run_workers<Acc>(n_paths, workers, seed, work, merge);

    PassagePmf out;
    out.query = PassageQuery::from(log_t, rho);
    out.kind = kind;
    out.tilt_alpha = alpha;
    out.window_lo = window_lo;
    out.window_hi = window_hi;
    out.n_samples = n_paths;
    out.seed = seed;
    const auto dn = static_cast<double>(n_paths);
    out.normalizer = acc.finite / dn;
    out.truncated_mass = acc.trunc / dn;
    out.pmf.resize(width);
    for (std::size_t i = 0; i < width; ++i) {
        detail::MeanAcc m;
        m.sum = acc.sum[i];
        m.sum2 = acc.sum2[i];
        m.hits = acc.hits[i];
        out.pmf[i] = m.finish(n_paths, seed, method_label(Method::Tilted, alpha));
    }
    out.cum_below.resize(width);
    out.cum_above.resize(width);
    double below = acc.below;
    for (std::size_t i = 0; i < width; ++i) {
        below += acc.sum[i];
        out.cum_below[i] = below / dn;
    }
    double above = acc.above;
    for (std::size_t i = width; i-- > 0;) {
        above += acc.sum[i];
        out.cum_above[i] = above / dn;
    }
    out.truncation_warning = out.truncated_mass > 1e-3 * std::max(out.normalizer, 1e-300);
    return out;
}

/// Weighted P[T_t < infinity] from alpha0-tilted passage runs (tail points
/// for the sup-Z and total-population laws).
inline Estimate estimate_passage_tail(const EnvModel& model, double log_t, PassageKind kind,
                                      std::uint64_t n_paths, std::uint64_t seed,
                                      unsigned workers = 1,
                                      std::optional<std::int64_t> n_max_opt = {}) {
    const CramerRoot root = solve_cramer(model);
    const std::int64_t n_max = n_max_opt ? *n_max_opt : default_passage_n_max(model, log_t);
    const double t = std::exp(log_t);
    auto work = [&](unsigned, std::uint64_t quota, CounterRng& rng) {
        detail::MeanAcc acc;
        for (std::uint64_t p = 0; p < quota; ++p) {
            const PassageRecord rec = simulate_until(model, t, kind, n_max, root.alpha0, rng);
            if (rec.truncated) {
                acc.trunc += rec.weight;
                acc.add(0.0, false);
            } else {
                acc.add(rec.finite ? rec.weight : 0.0, rec.finite);
            }
        }
        return acc;
    };
    const auto acc = detail::run_workers<detail::MeanAcc>(n_paths, workers, seed, work,
                                                          detail::MeanAcc::merge);
    return acc.finish(n_paths, seed, method_label(Method::Tilted, root.alpha0));
}

// ── Conditioned passage statistics ──────────────────────────────────────────

struct WeightedSample {
    std::vector<double> values;
    std::vector<double> weights;
    double normalizer = 0.0; // estimate of the conditioning probability
};

struct ConditionedSummary {
    double mean_ratio = 0.0; // weighted mean of T / log t
    double ks = 0.0;         // weighted KS of standardized T against N(0,1)
};

/// Summary statistics of a weighted conditioned sample of passage times.
/// Standardization: (T - log t / rho0) / (sigma0 rho0^{-3/2} sqrt(log t)).
inline ConditionedSummary summarize_conditioned(const WeightedSample& sample, double log_t,
                                                const CramerRoot& root) {
    if (sample.values.empty())
        throw DomainError("summarize_conditioned: empty sample");
    ConditionedSummary s;
    double wsum = 0.0, tsum = 0.0;
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        wsum += sample.weights[i];
        tsum += sample.weights[i] * sample.values[i];
    }
    s.mean_ratio = tsum / (wsum * log_t);
    const double scale = root.sigma0 * std::pow(root.rho0, -1.5) * std::sqrt(log_t);
    std::vector<double> std_values(sample.values.size());
    for (std::size_t i = 0; i < sample.values.size(); ++i)
        std_values[i] = (sample.values[i] - log_t / root.rho0) / scale;
    s.ks = weighted_ks_normal(std_values, sample.weights);
    return s;
}

struct ConditionedPassageStats {
    WeightedSample sample;
    ConditionedSummary summary;
    CramerRoot root;
    double truncated_mass = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// alpha0-tilted passage runs for T_t^W, keeping the weighted sample of T on
/// the finite-passage event.
inline ConditionedPassageStats conditioned_passage_stats(const EnvModel& model, double log_t,
                                                         std::uint64_t n_paths,
                                                         std::uint64_t seed,
                                                         unsigned workers = 1,
                                                         std::optional<std::int64_t> n_max_opt = {}) {
    const CramerRoot root = solve_cramer(model);
    if (root.alpha0 <= 1.0)
        throw RegimeError("conditioned passage statistics need alpha0 > 1");
    const std::int64_t n_max = n_max_opt ? *n_max_opt : default_passage_n_max(model, log_t);
    const double t = std::exp(log_t);
    struct Acc {
        std::vector<double> values, weights;
        double trunc = 0.0;
    };
    auto work = [&](unsigned, std::uint64_t quota, CounterRng& rng) {
        Acc acc;
        for (std::uint64_t p = 0; p < quota; ++p) {
            const PassageRecord rec =
                simulate_until(model, t, PassageKind::W, n_max, root.alpha0, rng);
            if (rec.truncated) {
                acc.trunc += rec.weight;
            } else if (rec.finite) {
                acc.values.push_back(static_cast<double>(rec.T));
                acc.weights.push_back(rec.weight);
            }
        }
        return acc;
    };
    auto merge = [](Acc& a, const Acc& b) {
        a.values.insert(a.values.end(), b.values.begin(), b.values.end());
        a.weights.insert(a.weights.end(), b.weights.begin(), b.weights.end());
        a.trunc += b.trunc;
    };
    auto acc = detail::run_workers<Acc>(n_paths, workers, seed, work, merge);

    ConditionedPassageStats out;
    out.root = root;
    out.n_samples = n_paths;
    out.seed = seed;
    out.sample.values = std::move(acc.values);
    out.sample.weights = std::move(acc.weights);
    double wsum = 0.0;
    for (double w : out.sample.weights) wsum += w;
    out.sample.normalizer = wsum / static_cast<double>(n_paths);
    out.truncated_mass = acc.trunc / static_cast<double>(n_paths);
    out.summary = summarize_conditioned(out.sample, log_t, root);
    return out;
}

// ── Tail-index fit ──────────────────────────────────────────────────────────

/// Least-squares fit of log P against log t; the slope estimates the tail
/// exponent (-alpha0 for passage tails).
inline LineFit tail_index_fit(std::span<const std::pair<double, double>> points) {
    if (points.size() < 4) throw DomainError("tail_index_fit: need >= 4 grid points");
    std::vector<double> x(points.size()), y(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].first > 0.0) || !(points[i].second > 0.0))
            throw DomainError("tail_index_fit: t and P must be positive");
        x[i] = std::log(points[i].first);
        y[i] = std::log(points[i].second);
    }
    return fit_line(x, y);
}

/// One-sided sanity envelope for P[W_N > e^M]:
///   c N^{2(alpha+1)} exp{ -M(alpha+eps) + N Lambda(alpha) + N rho eps + c N eps^2 }.
/// The constant c = 1 was calibrated once against the canonical models and
/// frozen; the polynomial factor keeps the bound far above every estimate.
inline double chebyshev_w_bound(const EnvModel& model, double alpha, double eps,
                                double n_steps, double log_threshold, double c = 1.0) {
    const double lam = env_log_moment(model, alpha);
    const double rho = rate_pack(model, alpha).rho;
    return c * std::pow(n_steps, 2.0 * (alpha + 1.0)) *
           std::exp(-log_threshold * (alpha + eps) + n_steps * lam + n_steps * rho * eps +
                    c * n_steps * eps * eps);
}

} // namespace bpre
