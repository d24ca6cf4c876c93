// =============================================================================
// rates.hpp — rate calculus of the environment walk S_n = sum log A_k.
//
//   lambda(alpha) = E[A^alpha]          Lambda = log lambda
//   rho(alpha)    = Lambda'(alpha)      sigma(alpha) = sqrt(Lambda'')
//   Lambda*(x)    = sup_s { s x - Lambda(s) }     (Legendre transform)
//   alpha_bar     = alpha - Lambda(alpha)/rho(alpha)
//
// alpha_bar is the decay exponent on the t-scale (the tangent line to Lambda
// at alpha crosses the x-axis at alpha_bar); rho * alpha_bar = Lambda*(rho)
// is the n-scale rate.  The Cramér root alpha0 solves lambda(alpha0) = 1.
//
// Derivatives are analytic for both model families; central differences are
// kept only as a test oracle.  Root finding is bracketing bisection with a
// Newton polish; Lambda' is strictly increasing, so this needs no tuning.
// =============================================================================
#pragma once

#include "bpre/common.hpp"
#include "bpre/env_model.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace bpre {

struct RatePack {
    double alpha = 0.0;
    double lambda = 1.0;     // lambda(alpha)
    double log_lambda = 0.0; // Lambda(alpha)
    double rho = 0.0;        // Lambda'(alpha)
    double sigma = 0.0;      // sqrt(Lambda''(alpha))
    double alpha_bar = 0.0;  // alpha - Lambda/rho
    double rate_t = 0.0;     // t-scale rate, = alpha_bar
    double rate_n = 0.0;     // n-scale rate, = alpha*rho - Lambda = rho*alpha_bar
    // regime flags consumed by the estimators and experiments
    bool regime_z = false;                  // alpha > 1 and lambda(alpha) > lambda(1)
    std::optional<bool> above_cramer_root;  // alpha > alpha0, when alpha0 exists
};

struct DomainInfo {
    double alpha_inf = std::numeric_limits<double>::infinity();
    double alpha_min = 0.0; // argmin lambda; +inf when lambda is decreasing on [0, inf)
    double rho_inf = std::numeric_limits<double>::infinity();
};

struct CramerRoot {
    double alpha0 = 0.0;
    double rho0 = 0.0;   // rho(alpha0)
    double sigma0 = 0.0; // sigma(alpha0); lambda(alpha0) = 1 so this is the CLT scale
};

namespace detail {

inline double rho_of(const EnvModel& m, double alpha) {
    return log_power_moment(m, alpha, 1) / log_power_moment(m, alpha, 0);
}

inline double sigma2_of(const EnvModel& m, double alpha) {
    const double m0 = log_power_moment(m, alpha, 0);
    const double r = log_power_moment(m, alpha, 1) / m0;
    return log_power_moment(m, alpha, 2) / m0 - r * r;
}

/// Solve f(x) = target on a bracket [lo, hi] with f(lo) <= target <= f(hi):
/// safeguarded Newton that falls back to bisection whenever the Newton step
/// leaves the bracket.  Converges to machine precision.
template <typename F, typename DF>
double solve_increasing(F f, DF df, double lo, double hi, double target) {
    if (f(lo) - target > 0.0 || f(hi) - target < 0.0)
        throw NoRootError("solve_increasing: bracket lost");
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 120; ++it) {
        const double g = f(x) - target;
        if (g == 0.0) return x;
        (g < 0.0 ? lo : hi) = x;
        const double d = df(x);
        double nx = d > 0.0 ? x - g / d : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::abs(nx - x) <= 1e-15 * (1.0 + std::abs(x))) return nx;
        x = nx;
    }
    return x;
}

} // namespace detail

inline DomainInfo domain_info(const EnvModel& m);
inline std::optional<CramerRoot> try_solve_cramer(const EnvModel& m);

inline RatePack rate_pack(const EnvModel& m, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw DomainError("rate_pack: alpha must be in (0, alpha_inf)");
    RatePack p;
    p.alpha = alpha;
    p.log_lambda = env_log_moment(m, alpha);
    p.lambda = std::exp(p.log_lambda);
    p.rho = detail::rho_of(m, alpha);
    p.sigma = std::sqrt(std::max(0.0, detail::sigma2_of(m, alpha)));
    p.alpha_bar = alpha - p.log_lambda / p.rho;
    p.rate_t = p.alpha_bar;
    p.rate_n = alpha * p.rho - p.log_lambda;
    p.regime_z = alpha > 1.0 && p.log_lambda > env_log_moment(m, 1.0);
    if (auto cr = try_solve_cramer(m)) p.above_cramer_root = alpha > cr->alpha0;
    return p;
}

/// alpha with Lambda'(alpha) = rho, to 1e-10 relative tolerance.
inline double solve_alpha_from_rho(const EnvModel& m, double rho) {
    if (!(rho > env_log_mean(m)))
        throw NoRootError("solve_alpha_from_rho: rho at or below E[log A]");
    double lo = 1e-9;
    double hi = 1.0;
    int grow = 0;
    while (detail::rho_of(m, hi) <= rho) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 60 || detail::rho_of(m, hi) <= detail::rho_of(m, lo) + 1e-15)
            throw NoRootError("solve_alpha_from_rho: rho outside attainable range");
    }
    return detail::solve_increasing([&](double a) { return detail::rho_of(m, a); },
                                    [&](double a) { return detail::sigma2_of(m, a); }, lo, hi,
                                    rho);
}

/// Fenchel-Legendre transform Lambda*(x) on (E[log A], rho_inf).  Outside
/// that range the transform is not attained at a finite tilt; callers only
/// ever work at x = rho(alpha) points, so this is a domain error, not +inf.
inline double legendre(const EnvModel& m, double x) {
    const double drift = env_log_mean(m);
    if (x < drift) throw DomainError("legendre: x below E[log A]");
    if (std::abs(x - drift) < 1e-14 * (1.0 + std::abs(drift))) return 0.0;
    try {
        const double s = solve_alpha_from_rho(m, x);
        return s * x - env_log_moment(m, s);
    } catch (const NoRootError&) {
        throw DomainError("legendre: x outside (E[log A], rho_inf)");
    }
}

/// Cramér root: lambda(alpha0) = 1 with alpha0 > 0.
inline CramerRoot solve_cramer(const EnvModel& m) {
    if (!(env_log_mean(m) < 0.0))
        throw RegimeError("solve_cramer: model is not subcritical (E[log A] >= 0)");
    double hi = 1.0;
    int grow = 0;
    while (env_log_moment(m, hi) <= 0.0) {
        hi *= 2.0;
        if (++grow > 60) throw NoRootError("solve_cramer: lambda stays below 1");
        if (hi > 1e6 && env_log_moment(m, hi) < env_log_moment(m, hi / 2.0))
            throw NoRootError("solve_cramer: lambda stays below 1");
    }
    // Lambda is convex with Lambda(0) = 0 and Lambda'(0) < 0, so Lambda is
    // increasing wherever it crosses 0 again; bisect on [alpha_min-ish, hi].
    double lo = hi / 2.0;
    while (env_log_moment(m, lo) > 0.0) lo /= 2.0;
    const double a0 = detail::solve_increasing(
        [&](double a) { return env_log_moment(m, a); },
        [&](double a) { return detail::rho_of(m, a); }, lo, hi, 0.0);
    CramerRoot r;
    r.alpha0 = a0;
    r.rho0 = detail::rho_of(m, a0);
    r.sigma0 = std::sqrt(std::max(0.0, detail::sigma2_of(m, a0)));
    return r;
}

inline std::optional<CramerRoot> try_solve_cramer(const EnvModel& m) {
    try {
        return solve_cramer(m);
    } catch (const RegimeError&) {
        return std::nullopt;
    } catch (const NoRootError&) {
        return std::nullopt;
    }
}

inline DomainInfo domain_info(const EnvModel& m) {
    DomainInfo d;
    d.alpha_inf = std::numeric_limits<double>::infinity();
    if (!m.is_table()) {
        d.rho_inf = std::numeric_limits<double>::infinity();
        d.alpha_min = std::max(0.0, -m.mu / m.s2);
        return d;
    }
    double amax = 0.0;
    for (std::size_t i = 0; i < m.mean.size(); ++i)
        if (m.weight[i] > 0.0) amax = std::max(amax, m.mean[i]);
    d.rho_inf = std::log(amax);
    const double drift = env_log_mean(m);
    if (drift >= 0.0) {
        d.alpha_min = 0.0;
    } else if (d.rho_inf <= 0.0) {
        // lambda decreasing on the whole domain; no finite argmin
        d.alpha_min = std::numeric_limits<double>::infinity();
    } else {
        double hi = 1.0;
        while (detail::rho_of(m, hi) <= 0.0) hi *= 2.0;
        d.alpha_min = detail::solve_increasing(
            [&](double a) { return detail::rho_of(m, a); },
            [&](double a) { return detail::sigma2_of(m, a); }, 1e-12, hi, 0.0);
    }
    return d;
}

} // namespace bpre
