// =============================================================================
// env_model.hpp — random-environment laws, offspring families, exact
// aggregated population sampling, and exponential tilting of the environment.
//
// A model is a law for the per-generation reproduction mean A (> 0 a.s.)
// together with an offspring family: given A = a, one individual's offspring
// count is Poisson with mean a, or geometric on {0,1,2,...} with mean a
// (success probability 1/(1+a)).  Either way the conditional offspring mean
// equals a exactly, so E[Z_{n+1} | A, Z_n] = A Z_n.
//
// The total offspring of z individuals is sampled in O(1) by aggregation:
//   Poisson  — one Poisson draw with mean z*a
//   geometric — negative binomial with z successes, sampled as a
//               Gamma(z, scale a)-mixed Poisson
//
// Tilting multiplies the environment marginal by A^alpha / lambda(alpha) and
// leaves the conditional offspring law untouched.
// =============================================================================
#pragma once

#include "bpre/common.hpp"
#include "bpre/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bpre {

enum class EnvKind { TwoPoint, LogNormal, FiniteTable };
enum class OffspringFamily { PoissonMean, GeometricMean };

inline const char* to_string(EnvKind k) {
    switch (k) {
        case EnvKind::TwoPoint: return "two_point";
        case EnvKind::LogNormal: return "lognormal";
        default: return "finite_table";
    }
}
inline const char* to_string(OffspringFamily f) {
    return f == OffspringFamily::PoissonMean ? "poisson" : "geometric";
}

/// Realized mean of the current generation's offspring law.
struct EnvParam {
    double a;
};

using Population = std::uint64_t;

/// Saturation cap for population counts.  Thresholds in all experiments sit
/// far below it, so a capped count still decides every indicator correctly;
/// capped trajectories carry a flag.
inline constexpr Population kPopulationCap = Population{1} << 62;

struct OffspringDraw {
    Population count;
    bool saturated;
};

// ── Lattice suspicion ────────────────────────────────────────────────────────
// Condition for the precise-constant results is that log A | A > 0 is
// non-lattice.  For discrete laws we check whether the ratios
// log a_i / log a_j admit a rational approximation with denominator <= 100 to
// within 1e-9 (continued-fraction convergents).  Warn only, never reject.
inline bool rationally_close(double x, int max_den = 100, double tol = 1e-9) {
    const double x0 = std::abs(x);
    double y = x0;
    std::int64_t p0 = 1, q0 = 0, p1 = static_cast<std::int64_t>(std::floor(y)), q1 = 1;
    if (std::abs(x0 - static_cast<double>(p1)) < tol) return true;
    for (int it = 0; it < 64; ++it) {
        const double frac = y - std::floor(y);
        if (frac < 1e-15) break;
        y = 1.0 / frac;
        const auto a = static_cast<std::int64_t>(std::floor(y));
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > max_den) break;
        if (std::abs(x0 - static_cast<double>(p2) / static_cast<double>(q2)) < tol) return true;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    }
    return false;
}

struct EnvModel {
    EnvKind kind = EnvKind::LogNormal;
    // finite-table laws (TwoPoint is a two-row table)
    std::vector<double> weight;
    std::vector<double> mean;
    // lognormal law: log A ~ Normal(mu, s2)
    double mu = 0.0;
    double s2 = 0.0;
    OffspringFamily offspring = OffspringFamily::PoissonMean;
    bool lattice_suspect = false;

    bool is_table() const { return kind != EnvKind::LogNormal; }

    static EnvModel lognormal(double mu, double s2,
                              OffspringFamily f = OffspringFamily::PoissonMean) {
        if (!(s2 > 0.0)) throw DomainError("lognormal: s2 must be > 0");
        EnvModel m;
        m.kind = EnvKind::LogNormal;
        m.mu = mu;
        m.s2 = s2;
        m.offspring = f;
        return m;
    }

    static EnvModel finite_table(std::vector<double> p, std::vector<double> a,
                                 OffspringFamily f = OffspringFamily::PoissonMean,
                                 EnvKind kind = EnvKind::FiniteTable) {
        if (p.size() != a.size() || p.empty())
            throw DomainError("finite_table: weights and means must have equal, nonzero size");
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] < 0.0) throw DomainError("finite_table: negative weight");
            if (!(a[i] > 0.0)) throw DomainError("finite_table: means must be > 0");
            sum += p[i];
        }
        if (std::abs(sum - 1.0) > 1e-12) throw DomainError("finite_table: weights must sum to 1");
        EnvModel m;
        m.kind = kind;
        m.weight = std::move(p);
        m.mean = std::move(a);
        m.offspring = f;
        m.lattice_suspect = detect_lattice(m);
        return m;
    }

    static EnvModel two_point(double p1, double p2, double a1, double a2,
                              OffspringFamily f = OffspringFamily::PoissonMean) {
        return finite_table({p1, p2}, {a1, a2}, f, EnvKind::TwoPoint);
    }

  private:
    static bool detect_lattice(const EnvModel& m) {
        // atoms with a == 1 (log a == 0) fit every lattice; ignore them
        std::vector<double> logs;
        for (std::size_t i = 0; i < m.mean.size(); ++i)
            if (m.weight[i] > 0.0 && std::abs(std::log(m.mean[i])) > 1e-12)
                logs.push_back(std::log(m.mean[i]));
        if (logs.size() <= 1) return true; // (near-)degenerate log A
        for (std::size_t i = 0; i < logs.size(); ++i)
            for (std::size_t j = i + 1; j < logs.size(); ++j)
                if (!rationally_close(logs[i] / logs[j])) return false;
        return true;
    }
};

/// One-line human/CSV description, e.g.
/// "lognormal mu=-0.15 s2=0.25 offspring=poisson".
inline std::string describe(const EnvModel& m) {
    std::string s = to_string(m.kind);
    if (m.is_table()) {
        s += " p=[";
        for (std::size_t i = 0; i < m.weight.size(); ++i) {
            if (i) s += ",";
            s += format_double(m.weight[i]);
        }
        s += "] a=[";
        for (std::size_t i = 0; i < m.mean.size(); ++i) {
            if (i) s += ",";
            s += format_double(m.mean[i]);
        }
        s += "]";
    } else {
        s += " mu=" + format_double(m.mu) + " s2=" + format_double(m.s2);
    }
    s += " offspring=";
    s += to_string(m.offspring);
    return s;
}

// ── Moment functions ─────────────────────────────────────────────────────────

namespace detail {

/// E[(log A)^k A^alpha] for k = 0, 1, 2.  Log-sum-exp over tables keeps large
/// alpha stable.
inline double log_power_moment(const EnvModel& m, double alpha, int k) {
    if (!m.is_table()) {
        const double lam = std::exp(alpha * m.mu + 0.5 * alpha * alpha * m.s2);
        const double c = m.mu + alpha * m.s2;
        if (k == 0) return lam;
        if (k == 1) return lam * c;
        return lam * (c * c + m.s2);
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double a : m.mean) mx = std::max(mx, alpha * std::log(a));
    double s = 0.0;
    for (std::size_t i = 0; i < m.mean.size(); ++i) {
        const double la = std::log(m.mean[i]);
        const double w = m.weight[i] * std::exp(alpha * la - mx);
        s += (k == 0 ? w : k == 1 ? w * la : w * la * la);
    }
    return s * std::exp(mx);
}

inline void check_alpha_domain(double alpha) {
    if (alpha < 0.0) throw DomainError("moment exponent must be >= 0");
    if (!std::isfinite(alpha)) throw DomainError("moment exponent must be finite");
}

} // namespace detail

/// lambda(alpha) = E[A^alpha].  Closed form for both families.
inline double env_moment(const EnvModel& m, double alpha) {
    detail::check_alpha_domain(alpha);
    return detail::log_power_moment(m, alpha, 0);
}

/// Lambda(alpha) = log E[A^alpha].
inline double env_log_moment(const EnvModel& m, double alpha) {
    detail::check_alpha_domain(alpha);
    if (!m.is_table()) return alpha * m.mu + 0.5 * alpha * alpha * m.s2;
    return std::log(env_moment(m, alpha));
}

/// E[log A].
inline double env_log_mean(const EnvModel& m) {
    if (!m.is_table()) return m.mu;
    double s = 0.0;
    for (std::size_t i = 0; i < m.mean.size(); ++i) s += m.weight[i] * std::log(m.mean[i]);
    return s;
}

// ── Sampling ─────────────────────────────────────────────────────────────────

inline EnvParam sample_env_param(const EnvModel& m, CounterRng& rng) {
    if (!m.is_table()) {
        return EnvParam{std::exp(m.mu + std::sqrt(m.s2) * rng.normal())};
    }
    const double u = rng.uniform01();
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < m.weight.size(); ++i) {
        c += m.weight[i];
        if (u < c) return EnvParam{m.mean[i]};
    }
    return EnvParam{m.mean.back()};
}

/// Total offspring of z individuals in environment theta, drawn in O(1).
inline OffspringDraw sample_offspring_total(const EnvModel& m, EnvParam theta, Population z,
                                            CounterRng& rng) {
    if (z == 0 || theta.a <= 0.0) return {0, false};
    double draw;
    if (m.offspring == OffspringFamily::PoissonMean) {
        draw = static_cast<double>(rng.poisson(static_cast<double>(z) * theta.a));
    } else {
        // NB(z, 1/(1+a)) as a Gamma(z, a)-mixed Poisson
        const double lam = rng.gamma(static_cast<double>(z), theta.a);
        draw = static_cast<double>(rng.poisson(lam));
    }
    if (draw >= static_cast<double>(kPopulationCap)) return {kPopulationCap, true};
    return {static_cast<Population>(draw), false};
}

// ── Tilting ──────────────────────────────────────────────────────────────────

/// Exponential tilt of the environment marginal: the tilted law has density
/// A^alpha / lambda(alpha) with respect to the base law.  The offspring
/// family is unchanged.
struct TiltedModel {
    EnvModel base;
    double alpha = 0.0;
    double log_lambda = 0.0; // Lambda(alpha) of the base model
    EnvModel tilted;         // the reweighted environment marginal
};

inline TiltedModel tilt(const EnvModel& m, double alpha) {
    detail::check_alpha_domain(alpha);
    TiltedModel t;
    t.base = m;
    t.alpha = alpha;
    t.log_lambda = env_log_moment(m, alpha);
    if (!m.is_table()) {
        t.tilted = EnvModel::lognormal(m.mu + alpha * m.s2, m.s2, m.offspring);
    } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (double a : m.mean) mx = std::max(mx, alpha * std::log(a));
        std::vector<double> w(m.weight.size());
        double norm = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = m.weight[i] * std::exp(alpha * std::log(m.mean[i]) - mx);
            norm += w[i];
        }
        for (double& x : w) x /= norm;
        t.tilted = EnvModel::finite_table(std::move(w), m.mean, m.offspring, m.kind);
    }
    return t;
}

} // namespace bpre
