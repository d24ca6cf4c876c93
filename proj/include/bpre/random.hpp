// =============================================================================
// random.hpp — counter-based random streams and the samplers built on them.
//
// Reproducibility contract: a stream is fully determined by (seed, worker
// index, draw counter).  The generator is a keyed SplitMix64: the output at
// counter i is a bijective 64-bit finalizer applied to key + i*golden, so
// stream layout never depends on library internals or scheduling.
//
// All distribution samplers are implemented here rather than taken from
// <random> because the standard ones are implementation-defined and would
// break byte-identical reruns.
//   normal   — Box-Muller, two uniforms per draw
//   poisson  — inversion below mean 10, Hörmann's PTRS rejection up to 1e7,
//              Gaussian with continuity correction above (error far below
//              Monte Carlo noise at that scale)
//   gamma    — Marsaglia-Tsang squeeze (shape >= 1), boosted below 1
// =============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace bpre {

class CounterRng {
  public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t worker = 0)
        : key_(mix(mix(seed + kGolden) ^ mix(worker * 0xda942042e4dd58b5ull + 1))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ull; }

    result_type operator()() {
        ctr_ += 1;
        return mix(key_ + ctr_ * kGolden);
    }

    std::uint64_t counter() const { return ctr_; }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe under log().
    double uniform01_pos() {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        const double u1 = uniform01_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double exponential() { return -std::log(uniform01_pos()); }

    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 10.0) return poisson_inversion(mean);
        if (mean < 1e7) return poisson_ptrs(mean);
        // Gaussian with continuity correction.
        const double draw = std::floor(mean + std::sqrt(mean) * normal() + 0.5);
        return draw <= 0.0 ? 0 : static_cast<std::uint64_t>(draw);
    }

    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            const double u = uniform01_pos();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ull;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t poisson_inversion(double mean) {
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

    // Hörmann (1993), transformed rejection with squeeze.  Exact.
    std::uint64_t poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform01() - 0.5;
            const double v = uniform01_pos();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * loglam - mean - std::lgamma(kf + 1.0)) {
                return static_cast<std::uint64_t>(kf);
            }
        }
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

} // namespace bpre
