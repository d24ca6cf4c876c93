#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bpre/random.hpp>

#include "support/oracles.hpp"

#include <cmath>
#include <map>
#include <vector>

using bpre::CounterRng;

TEST_CASE("streams are counter-based and reproducible") {
    CounterRng a(42, 0), b(42, 0), c(42, 1), d(7, 0);
    bool identical = true, differs_worker = false, differs_seed = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        identical = identical && x == b();
        differs_worker = differs_worker || x != c();
        differs_seed = differs_seed || x != d();
    }
    CHECK(identical);
    CHECK(differs_worker);
    CHECK(differs_seed);
    CHECK(a.counter() == 1000);
}

TEST_CASE("uniform01 lives in [0,1) with the right mean") {
    CounterRng rng(1);
    const int n = 200000;
    double sum = 0.0;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        in_range = in_range && u >= 0.0 && u < 1.0;
        sum += u;
    }
    CHECK(in_range);
    CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal moments") {
    CounterRng rng(2);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
    }
    CHECK(std::abs(s1 / n) < 3.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(s3 / n) < 3.0 * std::sqrt(15.0 / n));
}

namespace {

void check_poisson_moments(double mean, int n, std::uint64_t seed) {
    CounterRng rng(seed);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = static_cast<double>(rng.poisson(mean));
        s1 += k;
        s2 += k * k;
    }
    const double m = s1 / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - mean) < 4.0 * std::sqrt(mean / n));
    // Var of the sample variance of Poisson ~ (mean + 2 mean^2)/n
    CHECK(std::abs(v - mean) < 4.0 * std::sqrt((mean + 2.0 * mean * mean) / n));
}

} // namespace

TEST_CASE("poisson moments across the three sampling branches") {
    check_poisson_moments(3.7, 200000, 11);   // inversion
    check_poisson_moments(57.3, 200000, 12);  // PTRS
    check_poisson_moments(2.5e7, 20000, 13);  // Gaussian approximation
}

TEST_CASE("PTRS matches the exact pmf (chi-square)") {
    const double mean = 12.0;
    CounterRng rng(3);
    const int n = 200000;
    std::map<std::uint64_t, std::uint64_t> hist;
    for (int i = 0; i < n; ++i) hist[rng.poisson(mean)] += 1;
    // exact pmf by recurrence, tail-merged at +-inf ends
    std::vector<double> observed, expected;
    double p = std::exp(-mean);
    double below = 0.0, below_exp = 0.0;
    for (std::uint64_t k = 0; k <= 40; ++k) {
        const double e = p * n;
        const auto it = hist.find(k);
        const double o = it == hist.end() ? 0.0 : static_cast<double>(it->second);
        if (e >= 5.0) {
            if (below_exp > 0.0) {
                observed.push_back(below);
                expected.push_back(below_exp);
                below = below_exp = 0.0;
            }
            observed.push_back(o);
            expected.push_back(e);
        } else {
            below += o;
            below_exp += e;
        }
        p *= mean / static_cast<double>(k + 1);
    }
    double tail = static_cast<double>(n);
    for (double e : expected) tail -= e;
    tail -= below_exp;
    double tail_obs = 0.0;
    for (const auto& [k, v] : hist)
        if (k > 40) tail_obs += static_cast<double>(v);
    observed.push_back(below + tail_obs);
    expected.push_back(below_exp + tail);
    CHECK(oracles::chi2_gof_pvalue(observed, expected) > 1e-3);
}

TEST_CASE("sampler branch boundaries") {
    // means just around the inversion/PTRS switch and the unit-shape gamma
    check_poisson_moments(9.9, 100000, 21);
    check_poisson_moments(10.1, 100000, 22);
    CounterRng rng(23);
    const int n = 100000;
    double s1 = 0.0;
    for (int i = 0; i < n; ++i) s1 += rng.gamma(1.0, 2.0); // exponential
    CHECK(std::abs(s1 / n - 2.0) < 4.0 * 2.0 / std::sqrt(n));
}

TEST_CASE("gamma moments (Marsaglia-Tsang)") {
    CounterRng rng(4);
    const int n = 200000;
    const double shape = 3.4, scale = 2.0;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gamma(shape, scale);
        s1 += x;
        s2 += x * x;
    }
    const double m = s1 / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - shape * scale) < 4.0 * std::sqrt(shape * scale * scale / n));
    CHECK(std::abs(v - shape * scale * scale) / (shape * scale * scale) < 0.05);
}
