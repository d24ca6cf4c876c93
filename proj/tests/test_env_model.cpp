#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bpre/env_model.hpp>

#include "support/oracles.hpp"

#include <cmath>
#include <map>

using namespace bpre;

namespace {
const EnvModel kL = EnvModel::lognormal(-0.15, 0.25);
const EnvModel kTwoPoint = EnvModel::two_point(0.7, 0.3, 0.3, 1.9);
} // namespace

TEST_CASE("env_moment closed forms") {
    CHECK(env_moment(kL, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(env_moment(kTwoPoint, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    // lognormal MGF of log A, cross-checked by Gauss-Hermite quadrature
    CHECK(env_moment(kL, 2.0) == doctest::Approx(std::exp(0.2)).epsilon(1e-12));
    CHECK(env_moment(kL, 2.0) ==
          doctest::Approx(oracles::lognormal_moment_gh(-0.15, 0.25, 2.0)).epsilon(1e-12));
    CHECK(env_moment(kL, 3.7) ==
          doctest::Approx(oracles::lognormal_moment_gh(-0.15, 0.25, 3.7)).epsilon(1e-12));
    // finite summation
    CHECK(env_moment(kTwoPoint, 2.0) ==
          doctest::Approx(0.7 * 0.09 + 0.3 * 3.61).epsilon(1e-14));
    CHECK_THROWS_AS((void)env_moment(kL, -0.5), DomainError);
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS((void)EnvModel::two_point(0.7, 0.2, 0.3, 1.9), DomainError);
    CHECK_THROWS_AS((void)EnvModel::two_point(0.7, 0.3, -0.3, 1.9), DomainError);
    CHECK_THROWS_AS((void)EnvModel::lognormal(0.0, 0.0), DomainError);
    CHECK_THROWS_AS((void)EnvModel::finite_table({}, {}), DomainError);
}

TEST_CASE("tilt closed forms and the moment identity") {
    const TiltedModel id = tilt(kL, 0.0);
    CHECK(id.tilted.mu == doctest::Approx(kL.mu));
    CHECK(id.tilted.s2 == doctest::Approx(kL.s2));
    CHECK(id.log_lambda == doctest::Approx(0.0));

    const TiltedModel t2 = tilt(kL, 2.0);
    CHECK(t2.tilted.mu == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(t2.tilted.s2 == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(t2.log_lambda == doctest::Approx(0.2).epsilon(1e-13));

    const TiltedModel tp1 = tilt(kTwoPoint, 1.0);
    CHECK(tp1.tilted.weight[0] == doctest::Approx(0.21 / 0.78).epsilon(1e-13));
    CHECK(tp1.tilted.weight[1] == doctest::Approx(0.57 / 0.78).epsilon(1e-13));

    // lambda_tilt(beta) * lambda(alpha) = lambda(alpha + beta)
    for (const EnvModel& m :
         {kL, kTwoPoint, EnvModel::finite_table({0.2, 0.5, 0.3}, {0.4, 1.1, 2.3})}) {
        for (double alpha : {0.3, 1.0, 2.5}) {
            const TiltedModel t = tilt(m, alpha);
            for (double beta : {0.0, 0.7, 1.9}) {
                CHECK(env_moment(t.tilted, beta) * env_moment(m, alpha) ==
                      doctest::Approx(env_moment(m, alpha + beta)).epsilon(1e-10));
            }
        }
    }
    CHECK_THROWS_AS((void)tilt(kL, -1.0), DomainError);
}

TEST_CASE("sample_env_param distributions") {
    CounterRng rng(5);
    const EnvModel degenerate = EnvModel::two_point(1.0, 0.0, 2.0, 7.0);
    for (int i = 0; i < 100; ++i) CHECK(sample_env_param(degenerate, rng).a == 2.0);

    const int n = 100000;
    double log_sum = 0.0;
    for (int i = 0; i < n; ++i) log_sum += std::log(sample_env_param(kL, rng).a);
    CHECK(std::abs(log_sum / n + 0.15) < 3.0 * 0.5 / std::sqrt(n));

    int low = 0;
    for (int i = 0; i < n; ++i)
        if (sample_env_param(kTwoPoint, rng).a == 0.3) ++low;
    CHECK(std::abs(static_cast<double>(low) / n - 0.7) < 3.0 * std::sqrt(0.21 / n));
}

TEST_CASE("aggregated offspring totals: trivial cases and moments") {
    CounterRng rng(6);
    CHECK(sample_offspring_total(kL, EnvParam{1.3}, 0, rng).count == 0);
    CHECK(sample_offspring_total(kL, EnvParam{0.0}, 10, rng).count == 0);

    const int n = 100000;
    for (auto family : {OffspringFamily::PoissonMean, OffspringFamily::GeometricMean}) {
        EnvModel m = kL;
        m.offspring = family;
        const double a = 1.5;
        const std::uint64_t z = 10000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            sum += static_cast<double>(sample_offspring_total(m, EnvParam{a}, z, rng).count);
        const double mean = sum / n;
        const double var1 = family == OffspringFamily::PoissonMean
                                ? static_cast<double>(z) * a
                                : static_cast<double>(z) * a * (1.0 + a);
        CHECK(std::abs(mean - 15000.0) < 3.0 * std::sqrt(var1 / n));
    }
}

TEST_CASE("aggregated sampling equals naive sampling in law") {
    // Poisson: the aggregate draw at z=10, a=1.3 goes through PTRS while the
    // naive sum uses the small-mean inversion sampler
    {
        CounterRng r1(7, 0), r2(7, 1);
        std::map<std::uint64_t, std::uint64_t> h1, h2;
        for (int i = 0; i < 100000; ++i) {
            h1[sample_offspring_total(kL, EnvParam{1.3}, 10, r1).count] += 1;
            h2[oracles::naive_offspring_sum(kL, 1.3, 10, r2)] += 1;
        }
        CHECK(oracles::chi2_two_sample_pvalue(h1, h2) > 1e-3);
    }
    // geometric: negative binomial via gamma-Poisson vs a sum of geometrics
    {
        CounterRng r1(8, 0), r2(8, 1);
        EnvModel m = kL;
        m.offspring = OffspringFamily::GeometricMean;
        std::map<std::uint64_t, std::uint64_t> h1, h2;
        for (int i = 0; i < 100000; ++i) {
            h1[sample_offspring_total(m, EnvParam{0.8}, 5, r1).count] += 1;
            h2[oracles::naive_offspring_sum(m, 0.8, 5, r2)] += 1;
        }
        CHECK(oracles::chi2_two_sample_pvalue(h1, h2) > 1e-3);
    }
}

TEST_CASE("saturation is flagged and capped") {
    CounterRng rng(9);
    const auto d = sample_offspring_total(kL, EnvParam{100.0}, kPopulationCap - 1, rng);
    CHECK(d.saturated);
    CHECK(d.count == kPopulationCap);
}

TEST_CASE("lattice suspicion") {
    CHECK(EnvModel::two_point(0.5, 0.5, 2.0, 4.0).lattice_suspect);       // log ratio = 1/2
    CHECK_FALSE(EnvModel::two_point(0.7, 0.3, 0.3, 1.9).lattice_suspect); // irrational ratio
    CHECK(EnvModel::two_point(1.0, 0.0, 2.0, 7.0).lattice_suspect);       // degenerate
    CHECK_FALSE(kL.lattice_suspect);                                      // continuous law
}
