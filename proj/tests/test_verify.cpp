#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bpre/verify.hpp>

#include <cmath>
#include <limits>

using namespace bpre;

namespace {

ReportRow row(double measured, double predicted, ReportRow::Rule rule,
              ReportRow::TolKind kind, double tol, double se = 0.0) {
    ReportRow r;
    r.param = "x";
    r.measured = measured;
    r.predicted = predicted;
    r.stderr_ = se;
    r.rule = rule;
    r.tol_kind = kind;
    r.tol_value = tol;
    r.tol_key = "k";
    return r;
}

} // namespace

TEST_CASE("row evaluation semantics") {
    auto abs_ok = row(1.02, 1.0, ReportRow::Rule::Abs, ReportRow::TolKind::AbsTol, 0.05);
    evaluate_row(abs_ok);
    CHECK(abs_ok.pass);
    CHECK(abs_ok.ratio == doctest::Approx(0.4));

    auto rel = row(1.2, 1.0, ReportRow::Rule::Abs, ReportRow::TolKind::RelPred, 0.1);
    evaluate_row(rel);
    CHECK_FALSE(rel.pass);
    CHECK(rel.ratio == doctest::Approx(2.0));

    auto se_row = row(1.25, 1.0, ReportRow::Rule::Abs, ReportRow::TolKind::StderrMult, 3.0, 0.1);
    evaluate_row(se_row);
    CHECK(se_row.pass);

    auto le_pass = row(-5.0, 0.0, ReportRow::Rule::Le, ReportRow::TolKind::AbsTol, 0.0);
    evaluate_row(le_pass);
    CHECK(le_pass.pass);
    auto le_fail = row(1e-12, 0.0, ReportRow::Rule::Le, ReportRow::TolKind::AbsTol, 0.0);
    evaluate_row(le_fail);
    CHECK_FALSE(le_fail.pass);
    CHECK(std::isinf(le_fail.ratio));

    auto exact0 = row(0.5, 0.5, ReportRow::Rule::Abs, ReportRow::TolKind::AbsTol, 0.0);
    evaluate_row(exact0);
    CHECK(exact0.pass);

    auto inf_tol = row(123.0, 0.0, ReportRow::Rule::Abs, ReportRow::TolKind::AbsTol,
                       std::numeric_limits<double>::infinity());
    evaluate_row(inf_tol);
    CHECK(inf_tol.pass);
    CHECK(inf_tol.ratio == 0.0);
}

TEST_CASE("check_report is an idempotent audit with overridable tolerances") {
    ExperimentConfig cfg = ExperimentConfig::defaults("identities");
    cfg.traj_paths = 300;
    cfg.seed = 7;
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.pass);
    CHECK(rep.rows.size() == 4);

    const ExperimentReport audited = check_report(rep);
    CHECK(audited.pass == rep.pass);
    CHECK(audited.worst_ratio == doctest::Approx(rep.worst_ratio));
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        CHECK(audited.rows[i].pass == rep.rows[i].pass);

    // tightening any stochastic tolerance to zero fails
    const ExperimentReport tight = check_report(rep, {{"residual", 0.0}});
    CHECK_FALSE(tight.pass);
    // loosening to infinity passes vacuously
    const ExperimentReport loose =
        check_report(rep, {{"residual", std::numeric_limits<double>::infinity()}});
    CHECK(loose.pass);

    ExperimentReport broken = rep;
    broken.rows[0].measured = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)check_report(broken), SchemaError);
    broken = rep;
    broken.rows.clear();
    CHECK_THROWS_AS((void)check_report(broken), SchemaError);
}

TEST_CASE("theory predictions: closed forms") {
    const EnvModel L = canonical_model_L();
    const EnvModel Ls = canonical_model_Lstar();

    // exact Gaussian tail for Pi_25 and the first-order expansion next to it
    CHECK(gaussian_pi_tail(L, 0.35, 25) ==
          doctest::Approx(2.866515718791939e-7).epsilon(1e-9));
    const double petrov = petrov_prediction(L, 0.35, 25);
    const double expected =
        std::exp(-12.5) / (2.0 * 0.5 * std::sqrt(2.0 * 3.14159265358979323846 * 25.0));
    CHECK(petrov == doctest::Approx(expected).epsilon(1e-12));
    // the gap to the exact tail is the Mills-ratio correction at z = 5
    CHECK(petrov / gaussian_pi_tail(L, 0.35, 25) == doctest::Approx(1.03738).epsilon(1e-3));

    CHECK(thm21_prediction(L, 0.35, 40) ==
          doctest::Approx(1.98002 * std::exp(-20.0) / std::sqrt(40.0)).epsilon(1e-4));

    CHECK(thm22_cum_ratio_prediction(Ls, 0.7) ==
          doctest::Approx(std::exp(0.24) / (std::exp(0.24) - 1.0)).epsilon(1e-12));
    CHECK(thm22_upper_ratio_prediction(Ls, 0.2) ==
          doctest::Approx(1.0 / (1.0 - std::exp(-0.21))).epsilon(1e-12));
    CHECK_THROWS_AS((void)thm22_cum_ratio_prediction(Ls, 0.2), RegimeError);
    CHECK_THROWS_AS((void)thm22_upper_ratio_prediction(Ls, 0.7), RegimeError);
    CHECK_THROWS_AS((void)gaussian_pi_tail(EnvModel::two_point(0.7, 0.3, 0.3, 1.9), 0.3, 10),
                    DomainError);

    ExperimentConfig cfg = ExperimentConfig::defaults("tails");
    const auto slopes = theory_prediction("tails", cfg);
    CHECK(slopes.size() == 2);
    CHECK(slopes[0] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK_THROWS_AS((void)theory_prediction("nope", cfg), SchemaError);
}

TEST_CASE("identities experiment passes and is deterministic") {
    ExperimentConfig cfg = ExperimentConfig::defaults("identities");
    cfg.traj_paths = 500;
    cfg.seed = 11;
    const ExperimentReport a = run_experiment(cfg);
    const ExperimentReport b = run_experiment(cfg);
    CHECK(a.pass);
    CHECK(a.worst_ratio == doctest::Approx(b.worst_ratio));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        CHECK(a.rows[i].measured == b.rows[i].measured);
    CHECK(a.config_echo == b.config_echo);
    CHECK_FALSE(a.config_echo.empty());
}

TEST_CASE("petrov experiment on a small grid") {
    ExperimentConfig cfg = ExperimentConfig::defaults("petrov");
    cfg.n_grid = {10};
    cfg.n_paths = 20000;
    cfg.seed = 13;
    const ExperimentReport rep = run_experiment(cfg);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].pass);
    CHECK(rep.rows[0].predicted ==
          doctest::Approx(gaussian_pi_tail(canonical_model_L(), 0.35, 10)).epsilon(1e-12));
    // a re-audit with the same tolerances reproduces the verdict
    CHECK(check_report(rep).pass == rep.pass);
}

TEST_CASE("prop31 experiment: exact recursion rows") {
    ExperimentConfig cfg = ExperimentConfig::defaults("prop31");
    cfg.n_paths = 20000;
    cfg.seed = 17;
    const ExperimentReport rep = run_experiment(cfg);
    bool found_uk = false, found_limit = false, found_ss = false;
    for (const auto& r : rep.rows) {
        if (r.param.rfind("u_k", 0) == 0) {
            found_uk = true;
            CHECK(r.pass);
        }
        if (r.param == "c_limit") {
            found_limit = true;
            CHECK(r.pass);
        }
        if (r.param == "ss_upper") {
            found_ss = true;
            CHECK(r.pass);
        }
    }
    CHECK(found_uk);
    CHECK(found_limit);
    CHECK(found_ss);
}

TEST_CASE("unknown experiment names are rejected") {
    CHECK_THROWS_AS((void)ExperimentConfig::defaults("thm99"), SchemaError);
    ExperimentConfig cfg = ExperimentConfig::defaults("petrov");
    cfg.name = "thm99";
    CHECK_THROWS_AS((void)run_experiment(cfg), SchemaError);
}

TEST_CASE("thm23 cutoff indices must stay positive") {
    ExperimentConfig cfg = ExperimentConfig::defaults("thm23");
    cfg.n_grid = {10};
    cfg.cutoff_D = 36.0; // (2 alpha + 3)/Lambda(alpha) at this alpha
    CHECK_THROWS_AS((void)run_experiment(cfg), RegimeError);
}

TEST_CASE("every experiment driver produces complete, reproducible reports") {
    // small sample sizes: this exercises the harness plumbing, not the
    // statistical verdicts (those run at full size in the acceptance suite)
    auto shrink = [](const std::string& name) {
        ExperimentConfig cfg = ExperimentConfig::defaults(name);
        cfg.n_paths = 5000;
        cfg.traj_paths = 200;
        cfg.seed = 23;
        if (name == "thm21") cfg.n_grid = {8, 10};
        if (name == "thm23") cfg.n_grid = {20, 30, 40};
        if (name == "thm22") {
            cfg.theta_grid = {0.25, 0.75};
            cfg.n_paths = 20000;
        }
        if (name == "thm24") cfg.log_t_grid = {6.0};
        if (name == "tails") cfg.log_t_grid = {3.0, 4.0, 5.0, 6.0};
        return cfg;
    };
    for (const auto& name : ExperimentConfig::known_names()) {
        ExperimentConfig cfg = shrink(name);
        const ExperimentReport a = run_experiment(cfg);
        CHECK_FALSE(a.rows.empty());
        for (const auto& row : a.rows) {
            CHECK_FALSE(row.param.empty());
            CHECK(std::isfinite(row.measured));
        }
        CHECK(a.worst_ratio >= 0.0);
        // rerunning the identical config reproduces every number
        const ExperimentReport b = run_experiment(cfg);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].measured == b.rows[i].measured);
            CHECK(a.rows[i].pass == b.rows[i].pass);
        }
    }
}
