// =============================================================================
// cli.hpp — JSON run configuration, subcommand dispatch, and CSV output.
//
// One JSON document describes one run; unknown keys are rejected with their
// key path.  Every output artifact echoes model, seed, workers, and version
// in a comment header, and identical configs produce byte-identical files
// (numbers are printed with 17 significant digits; wall-clock times never
// enter the CSVs).
//
// Exit codes: 0 success, 1 I/O or schema error, 2 regime error,
// 3 failed experiment verdict.
// =============================================================================
#pragma once

#include "bpre/common.hpp"
#include "bpre/env_model.hpp"
#include "bpre/estimate.hpp"
#include "bpre/rates.hpp"
#include "bpre/sim.hpp"
#include "bpre/verify.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bpre {

using json = nlohmann::ordered_json;

struct RunConfig {
    EnvModel model = EnvModel::lognormal(-0.15, 0.25);
    std::string command = "rate";

    double rate_alpha = 2.0;

    std::int64_t sim_n = 30;
    std::uint64_t sim_paths = 1;
    std::optional<double> sim_tilt;

    std::string est_target = "Z"; // Z | Pi | W | TZ | TW
    double est_rho = 0.35;
    std::vector<std::int64_t> est_n = {25};
    std::vector<double> est_log_t = {8.0};
    std::uint64_t est_N = 200000;
    std::string est_method = "tilted";

    std::string exp_name = "identities";
    std::map<std::string, double> exp_tolerances;
    std::optional<std::uint64_t> exp_N;
    std::optional<double> exp_rho, exp_rho_lo, exp_log_t_hi, exp_log_t_lo, exp_D;
    std::optional<std::vector<std::int64_t>> exp_n_grid;
    std::optional<std::vector<double>> exp_log_t_grid, exp_theta_grid;
    std::optional<std::int64_t> exp_theta_n0, exp_k_max, exp_traj_len, exp_traj_m,
        exp_traj_paths;
    bool exp_use_config_model = false;

    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string output_dir = "out";
    bool force = false;

    std::vector<std::string> warnings;
};

// ── Parsing ──────────────────────────────────────────────────────────────────

namespace cli_detail {

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw SchemaError("unknown key " + path + "." + it.key());
    }
}

inline double need_number(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw SchemaError("missing or non-numeric key " + path + "." + key);
    return obj[key].get<double>();
}

inline std::vector<double> number_list(const json& v, const std::string& path) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
        return out;
    }
    if (!v.is_array() || v.empty()) throw SchemaError("expected nonempty array at " + path);
    for (const auto& x : v) {
        if (!x.is_number()) throw SchemaError("expected numbers at " + path);
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::vector<std::int64_t> int_list(const json& v, const std::string& path) {
    std::vector<std::int64_t> out;
    for (double x : number_list(v, path)) out.push_back(static_cast<std::int64_t>(x));
    return out;
}

inline EnvModel parse_model(const json& j) {
    if (!j.is_object()) throw SchemaError("$.model must be an object");
    reject_unknown(j, "$.model", {"env", "offspring"});
    if (!j.contains("env") || !j["env"].is_object())
        throw SchemaError("missing object $.model.env");
    const json& env = j["env"];
    OffspringFamily family = OffspringFamily::PoissonMean;
    if (j.contains("offspring")) {
        const std::string f = j["offspring"].get<std::string>();
        if (f == "poisson") family = OffspringFamily::PoissonMean;
        else if (f == "geometric") family = OffspringFamily::GeometricMean;
        else throw SchemaError("$.model.offspring must be poisson or geometric");
    }
    if (!env.contains("kind") || !env["kind"].is_string())
        throw SchemaError("missing string $.model.env.kind");
    const std::string kind = env["kind"].get<std::string>();
    try {
        if (kind == "lognormal") {
            reject_unknown(env, "$.model.env", {"kind", "mu", "s2"});
            return EnvModel::lognormal(need_number(env, "$.model.env", "mu"),
                                       need_number(env, "$.model.env", "s2"), family);
        }
        if (kind == "two_point" || kind == "finite_table") {
            reject_unknown(env, "$.model.env", {"kind", "p", "a"});
            if (!env.contains("p") || !env.contains("a"))
                throw SchemaError("$.model.env needs arrays p and a");
            auto p = number_list(env["p"], "$.model.env.p");
            auto a = number_list(env["a"], "$.model.env.a");
            if (kind == "two_point" && (p.size() != 2 || a.size() != 2))
                throw SchemaError("$.model.env: two_point needs exactly two atoms");
            return EnvModel::finite_table(std::move(p), std::move(a), family,
                                          kind == "two_point" ? EnvKind::TwoPoint
                                                              : EnvKind::FiniteTable);
        }
    } catch (const DomainError& e) {
        throw SchemaError(std::string("$.model.env: ") + e.what());
    }
    throw SchemaError("$.model.env.kind must be lognormal, two_point, or finite_table");
}

} // namespace cli_detail

inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("config root must be an object");
    cli_detail::reject_unknown(j, "$",
                               {"model", "command", "rate", "simulate", "estimate", "experiment",
                                "seed", "workers", "output_dir", "force"});
    RunConfig cfg;
    if (!j.contains("model")) throw SchemaError("missing key $.model");
    cfg.model = cli_detail::parse_model(j["model"]);
    if (j.contains("command")) {
        cfg.command = j["command"].get<std::string>();
        if (cfg.command != "rate" && cfg.command != "simulate" && cfg.command != "estimate" &&
            cfg.command != "experiment")
            throw SchemaError("$.command must be rate, simulate, estimate, or experiment");
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) {
        const auto w = j["workers"].get<std::int64_t>();
        if (w < 1) throw SchemaError("$.workers must be >= 1");
        cfg.workers = static_cast<unsigned>(w);
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("force")) cfg.force = j["force"].get<bool>();

    if (j.contains("rate")) {
        cli_detail::reject_unknown(j["rate"], "$.rate", {"alpha"});
        cfg.rate_alpha = cli_detail::need_number(j["rate"], "$.rate", "alpha");
    }
    if (j.contains("simulate")) {
        const json& s = j["simulate"];
        cli_detail::reject_unknown(s, "$.simulate", {"n", "paths", "tilt_alpha"});
        if (s.contains("n")) cfg.sim_n = s["n"].get<std::int64_t>();
        if (s.contains("paths")) cfg.sim_paths = s["paths"].get<std::uint64_t>();
        if (s.contains("tilt_alpha") && !s["tilt_alpha"].is_null())
            cfg.sim_tilt = s["tilt_alpha"].get<double>();
        if (cfg.sim_n < 0) throw SchemaError("$.simulate.n must be >= 0");
        if (cfg.sim_paths < 1) throw SchemaError("$.simulate.paths must be >= 1");
    }
    if (j.contains("estimate")) {
        const json& e = j["estimate"];
        cli_detail::reject_unknown(e, "$.estimate",
                                   {"target", "rho", "n", "log_t", "N", "method"});
        if (e.contains("target")) cfg.est_target = e["target"].get<std::string>();
        if (cfg.est_target != "Z" && cfg.est_target != "Pi" && cfg.est_target != "W" &&
            cfg.est_target != "TZ" && cfg.est_target != "TW")
            throw SchemaError("$.estimate.target must be one of Z, Pi, W, TZ, TW");
        if (e.contains("rho")) cfg.est_rho = e["rho"].get<double>();
        if (e.contains("n")) cfg.est_n = cli_detail::int_list(e["n"], "$.estimate.n");
        if (e.contains("log_t"))
            cfg.est_log_t = cli_detail::number_list(e["log_t"], "$.estimate.log_t");
        if (e.contains("N")) cfg.est_N = e["N"].get<std::uint64_t>();
        if (e.contains("method")) cfg.est_method = e["method"].get<std::string>();
        if (cfg.est_method != "tilted" && cfg.est_method != "naive")
            throw SchemaError("$.estimate.method must be tilted or naive");
    }
    if (j.contains("experiment")) {
        const json& e = j["experiment"];
        cli_detail::reject_unknown(
            e, "$.experiment",
            {"name", "N", "rho", "rho_lo", "n_grid", "log_t_grid", "theta_grid", "log_t_hi",
             "log_t_lo", "theta_n0", "D", "k_max", "traj_len", "traj_m", "traj_paths",
             "tolerances", "use_config_model"});
        if (e.contains("name")) cfg.exp_name = e["name"].get<std::string>();
        bool known = false;
        for (const auto& n : ExperimentConfig::known_names()) known = known || n == cfg.exp_name;
        if (!known) throw SchemaError("$.experiment.name: unknown experiment " + cfg.exp_name);
        if (e.contains("N")) cfg.exp_N = e["N"].get<std::uint64_t>();
        if (e.contains("rho")) cfg.exp_rho = e["rho"].get<double>();
        if (e.contains("rho_lo")) cfg.exp_rho_lo = e["rho_lo"].get<double>();
        if (e.contains("log_t_hi")) cfg.exp_log_t_hi = e["log_t_hi"].get<double>();
        if (e.contains("log_t_lo")) cfg.exp_log_t_lo = e["log_t_lo"].get<double>();
        if (e.contains("D")) cfg.exp_D = e["D"].get<double>();
        if (e.contains("n_grid")) cfg.exp_n_grid = cli_detail::int_list(e["n_grid"], "$.experiment.n_grid");
        if (e.contains("log_t_grid"))
            cfg.exp_log_t_grid = cli_detail::number_list(e["log_t_grid"], "$.experiment.log_t_grid");
        if (e.contains("theta_grid"))
            cfg.exp_theta_grid = cli_detail::number_list(e["theta_grid"], "$.experiment.theta_grid");
        if (e.contains("theta_n0")) cfg.exp_theta_n0 = e["theta_n0"].get<std::int64_t>();
        if (e.contains("k_max")) cfg.exp_k_max = e["k_max"].get<std::int64_t>();
        if (e.contains("traj_len")) cfg.exp_traj_len = e["traj_len"].get<std::int64_t>();
        if (e.contains("traj_m")) cfg.exp_traj_m = e["traj_m"].get<std::int64_t>();
        if (e.contains("traj_paths")) cfg.exp_traj_paths = e["traj_paths"].get<std::int64_t>();
        if (e.contains("use_config_model")) cfg.exp_use_config_model = e["use_config_model"].get<bool>();
        if (e.contains("tolerances")) {
            if (!e["tolerances"].is_object())
                throw SchemaError("$.experiment.tolerances must be an object");
            for (auto it = e["tolerances"].begin(); it != e["tolerances"].end(); ++it) {
                if (!it.value().is_number())
                    throw SchemaError("$.experiment.tolerances." + it.key() + " must be a number");
                cfg.exp_tolerances[it.key()] = it.value().get<double>();
            }
        }
    }
    // non-fatal diagnostics
    if (cfg.model.lattice_suspect)
        cfg.warnings.push_back(
            "environment looks lattice-suspect (log-mean ratios near small rationals); "
            "precise-constant checks assume a non-lattice law");
    if (cfg.command == "estimate" && (cfg.est_target == "Z" || cfg.est_target == "W")) {
        try {
            const double alpha = solve_alpha_from_rho(cfg.model, cfg.est_rho);
            if (!rate_pack(cfg.model, alpha).regime_z)
                cfg.warnings.push_back("estimate: rho is outside the Z-deviation regime "
                                       "(needs alpha > 1 and lambda(alpha) > lambda(1))");
        } catch (const std::exception& e) {
            cfg.warnings.push_back(std::string("estimate: rho not attainable: ") + e.what());
        }
    }
    return cfg;
}

// ── Canonical form ───────────────────────────────────────────────────────────

inline json model_to_json(const EnvModel& m) {
    json env;
    env["kind"] = to_string(m.kind);
    if (m.is_table()) {
        env["p"] = m.weight;
        env["a"] = m.mean;
    } else {
        env["mu"] = m.mu;
        env["s2"] = m.s2;
    }
    json out;
    out["env"] = env;
    out["offspring"] = to_string(m.offspring);
    return out;
}

/// Canonical JSON for a parsed config: fixed key order, defaults
/// materialized.  parse_config(canonical_config_json(c)) is a fixed point.
inline std::string canonical_config_json(const RunConfig& cfg) {
    json j;
    j["model"] = model_to_json(cfg.model);
    j["command"] = cfg.command;
    j["rate"] = {{"alpha", cfg.rate_alpha}};
    json sim;
    sim["n"] = cfg.sim_n;
    sim["paths"] = cfg.sim_paths;
    if (cfg.sim_tilt) sim["tilt_alpha"] = *cfg.sim_tilt;
    j["simulate"] = sim;
    j["estimate"] = {{"target", cfg.est_target}, {"rho", cfg.est_rho},   {"n", cfg.est_n},
                     {"log_t", cfg.est_log_t},   {"N", cfg.est_N},       {"method", cfg.est_method}};
    json exp;
    exp["name"] = cfg.exp_name;
    if (cfg.exp_N) exp["N"] = *cfg.exp_N;
    if (cfg.exp_rho) exp["rho"] = *cfg.exp_rho;
    if (cfg.exp_rho_lo) exp["rho_lo"] = *cfg.exp_rho_lo;
    if (cfg.exp_log_t_hi) exp["log_t_hi"] = *cfg.exp_log_t_hi;
    if (cfg.exp_log_t_lo) exp["log_t_lo"] = *cfg.exp_log_t_lo;
    if (cfg.exp_D) exp["D"] = *cfg.exp_D;
    if (cfg.exp_n_grid) exp["n_grid"] = *cfg.exp_n_grid;
    if (cfg.exp_log_t_grid) exp["log_t_grid"] = *cfg.exp_log_t_grid;
    if (cfg.exp_theta_grid) exp["theta_grid"] = *cfg.exp_theta_grid;
    if (cfg.exp_theta_n0) exp["theta_n0"] = *cfg.exp_theta_n0;
    if (cfg.exp_k_max) exp["k_max"] = *cfg.exp_k_max;
    if (cfg.exp_traj_len) exp["traj_len"] = *cfg.exp_traj_len;
    if (cfg.exp_traj_m) exp["traj_m"] = *cfg.exp_traj_m;
    if (cfg.exp_traj_paths) exp["traj_paths"] = *cfg.exp_traj_paths;
    if (cfg.exp_use_config_model) exp["use_config_model"] = true;
    if (!cfg.exp_tolerances.empty()) {
        json tols;
        for (const auto& [k, v] : cfg.exp_tolerances) tols[k] = v;
        exp["tolerances"] = tols;
    }
    j["experiment"] = exp;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.output_dir;
    j["force"] = cfg.force;
    return j.dump(2) + "\n";
}

// ── Output writers ───────────────────────────────────────────────────────────

namespace cli_detail {

inline std::string num(double v) { return format_double(v); }

inline std::string comment_header(const RunConfig& cfg) {
    std::ostringstream os;
    os << "# model=" << describe(cfg.model) << ", seed=" << cfg.seed
       << ", workers=" << cfg.workers << ", version=" << kVersion << "\n";
    return os.str();
}

inline void write_file(const RunConfig& cfg, const std::string& name,
                       const std::string& contents) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output dir " + cfg.output_dir + ": " + ec.message());
    const fs::path path = fs::path(cfg.output_dir) / name;
    if (fs::exists(path) && !cfg.force)
        throw IoError("refusing to overwrite " + path.string() + " (pass --force)");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << contents;
    if (!out.flush()) throw IoError("short write to " + path.string());
}

inline std::string estimate_csv_row(const std::string& target, double rho_or_alpha,
                                    const std::string& n, const std::string& t,
                                    const Estimate& e) {
    std::ostringstream os;
    os << target << ',' << num(rho_or_alpha) << ',' << n << ',' << t << ',' << e.method << ','
       << num(e.value) << ',' << num(e.stderr_) << ',' << num(e.ess) << ',' << e.hits << ','
       << e.n_samples << ',' << num(e.truncated_mass) << ',' << e.seed << '\n';
    return os.str();
}

} // namespace cli_detail

inline std::string report_to_csv(const RunConfig& cfg, const ExperimentReport& rep) {
    std::ostringstream os;
    os << cli_detail::comment_header(cfg);
    os << "# experiment=" << rep.name << ", config: " << rep.config_echo << "\n";
    os << "param,measured,predicted,stderr,rule,tol_kind,tol_value,tol_abs,ratio,pass\n";
    for (const auto& r : rep.rows) {
        os << r.param << ',' << cli_detail::num(r.measured) << ',' << cli_detail::num(r.predicted)
           << ',' << cli_detail::num(r.stderr_) << ',' << to_string(r.rule) << ','
           << to_string(r.tol_kind) << ',' << cli_detail::num(r.tol_value) << ','
           << cli_detail::num(r.tol_abs) << ',' << cli_detail::num(r.ratio) << ','
           << (r.pass ? "pass" : "fail") << '\n';
    }
    return os.str();
}

// ── Dispatch ─────────────────────────────────────────────────────────────────

namespace cli_detail {

inline int run_rate(const RunConfig& cfg) {
    const RatePack p = rate_pack(cfg.model, cfg.rate_alpha);
    const auto root = try_solve_cramer(cfg.model);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream os;
    os << comment_header(cfg);
    os << "alpha,lambda,Lambda,rho,sigma,alpha_bar,rate_n,alpha0,rho0,sigma0\n";
    os << num(p.alpha) << ',' << num(p.lambda) << ',' << num(p.log_lambda) << ',' << num(p.rho)
       << ',' << num(p.sigma) << ',' << num(p.alpha_bar) << ',' << num(p.rate_n) << ','
       << num(root ? root->alpha0 : nan) << ',' << num(root ? root->rho0 : nan) << ','
       << num(root ? root->sigma0 : nan) << '\n';
    write_file(cfg, "rate_" + std::to_string(cfg.seed) + ".csv", os.str());
    std::cout << os.str();
    return 0;
}

inline int run_simulate(const RunConfig& cfg) {
    struct Part {
        std::vector<Trajectory> trajs;
    };
    const double alpha = cfg.sim_tilt.value_or(0.0);
    const double log_lambda = cfg.sim_tilt ? env_log_moment(cfg.model, alpha) : 0.0;
    auto work = [&](unsigned, std::uint64_t quota, CounterRng& rng) {
        Part part;
        part.trajs.reserve(quota);
        for (std::uint64_t i = 0; i < quota; ++i)
            part.trajs.push_back(simulate_trajectory(cfg.model, cfg.sim_n, cfg.sim_tilt, rng));
        return part;
    };
    auto merge = [](Part& a, const Part& b) {
        a.trajs.insert(a.trajs.end(), b.trajs.begin(), b.trajs.end());
    };
    const Part all =
        detail::run_workers<Part>(cfg.sim_paths, cfg.workers, cfg.seed, work, merge);

    std::ostringstream os;
    os << comment_header(cfg);
    os << "path_id,k,Z_k,log_A_k,S_k,W_k,weight_k\n";
    for (std::size_t p = 0; p < all.trajs.size(); ++p) {
        const Trajectory& tr = all.trajs[p];
        for (std::size_t k = 0; k < tr.z.size(); ++k) {
            const double wk =
                cfg.sim_tilt ? std::exp(static_cast<double>(k) * log_lambda - alpha * tr.s[k])
                             : 1.0;
            os << p << ',' << k << ',' << tr.z[k] << ','
               << (k == 0 ? "" : num(tr.log_a[k - 1])) << ',' << num(tr.s[k]) << ','
               << tr.w_total[k] << ',' << num(wk) << '\n';
        }
    }
    write_file(cfg, "trajectories_" + std::to_string(cfg.seed) + ".csv", os.str());
    return 0;
}

inline int run_estimate(const RunConfig& cfg) {
    const Method method = cfg.est_method == "naive" ? Method::Naive : Method::Tilted;
    std::ostringstream os;
    os << comment_header(cfg);
    os << "target,rho_or_alpha,n,t,method,value,stderr,ess,hits,n_samples,truncated_mass,seed\n";
    if (cfg.est_target == "TZ" || cfg.est_target == "TW") {
        const PassageKind kind = cfg.est_target == "TZ" ? PassageKind::Z : PassageKind::W;
        const CramerRoot root = solve_cramer(cfg.model);
        for (double log_t : cfg.est_log_t) {
            const Estimate e = estimate_passage_tail(cfg.model, log_t, kind, cfg.est_N,
                                                     cfg.seed, cfg.workers);
            os << estimate_csv_row(cfg.est_target, root.alpha0, "", num(std::exp(log_t)), e);
        }
    } else {
        const LdTarget target = cfg.est_target == "Z" ? LdTarget::Z
                               : cfg.est_target == "Pi" ? LdTarget::Pi
                                                        : LdTarget::W;
        for (std::int64_t n : cfg.est_n) {
            const Estimate e = estimate_ld_prob(cfg.model, target, cfg.est_rho, n, cfg.est_N,
                                                method, cfg.seed, cfg.workers);
            os << estimate_csv_row(cfg.est_target, cfg.est_rho, std::to_string(n), "", e);
        }
    }
    write_file(cfg, "estimate_" + cfg.est_target + "_" + std::to_string(cfg.seed) + ".csv",
               os.str());
    return 0;
}

inline ExperimentConfig experiment_config_from(const RunConfig& cfg) {
    ExperimentConfig ec = ExperimentConfig::defaults(cfg.exp_name);
    ec.seed = cfg.seed;
    ec.workers = cfg.workers;
    if (cfg.exp_use_config_model) ec.model = cfg.model;
    if (cfg.exp_N) ec.n_paths = *cfg.exp_N;
    if (cfg.exp_rho) ec.rho = *cfg.exp_rho;
    if (cfg.exp_rho_lo) ec.rho_lo = *cfg.exp_rho_lo;
    if (cfg.exp_log_t_hi) ec.log_t_hi = *cfg.exp_log_t_hi;
    if (cfg.exp_log_t_lo) ec.log_t_lo = *cfg.exp_log_t_lo;
    if (cfg.exp_D) ec.cutoff_D = *cfg.exp_D;
    if (cfg.exp_n_grid) ec.n_grid = *cfg.exp_n_grid;
    if (cfg.exp_log_t_grid) ec.log_t_grid = *cfg.exp_log_t_grid;
    if (cfg.exp_theta_grid) ec.theta_grid = *cfg.exp_theta_grid;
    if (cfg.exp_theta_n0) ec.theta_n0 = *cfg.exp_theta_n0;
    if (cfg.exp_k_max) ec.k_max = static_cast<std::size_t>(*cfg.exp_k_max);
    if (cfg.exp_traj_len) ec.traj_len = *cfg.exp_traj_len;
    if (cfg.exp_traj_m) ec.traj_m = static_cast<std::size_t>(*cfg.exp_traj_m);
    if (cfg.exp_traj_paths) ec.traj_paths = static_cast<std::uint64_t>(*cfg.exp_traj_paths);
    for (const auto& [k, v] : cfg.exp_tolerances) ec.tolerances[k] = v;
    return ec;
}

inline int run_exp(const RunConfig& cfg) {
    const ExperimentConfig ec = experiment_config_from(cfg);
    const ExperimentReport rep = run_experiment(ec);
    write_file(cfg, "report_" + rep.name + "_" + std::to_string(cfg.seed) + ".csv",
               report_to_csv(cfg, rep));
    std::ostringstream verdict;
    verdict << rep.name << ',' << (rep.pass ? "pass" : "fail") << ',' << num(rep.worst_ratio)
            << '\n';
    write_file(cfg, "verdict_" + rep.name + "_" + std::to_string(cfg.seed) + ".csv",
               verdict.str());
    std::cerr << "experiment " << rep.name << ": " << (rep.pass ? "pass" : "fail")
              << " (worst ratio " << num(rep.worst_ratio) << ", "
              << num(rep.runtime_seconds) << " s)\n";
    return rep.pass ? 0 : 3;
}

} // namespace cli_detail

/// Worker-count precedence: config < BPRE_WORKERS < --workers flag.
inline void apply_worker_override(RunConfig& cfg, const char* env_value,
                                  std::optional<unsigned> flag_value) {
    if (env_value && *env_value) {
        char* end = nullptr;
        const long v = std::strtol(env_value, &end, 10);
        if (end && *end == '\0' && v >= 1) cfg.workers = static_cast<unsigned>(v);
    }
    if (flag_value) cfg.workers = *flag_value;
}

/// Run one parsed config; returns the process exit code (0 or 3); throws on
/// schema/regime/I-O errors.
inline int dispatch(const RunConfig& cfg) {
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
    if (cfg.command == "rate") return cli_detail::run_rate(cfg);
    if (cfg.command == "simulate") return cli_detail::run_simulate(cfg);
    if (cfg.command == "estimate") return cli_detail::run_estimate(cfg);
    if (cfg.command == "experiment") return cli_detail::run_exp(cfg);
    throw SchemaError("unknown command " + cfg.command);
}

/// dispatch wrapped in the exit-code policy.
inline int dispatch_with_exit_codes(const RunConfig& cfg) {
    try {
        return dispatch(cfg);
    } catch (const RegimeError& e) {
        std::cerr << "regime error: " << e.what() << "\n";
        return 2;
    } catch (const NoRootError& e) {
        std::cerr << "regime error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace bpre
