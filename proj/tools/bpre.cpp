// bpre: simulation and rare-event estimation for branching processes in
// random environment.  One JSON config per run; see README for the schema.

#include <bpre/cli.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bpre::IoError("cannot read config file " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bpre: branching processes in random environment. Rate calculus, "
                 "tilted rare-event simulation, and verification experiments."};
    app.require_subcommand(0, 1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--seed", seed_flag, "override the config seed");
    std::optional<unsigned> workers_flag;
    app.add_option("--workers", workers_flag, "override the worker count");
    std::optional<std::string> out_flag;
    app.add_option("--out", out_flag, "override the output directory");
    bool force = false;
    app.add_flag("--force", force, "overwrite existing output files");

    auto* cmd_rate = app.add_subcommand("rate", "print the rate calculus at one alpha");
    auto* cmd_sim = app.add_subcommand("simulate", "dump trajectories as CSV");
    auto* cmd_est = app.add_subcommand("estimate", "estimate rare-event probabilities");
    auto* cmd_exp = app.add_subcommand("experiment", "run a named verification experiment");
    std::string experiment_name;
    cmd_exp->add_option("name", experiment_name, "experiment name (overrides the config)");
    for (auto* sub : {cmd_rate, cmd_sim, cmd_est, cmd_exp}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        bpre::RunConfig cfg = bpre::parse_config(read_file(config_path));
        if (cmd_rate->parsed()) cfg.command = "rate";
        if (cmd_sim->parsed()) cfg.command = "simulate";
        if (cmd_est->parsed()) cfg.command = "estimate";
        if (cmd_exp->parsed()) {
            cfg.command = "experiment";
            if (!experiment_name.empty()) cfg.exp_name = experiment_name;
        }
        if (seed_flag) cfg.seed = *seed_flag;
        if (out_flag) cfg.output_dir = *out_flag;
        if (force) cfg.force = true;
        bpre::apply_worker_override(cfg, std::getenv("BPRE_WORKERS"), workers_flag);
        return bpre::dispatch_with_exit_codes(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
