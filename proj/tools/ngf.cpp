// ngf: experiment driver.
//
//   ngf run <config> [--output DIR] [--workers N]
//   ngf preset <name> [--emit-config] [--output DIR]
//   ngf diagnose <trajectory.csv>
//
// Failures print one JSON line on stderr and exit nonzero
// (2: configuration, 1: runtime).

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <string>

#include "ngf/config.hpp"
#include "ngf/driver.hpp"

namespace {

int fail(std::string_view kind, const std::vector<std::string>& errors, int code) {
    nlohmann::json j{{"status", "error"}, {"kind", kind}, {"errors", errors}};
    std::cerr << j.dump() << std::endl;
    return code;
}

int execute(ngf::RunConfig cfg, const std::string& output, int workers) {
    ngf::apply_environment(cfg);
    if (!output.empty()) cfg.output_dir = output;
    if (workers > 0) cfg.workers = workers;
    const auto res = ngf::run(cfg);
    nlohmann::json j{{"status", "ok"}, {"mode", ngf::to_string(cfg.mode)}, {"output_dir", cfg.output_dir}};
    std::vector<std::string> files;
    for (const auto& f : res.files) files.push_back(f.filename().string());
    j["files"] = files;
    std::cout << j.dump() << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural Galerkin filtering for parameterized evolution equations"};
    app.require_subcommand(1);

    std::string config_path, output, preset_name, trajectory_path;
    int workers = 0;
    bool emit = false;

    auto* run_cmd = app.add_subcommand("run", "execute a run configuration");
    run_cmd->add_option("config", config_path, "flat key = value config file")->required();
    run_cmd->add_option("--output", output, "override output_dir");
    run_cmd->add_option("--workers", workers, "cap on assembly worker threads");

    auto* preset_cmd = app.add_subcommand("preset", "run (or print) one of the KdV sensor scenarios");
    preset_cmd->add_option("name", preset_name, "paper-m100 | paper-m10-uniform | paper-m10-support | paper-m10-moving")
        ->required();
    preset_cmd->add_flag("--emit-config", emit, "print the resolved configuration instead of running");
    preset_cmd->add_option("--output", output, "override output_dir");
    preset_cmd->add_option("--workers", workers, "cap on assembly worker threads");

    auto* diag_cmd = app.add_subcommand("diagnose", "summarize a trajectory.csv");
    diag_cmd->add_option("trajectory", trajectory_path, "trajectory.csv from a run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return execute(ngf::load_config(config_path), output, workers);
        if (*preset_cmd) {
            auto cfg = ngf::preset(preset_name);
            if (emit) {
                std::cout << ngf::emit_config(cfg);
                return 0;
            }
            return execute(std::move(cfg), output, workers);
        }
        if (*diag_cmd) {
            const auto table = ngf::csv::read_file(trajectory_path);
            ngf::csv::Writer w(std::cout);
            w.row("metric", "value");
            for (const auto& [k, v] : ngf::diagnose_trajectory(table)) w.row(k, v);
            return 0;
        }
    } catch (const ngf::ConfigErrors& e) {
        return fail("config", e.problems(), 2);
    } catch (const std::exception& e) {
        return fail("runtime", {e.what()}, 1);
    }
    return 0;
}
