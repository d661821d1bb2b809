#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsac/checkpoint.hpp"
#include "dsac/errors.hpp"
#include "dsac/harness/config.hpp"
#include "dsac/harness/experiment.hpp"
#include "dsac/harness/metrics.hpp"
#include "dsac/harness/oracle_check.hpp"
#include "dsac/harness/plot.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitOracleCap = 3;

namespace fs = std::filesystem;
using dsac::harness::RunConfig;

RunConfig load_with_overrides(const std::string& path, const std::optional<std::uint64_t>& seed,
                              const std::optional<std::string>& out) {
    RunConfig cfg = RunConfig::load(path);
    if (seed) cfg.section("run").set("seed", std::to_string(*seed));
    if (out) cfg.section("run").set("output_dir", *out);
    return cfg;
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out, const std::optional<std::string>& resume) {
    std::optional<dsac::harness::Experiment> ex;
    try {
        ex.emplace(dsac::harness::build_experiment(load_with_overrides(config_path, seed, out)));
    } catch (const dsac::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        const fs::path dir = ex->run.output_dir;
        fs::create_directories(dir);
        {
            std::ofstream echo(dir / "config-resolved.echo");
            echo << ex->resolved.serialize();
        }
        const dsac::DsacTrainer trainer = ex->trainer();
        dsac::TrainerState state = resume ? dsac::load_checkpoint(*resume) : trainer.initial_state();
        if (resume && state.seed != ex->run.seed)
            throw dsac::CheckpointError("checkpoint seed " + std::to_string(state.seed) +
                                        " does not match the run seed " + std::to_string(ex->run.seed));
        std::ofstream csv(dir / "metrics.csv");
        dsac::harness::MetricsWriter writer(csv, ex->mdp.n_agents(), ex->run.metrics_interval);
        const std::size_t every = ex->run.checkpoint_interval;
        auto result = trainer.train(std::move(state), {}, [&](const dsac::TrainerState& s, const dsac::IterationMetrics& m) {
            writer.write(m);
            if (every > 0 && s.iteration % every == 0)
                dsac::save_checkpoint((dir / ("checkpoint_" + std::to_string(s.iteration) + ".txt")).string(), s);
        });
        dsac::save_checkpoint((dir / "checkpoint_final.txt").string(), result.final_state);
        std::cout << "ran " << result.metrics.size() << " iterations; outputs in " << dir.string() << '\n';
        return kExitOk;
    } catch (const dsac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_oracle_check(const std::string& config_path) {
    std::optional<dsac::harness::Experiment> ex;
    try {
        ex.emplace(dsac::harness::build_experiment(RunConfig::load(config_path)));
    } catch (const dsac::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        bool all = true;
        for (const auto& r : dsac::harness::run_oracle_checks(*ex)) {
            std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
            all = all && r.passed;
        }
        return all ? kExitOk : kExitRuntime;
    } catch (const dsac::OracleError& e) {
        std::cerr << "oracle error: " << e.what() << '\n';
        return kExitOracleCap;
    } catch (const std::exception& e) {
        std::cerr << "oracle-check failed: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_plot(const std::string& metrics, const std::vector<std::string>& columns, const std::string& out,
             std::size_t window) {
    try {
        std::ifstream in(metrics);
        if (!in) throw dsac::ConfigError("cannot read '" + metrics + "'");
        std::vector<std::string> names;
        for (const auto& c : columns)
            for (auto& part : dsac::harness::split_list(c, ',')) names.push_back(part);
        const std::string svg = dsac::harness::plot_columns(dsac::harness::read_csv(in), names, window);
        std::ofstream file(out);
        if (!file) {
            std::cerr << "cannot write '" << out << "'\n";
            return kExitRuntime;
        }
        file << svg;
        return kExitOk;
    } catch (const dsac::ConfigError& e) {
        std::cerr << "plot error: " << e.what() << '\n';
        return kExitUsage;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized shadow-reward actor-critic"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir, resume;
    auto* run = app.add_subcommand("run", "Train from a config; writes metrics.csv, config-resolved.echo, checkpoints");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--seed", seed, "Override [run] seed");
    run->add_option("--out", out_dir, "Override [run] output_dir");
    run->add_option("--resume", resume, "Continue from a checkpoint");

    std::string oracle_config;
    auto* check = app.add_subcommand("oracle-check", "Run the exact-oracle invariant battery");
    check->add_option("--config", oracle_config, "Config file")->required();

    std::string metrics, svg_out;
    std::vector<std::string> columns;
    std::size_t window = 50;
    auto* plot = app.add_subcommand("plot", "Running-average line chart of metrics columns");
    plot->add_option("--metrics", metrics, "metrics.csv")->required();
    plot->add_option("--columns", columns, "Column names (comma separated or repeated)")->required();
    plot->add_option("--out", svg_out, "Output SVG")->required();
    plot->add_option("--window", window, "Running-average window")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*run) return cmd_run(config_path, seed, out_dir, resume);
    if (*check) return cmd_oracle_check(oracle_config);
    return cmd_plot(metrics, columns, svg_out, window);
}
