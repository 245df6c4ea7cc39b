#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sublin/experiment.hpp"
#include "sublin/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sub-linear expectation experiment runner"};
    app.set_version_flag("--version", sublin::kLibraryVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string run_dir;
    std::string out_dir;
    int workers = 1;
    std::optional<std::uint64_t> seed;

    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--workers", workers, "worker threads for repetitions")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "master seed override");

    CLI::App* plot = app.add_subcommand("plot", "emit tidy plot CSVs for a run");
    plot->add_option("runDir", run_dir, "directory of a completed run")->required();

    CLI::App* schema = app.add_subcommand("schema", "print the config schema");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            sublin::RunOptions options;
            options.out_dir = out_dir;
            options.workers = workers;
            options.seed_override = seed;
            const sublin::RunOutcome outcome =
                sublin::run_experiment_file(config_path, options);
            for (const std::string& failure : outcome.failures)
                std::cerr << "assertion failed: " << failure << "\n";
            std::cout << "run dir: " << outcome.run_dir << "\n";
            return outcome.exit_code;
        }
        if (plot->parsed()) {
            sublin::emit_plot_data(run_dir);
            std::cout << "plot data written to " << run_dir << "\n";
            return sublin::kExitOk;
        }
        if (schema->parsed()) {
            std::cout << sublin::config_schema().dump(2) << "\n";
            return sublin::kExitOk;
        }
    } catch (const sublin::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return sublin::kExitConfig;
    } catch (const sublin::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return sublin::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sublin::kExitConfig;
    }
    return sublin::kExitOk;
}
