#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gpmax/config.hpp"
#include "gpmax/runner.hpp"
#include "gpmax/version.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<std::string> backend;
};

void attach_options(CLI::App* sub, CliOptions& opts) {
    sub->add_option("--config", opts.config_path, "key=value configuration file");
    sub->add_option("--seed", opts.seed, "master seed (overrides the config file)");
    sub->add_option("--out", opts.out, "output directory (overrides the config file)");
    sub->add_option("--workers", opts.workers, "worker threads (overrides the config file)");
    sub->add_option("--backend", opts.backend, "sampling backend (overrides the config file)")
        ->check(CLI::IsMember({"cholesky", "fft"}));
}

int run(gpmax::Scenario scenario, const CliOptions& opts) {
    gpmax::ConfigOverrides overrides;
    overrides.scenario = scenario;
    overrides.seed = opts.seed;
    overrides.out = opts.out;
    overrides.workers = opts.workers;
    if (opts.backend) overrides.backend = gpmax::parse_backend(*opts.backend);

    const gpmax::ExperimentConfig config =
        opts.config_path.empty() ? gpmax::parse_config("", overrides)
                                 : gpmax::load_config_file(opts.config_path, overrides);
    const gpmax::ScenarioResult result = gpmax::run_scenario(config);
    for (const std::string& line : result.log_lines) std::cout << line << "\n";
    for (const gpmax::Warning& warning : result.summary.warnings)
        std::cerr << "warning [" << warning.operation << "]: " << warning.message << "\n";
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-field maximum laboratory: simulates correlated Gaussian fields on "
                 "lattices, projects their maximum onto the first chaos, and checks the "
                 "variance identities, growth rates and occupation bounds behind the "
                 "Gaussian limit."};
    app.set_version_flag("--version", std::string(gpmax::kArtifactVersion));
    app.require_subcommand(1);

    const std::pair<const char*, const char*> described[] = {
        {"sample", "draw coupled replicates of the field maximum on the top window"},
        {"experiment", "run the window-growth experiment across the full schedule"},
        {"flatness", "kernel flatness, slow-variation and regime diagnostics"},
        {"verify", "run the identity and bound verification suites"},
        {"report", "re-derive summary statistics from a run directory and compare"},
    };
    const gpmax::Scenario scenarios[] = {gpmax::Scenario::sample, gpmax::Scenario::experiment,
                                         gpmax::Scenario::flatness, gpmax::Scenario::verify,
                                         gpmax::Scenario::report};
    CLI::App* subs[5];
    CliOptions opts[5];
    for (int k = 0; k < 5; ++k) {
        subs[k] = app.add_subcommand(described[k].first, described[k].second);
        attach_options(subs[k], opts[k]);
    }

    CLI11_PARSE(app, argc, argv);

    for (int k = 0; k < 5; ++k) {
        if (!subs[k]->parsed()) continue;
        try {
            return run(scenarios[k], opts[k]);
        } catch (const std::exception& error) {
            std::cerr << "error: " << error.what() << "\n";
            return 2;
        }
    }
    return 2;  // unreachable: require_subcommand(1)
}
