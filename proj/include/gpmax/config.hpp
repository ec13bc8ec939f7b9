#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpmax/kernels.hpp"
#include "gpmax/sampling.hpp"

namespace gpmax {

enum class Scenario { sample, experiment, flatness, verify, report };

const char* scenario_name(Scenario scenario);
Scenario parse_scenario(const std::string& text);

/// Fully validated run description.  Parsed from `key=value` text (one key
/// per line, `#` comments, unknown and duplicate keys are hard errors);
/// command-line overrides take precedence over file values, which take
/// precedence over the defaults below.
struct ExperimentConfig {
    Scenario scenario = Scenario::sample;
    KernelSpec kernel;                ///< meaningful when has_kernel
    bool has_kernel = false;
    int dimension = 1;
    std::vector<double> r_schedule;   ///< strictly increasing window sides
    double mesh = 1.0;
    std::size_t replicates = 1000;       ///< main per-stage budget (>= 100)
    std::size_t coeff_replicates = 0;    ///< coefficient batch; 0 = replicates
    std::uint64_t master_seed = 0;
    Backend backend = Backend::automatic;
    std::string out_dir = "out";
    int workers = 0;                  ///< 0 = GP_EXTREMES_WORKERS or hardware
    double eta = 0.1;                 ///< flatness tolerance
    double beta = 0.17;               ///< flatness window exponent
    double v_max = 1e8;               ///< flatness scale ceiling
    double deloc_beta = 0.5;          ///< delocalisation window exponent

    std::size_t coeff_budget() const { return coeff_replicates ? coeff_replicates : replicates; }
};

/// Values supplied on the command line; they beat file values.
struct ConfigOverrides {
    std::optional<Scenario> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<Backend> backend;
};

/// Recognised keys: scenario, family, a, mu, nugget, deformation, d, mesh,
/// r_schedule, replicates, coeff_replicates, seed, backend, out, workers,
/// eta, beta, v_max, deloc_beta.
/// Throws ParseError (syntax, unknown key, duplicate key — with line number)
/// or ValidationError (named field out of contract; a missing mandatory seed
/// reports as field "seed").
ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& overrides);
ExperimentConfig parse_config(const std::string& text);

/// Reads and parses a config file; IoError when unreadable.
ExperimentConfig load_config_file(const std::string& path, const ConfigOverrides& overrides);

/// The covariance model described by the config's kernel spec and dimension.
CovarianceModel config_model(const ExperimentConfig& config);

}  // namespace gpmax
