#include "gpmax/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gpmax/errors.hpp"

namespace gpmax {

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

/// Raw key=value pairs plus the line each key appeared on.
struct RawConfig {
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;

    bool has(const std::string& key) const { return values.count(key) > 0; }
};

const char* const kKnownKeys[] = {"scenario",    "family",  "a",        "mu",
                                  "nugget",      "deformation", "d",    "mesh",
                                  "r_schedule",  "replicates",  "coeff_replicates",
                                  "seed",        "backend", "out",      "workers",
                                  "eta",         "beta",    "v_max",    "deloc_beta"};

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream stream(text);
    std::string line;
    int number = 0;
    while (std::getline(stream, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value, got '" + line + "'", number);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", number);
        if (value.empty()) throw ParseError("empty value for key '" + key + "'", number);
        if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys))
            throw ParseError("unknown key '" + key + "'", number);
        if (raw.values.count(key))
            throw ParseError("duplicate key '" + key + "' (first on line " +
                                 std::to_string(raw.lines[key]) + ")",
                             number);
        raw.values[key] = value;
        raw.lines[key] = number;
    }
    return raw;
}

double to_double(const std::string& field, const std::string& value) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ValidationError(field, "'" + value + "' is not a number");
    }
    if (used != value.size()) throw ValidationError(field, "'" + value + "' is not a number");
    return parsed;
}

std::uint64_t to_u64(const std::string& field, const std::string& value) {
    if (value.empty() || value[0] == '-')
        throw ValidationError(field, "'" + value + "' is not an unsigned integer");
    std::size_t used = 0;
    std::uint64_t parsed = 0;
    try {
        parsed = std::stoull(value, &used);
    } catch (const std::exception&) {
        throw ValidationError(field, "'" + value + "' is not an unsigned integer");
    }
    if (used != value.size())
        throw ValidationError(field, "'" + value + "' is not an unsigned integer");
    return parsed;
}

int to_int(const std::string& field, const std::string& value) {
    std::size_t used = 0;
    int parsed = 0;
    try {
        parsed = std::stoi(value, &used);
    } catch (const std::exception&) {
        throw ValidationError(field, "'" + value + "' is not an integer");
    }
    if (used != value.size()) throw ValidationError(field, "'" + value + "' is not an integer");
    return parsed;
}

std::vector<double> to_schedule(const std::string& value) {
    std::vector<double> schedule;
    std::istringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ValidationError("r_schedule", "empty entry in the list");
        schedule.push_back(to_double("r_schedule", item));
    }
    if (schedule.empty()) throw ValidationError("r_schedule", "empty schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 0.0)) throw ValidationError("r_schedule", "window sides must be positive");
        if (i > 0 && !(schedule[i] > schedule[i - 1]))
            throw ValidationError("r_schedule", "schedule must be strictly increasing");
    }
    return schedule;
}

KernelSpec build_kernel(const RawConfig& raw) {
    const std::string family = raw.values.at("family");
    const bool has_a = raw.has("a");
    const bool has_mu = raw.has("mu");
    KernelSpec spec;
    try {
        if (family == "iid-delta") {
            if (has_a || has_mu)
                throw ValidationError(has_a ? "a" : "mu", "not a parameter of iid-delta");
            spec.profile = KernelProfile::iid_delta();
        } else if (family == "log-power") {
            if (!has_a) throw ValidationError("a", "log-power requires a");
            if (has_mu) throw ValidationError("mu", "not a parameter of log-power");
            spec.profile = KernelProfile::log_power(to_double("a", raw.values.at("a")));
        } else if (family == "boundary-log") {
            if (!has_mu) throw ValidationError("mu", "boundary-log requires mu");
            if (has_a) throw ValidationError("a", "not a parameter of boundary-log");
            spec.profile = KernelProfile::boundary_log(to_double("mu", raw.values.at("mu")));
        } else if (family == "power-law") {
            if (!has_a) throw ValidationError("a", "power-law requires a");
            if (has_mu) throw ValidationError("mu", "not a parameter of power-law");
            spec.profile = KernelProfile::power_law(to_double("a", raw.values.at("a")));
        } else if (family == "exponential") {
            if (has_a || has_mu)
                throw ValidationError(has_a ? "a" : "mu", "not a parameter of exponential");
            spec.profile = KernelProfile::exponential();
        } else {
            throw ValidationError("family", "unknown family '" + family + "'");
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::invalid_argument& error) {
        // KernelProfile factories reject out-of-range parameters.
        throw ValidationError(family == "boundary-log" ? "mu" : "a", error.what());
    }
    if (raw.has("nugget")) {
        const double nugget = to_double("nugget", raw.values.at("nugget"));
        if (!(nugget >= 0.0 && nugget < 1.0))
            throw ValidationError("nugget", "must lie in [0, 1)");
        spec.nugget = nugget;
    }
    if (raw.has("deformation")) {
        const std::string& kind = raw.values.at("deformation");
        if (kind == "none")
            spec.deformation = DeformationKind::none;
        else if (kind == "sine")
            spec.deformation = DeformationKind::sine;
        else
            throw ValidationError("deformation", "unknown deformation '" + kind + "'");
    }
    return spec;
}

}  // namespace

const char* scenario_name(Scenario scenario) {
    switch (scenario) {
        case Scenario::sample: return "sample";
        case Scenario::experiment: return "experiment";
        case Scenario::flatness: return "flatness";
        case Scenario::verify: return "verify";
        case Scenario::report: return "report";
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& text) {
    if (text == "sample") return Scenario::sample;
    if (text == "experiment") return Scenario::experiment;
    if (text == "flatness") return Scenario::flatness;
    if (text == "verify") return Scenario::verify;
    if (text == "report") return Scenario::report;
    throw ValidationError("scenario", "unknown scenario '" + text + "'");
}

ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& overrides) {
    const RawConfig raw = tokenize(text);
    ExperimentConfig config;

    if (overrides.scenario)
        config.scenario = *overrides.scenario;
    else if (raw.has("scenario"))
        config.scenario = parse_scenario(raw.values.at("scenario"));
    else
        throw ValidationError("scenario", "missing (set the key or use a subcommand)");

    if (raw.has("family")) {
        config.kernel = build_kernel(raw);
        config.has_kernel = true;
    } else {
        for (const char* dependent : {"a", "mu", "nugget", "deformation"})
            if (raw.has(dependent)) throw ValidationError(dependent, "requires a family key");
    }

    if (raw.has("d")) {
        config.dimension = to_int("d", raw.values.at("d"));
        if (config.dimension != 1 && config.dimension != 2)
            throw ValidationError("d", "dimension must be 1 or 2");
    }
    if (raw.has("mesh")) {
        config.mesh = to_double("mesh", raw.values.at("mesh"));
        if (!(config.mesh > 0.0)) throw ValidationError("mesh", "must be positive");
    }
    if (raw.has("r_schedule")) config.r_schedule = to_schedule(raw.values.at("r_schedule"));
    if (raw.has("replicates")) {
        const std::uint64_t budget = to_u64("replicates", raw.values.at("replicates"));
        if (budget < 100) throw ValidationError("replicates", "budgets must be at least 100");
        config.replicates = static_cast<std::size_t>(budget);
    }
    if (raw.has("coeff_replicates")) {
        const std::uint64_t budget = to_u64("coeff_replicates", raw.values.at("coeff_replicates"));
        if (budget < 100) throw ValidationError("coeff_replicates", "budgets must be at least 100");
        config.coeff_replicates = static_cast<std::size_t>(budget);
    }

    if (overrides.seed)
        config.master_seed = *overrides.seed;
    else if (raw.has("seed"))
        config.master_seed = to_u64("seed", raw.values.at("seed"));
    else
        throw ValidationError("seed", "mandatory — no wall-clock default");

    if (overrides.backend)
        config.backend = *overrides.backend;
    else if (raw.has("backend")) {
        try {
            config.backend = parse_backend(raw.values.at("backend"));
        } catch (const std::invalid_argument& error) {
            throw ValidationError("backend", error.what());
        }
    }

    if (overrides.out)
        config.out_dir = *overrides.out;
    else if (raw.has("out"))
        config.out_dir = raw.values.at("out");

    if (overrides.workers)
        config.workers = *overrides.workers;
    else if (raw.has("workers"))
        config.workers = to_int("workers", raw.values.at("workers"));
    if (config.workers < 0) throw ValidationError("workers", "must be nonnegative");

    if (raw.has("eta")) {
        config.eta = to_double("eta", raw.values.at("eta"));
        if (!(config.eta > 0.0)) throw ValidationError("eta", "must be positive");
    }
    if (raw.has("beta")) {
        config.beta = to_double("beta", raw.values.at("beta"));
        if (!(config.beta > 0.0 && config.beta < 1.0))
            throw ValidationError("beta", "must lie in (0,1)");
    }
    if (raw.has("v_max")) {
        config.v_max = to_double("v_max", raw.values.at("v_max"));
        if (!(config.v_max >= 1e6)) throw ValidationError("v_max", "must be at least 1e6");
    }
    if (raw.has("deloc_beta")) {
        config.deloc_beta = to_double("deloc_beta", raw.values.at("deloc_beta"));
        if (!(config.deloc_beta > 0.0 && config.deloc_beta < 1.0))
            throw ValidationError("deloc_beta", "must lie in (0,1)");
    }

    // Scenario-specific completeness.
    const bool needs_model = config.scenario == Scenario::sample ||
                             config.scenario == Scenario::experiment ||
                             config.scenario == Scenario::flatness;
    if (needs_model && !config.has_kernel)
        throw ValidationError("family", std::string("required for the ") +
                                            scenario_name(config.scenario) + " scenario");
    const bool needs_schedule =
        config.scenario == Scenario::sample || config.scenario == Scenario::experiment;
    if (needs_schedule && config.r_schedule.empty())
        throw ValidationError("r_schedule", std::string("required for the ") +
                                                scenario_name(config.scenario) + " scenario");
    return config;
}

ExperimentConfig parse_config(const std::string& text) { return parse_config(text, {}); }

ExperimentConfig load_config_file(const std::string& path, const ConfigOverrides& overrides) {
    std::ifstream stream(path);
    if (!stream) throw IoError("cannot read config file '" + path + "'");
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return parse_config(buffer.str(), overrides);
}

CovarianceModel config_model(const ExperimentConfig& config) {
    if (!config.has_kernel) throw ValidationError("family", "config carries no kernel");
    return CovarianceModel(config.kernel.profile, config.dimension, config.kernel.deformation,
                           config.kernel.nugget);
}

}  // namespace gpmax
