#pragma once

#include <string>
#include <vector>

#include "gpmax/config.hpp"
#include "gpmax/report.hpp"

namespace gpmax {

struct ScenarioResult {
    ReportSummary summary;
    int exit_code = 0;                   ///< 0 = success; verify: failed suite count
    std::vector<std::string> log_lines;  ///< one line per stage/suite, for the CLI
};

/// Dispatches on config.scenario.  The file-writing scenarios (sample,
/// experiment, flatness, verify) compute everything first, then write
/// replicates.csv, plots/*.svg and finally summary.json into config.out_dir
/// (atomic temp+rename each), so a failed run leaves no summary.json.  The
/// `report` scenario instead reads an existing output directory and
/// re-derives the summary's replicate_stats block from the CSV, failing on
/// any relative deviation above 1e-12.
ScenarioResult run_scenario(const ExperimentConfig& config);

}  // namespace gpmax
