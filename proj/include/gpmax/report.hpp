#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <json.hpp>

namespace gpmax {

/// Insertion-ordered JSON so serialised summaries are byte-stable.
using Json = nlohmann::ordered_json;

struct Warning {
    std::string operation;  ///< the operation that raised it (never empty)
    std::string message;
};

/// Top-level scenario output.  Serialised fields: scenario, version, stages
/// (one JSON blob per stage), warnings, wall_time_seconds (the only field
/// allowed to differ between identical reruns).
struct ReportSummary {
    std::string scenario;
    std::string version;
    Json stages = Json::object();
    std::vector<Warning> warnings;
    double wall_time_seconds = 0.0;

    Json to_json() const;
};

/// One row of replicates.csv; absent optionals serialise as empty fields.
struct ReplicateRow {
    std::uint64_t replicate_id = 0;
    std::optional<double> t;          ///< coupling time, when coupled
    double m = 0.0;                   ///< M, the field maximum
    Eigen::Index i = 0;               ///< I, the argmax site
    std::optional<double> m_t;        ///< maximum of the coupled field
    std::optional<Eigen::Index> i_t;  ///< its argmax
    std::optional<double> q1;         ///< first-chaos value, when coefficients exist
};

inline constexpr const char* kCsvHeader = "replicate_id,t,M,I,M_t,I_t,Q1";

/// Shortest exact decimal form of a double (%.17g); strtod round-trips it.
std::string format_double(double value);

std::string format_csv(const std::vector<ReplicateRow>& rows);

/// Strict parser for format_csv output: exact header, exactly 7 fields per
/// row; throws ParseError with the 1-based line number.
std::vector<ReplicateRow> parse_csv(const std::string& text);

/// Writes content to path via a temporary name plus rename, creating parent
/// directories; IoError on failure.  Failed runs never leave partial files.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);  ///< IoError when unreadable

void write_csv_file(const std::string& path, const std::vector<ReplicateRow>& rows);
std::vector<ReplicateRow> read_csv_file(const std::string& path);

void write_summary_file(const std::string& path, const ReportSummary& summary);
Json read_json_file(const std::string& path);

/// Summary statistics that are a pure function of the CSV rows (the
/// round-trip contract): count plus mean/variance/standard errors of M, and
/// of the coupled and Q1 columns where present.
Json replicate_stats(const std::vector<ReplicateRow>& rows);

/// Relative comparison of two replicate_stats blocks: same keys, every
/// number within rel_tol relatively.  On mismatch returns false and, when
/// given, describes the first offending key.
bool stats_match(const Json& expected, const Json& actual, double rel_tol,
                 std::string* mismatch = nullptr);

}  // namespace gpmax
