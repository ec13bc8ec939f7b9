#include "gpmax/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gpmax/errors.hpp"
#include "gpmax/stats.hpp"

namespace gpmax {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

double parse_field_double(const std::string& field, int line) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &used);
    } catch (const std::exception&) {
        throw ParseError("'" + field + "' is not a number", line);
    }
    if (used != field.size()) throw ParseError("'" + field + "' is not a number", line);
    return value;
}

long long parse_field_int(const std::string& field, int line) {
    std::size_t used = 0;
    long long value = 0;
    try {
        value = std::stoll(field, &used);
    } catch (const std::exception&) {
        throw ParseError("'" + field + "' is not an integer", line);
    }
    if (used != field.size()) throw ParseError("'" + field + "' is not an integer", line);
    return value;
}

void append_summary(Json& block, const std::string& prefix, const std::vector<double>& sample) {
    const MomentSummary s = summarize(sample);
    block["mean_" + prefix] = s.mean;
    block["var_" + prefix] = s.variance;
    block["se_mean_" + prefix] = s.se_mean;
    block["se_var_" + prefix] = s.se_variance;
}

}  // namespace

Json ReportSummary::to_json() const {
    Json out = Json::object();
    out["scenario"] = scenario;
    out["version"] = version;
    out["stages"] = stages;
    Json warn = Json::array();
    for (const Warning& w : warnings)
        warn.push_back(Json{{"operation", w.operation}, {"message", w.message}});
    out["warnings"] = warn;
    out["wall_time_seconds"] = wall_time_seconds;
    return out;
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string format_csv(const std::vector<ReplicateRow>& rows) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const ReplicateRow& row : rows) {
        out << row.replicate_id << ',';
        if (row.t) out << format_double(*row.t);
        out << ',' << format_double(row.m) << ',' << row.i << ',';
        if (row.m_t) out << format_double(*row.m_t);
        out << ',';
        if (row.i_t) out << *row.i_t;
        out << ',';
        if (row.q1) out << format_double(*row.q1);
        out << '\n';
    }
    return out.str();
}

std::vector<ReplicateRow> parse_csv(const std::string& text) {
    std::istringstream stream(text);
    std::string line;
    int number = 0;
    if (!std::getline(stream, line)) throw ParseError("missing header", 1);
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw ParseError(std::string("header must be exactly '") + kCsvHeader + "'", 1);

    std::vector<ReplicateRow> rows;
    while (std::getline(stream, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 7)
            throw ParseError("expected 7 fields, got " + std::to_string(fields.size()), number);
        ReplicateRow row;
        const long long id = parse_field_int(fields[0], number);
        if (id < 0) throw ParseError("replicate_id must be nonnegative", number);
        row.replicate_id = static_cast<std::uint64_t>(id);
        if (!fields[1].empty()) row.t = parse_field_double(fields[1], number);
        if (fields[2].empty()) throw ParseError("M must not be empty", number);
        row.m = parse_field_double(fields[2], number);
        if (fields[3].empty()) throw ParseError("I must not be empty", number);
        row.i = static_cast<Eigen::Index>(parse_field_int(fields[3], number));
        if (!fields[4].empty()) row.m_t = parse_field_double(fields[4], number);
        if (!fields[5].empty())
            row.i_t = static_cast<Eigen::Index>(parse_field_int(fields[5], number));
        if (!fields[6].empty()) row.q1 = parse_field_double(fields[6], number);
        rows.push_back(row);
    }
    return rows;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " +
                              ec.message());
    }
    const fs::path temp = target.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + temp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            fs::remove(temp, ec);
            throw IoError("write to '" + temp.string() + "' failed");
        }
    }
    fs::rename(temp, target, ec);
    if (ec) {
        fs::remove(temp, ec);
        throw IoError("cannot rename into '" + path + "': " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_csv_file(const std::string& path, const std::vector<ReplicateRow>& rows) {
    write_file_atomic(path, format_csv(rows));
}

std::vector<ReplicateRow> read_csv_file(const std::string& path) {
    return parse_csv(read_file(path));
}

void write_summary_file(const std::string& path, const ReportSummary& summary) {
    write_file_atomic(path, summary.to_json().dump(2) + "\n");
}

Json read_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& error) {
        throw ParseError(std::string("invalid JSON in '") + path + "': " + error.what(), 1);
    }
}

Json replicate_stats(const std::vector<ReplicateRow>& rows) {
    Json block = Json::object();
    block["count"] = rows.size();
    if (rows.empty()) return block;

    std::vector<double> m;
    std::vector<double> ts, mt, q1;
    m.reserve(rows.size());
    for (const ReplicateRow& row : rows) {
        m.push_back(row.m);
        if (row.t) ts.push_back(*row.t);
        if (row.m_t) mt.push_back(*row.m_t);
        if (row.q1) q1.push_back(*row.q1);
    }
    append_summary(block, "m", m);
    block["coupled_count"] = mt.size();
    if (mt.size() >= 2) {
        block["mean_t"] = mean_of(ts);
        append_summary(block, "m_t", mt);
    }
    block["q1_count"] = q1.size();
    if (q1.size() >= 2) append_summary(block, "q1", q1);
    return block;
}

bool stats_match(const Json& expected, const Json& actual, double rel_tol, std::string* mismatch) {
    const auto fail = [&](const std::string& why) {
        if (mismatch) *mismatch = why;
        return false;
    };
    if (!expected.is_object() || !actual.is_object()) return fail("stats blocks must be objects");
    if (expected.size() != actual.size())
        return fail("key sets differ (" + std::to_string(expected.size()) + " vs " +
                    std::to_string(actual.size()) + ")");
    for (auto it = expected.begin(); it != expected.end(); ++it) {
        if (!actual.contains(it.key())) return fail("missing key '" + it.key() + "'");
        const Json& a = it.value();
        const Json& b = actual.at(it.key());
        if (!a.is_number() || !b.is_number())
            return fail("key '" + it.key() + "' is not numeric");
        const double x = a.get<double>();
        const double y = b.get<double>();
        if (x == y) continue;
        const double scale = std::max(std::abs(x), std::abs(y));
        if (std::abs(x - y) > rel_tol * scale)
            return fail("key '" + it.key() + "': " + format_double(x) + " vs " + format_double(y));
    }
    return true;
}

}  // namespace gpmax
