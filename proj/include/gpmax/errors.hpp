#pragma once

#include <stdexcept>
#include <string>

namespace gpmax {

/// Covariance matrix whose smallest eigenvalue falls below the relative
/// tolerance floor; signals an invalid kernel family/parameter combination.
struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

/// Cholesky factorization failed even after jitter escalation.
struct FactorizationFailure : std::runtime_error {
    explicit FactorizationFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Circulant embedding kept significant negative spectral mass after all
/// permitted domain doublings.
struct EmbeddingFailure : std::runtime_error {
    explicit EmbeddingFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Config file is syntactically malformed (reports the 1-based line number).
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, int line_number)
        : std::runtime_error("line " + std::to_string(line_number) + ": " + what),
          line(line_number) {}
    int line;
};

/// Config file parsed but a field value violates its contract.
struct ValidationError : std::runtime_error {
    ValidationError(const std::string& field_name, const std::string& what)
        : std::runtime_error("field '" + field_name + "': " + what), field(field_name) {}
    std::string field;
};

/// Filesystem failure while writing scenario outputs.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gpmax
