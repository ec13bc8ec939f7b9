#pragma once

namespace gpmax {

/// Artifact version recorded in every ReportSummary.
inline constexpr const char* kArtifactVersion = "gpmax 0.1.0";

}  // namespace gpmax
