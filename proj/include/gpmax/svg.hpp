#pragma once

#include <string>
#include <vector>

namespace gpmax {

/// Self-contained SVG emitters (no external references, labelled axes).
/// All three validate before touching the filesystem: empty data throws
/// std::invalid_argument and no file is written; write failures are IoError.
/// Files are written atomically (temp name + rename).

void emit_svg_histogram(const std::vector<double>& data, const std::string& title,
                        const std::string& x_label, const std::string& path);

/// Normal QQ plot of the standardised sample against N(0,1) quantiles, with
/// the y=x diagonal for reference.
void emit_svg_qq_normal(const std::vector<double>& data, const std::string& title,
                        const std::string& path);

/// Polyline with point markers; a single point renders as a lone marker.
void emit_svg_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::string& title, const std::string& x_label,
                   const std::string& y_label, const std::string& path);

}  // namespace gpmax
