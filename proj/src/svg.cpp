#include "gpmax/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "gpmax/report.hpp"
#include "gpmax/stats.hpp"

namespace gpmax {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;

std::string escape_xml(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (const char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string px(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

std::string tick_label(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4g", value);
    return buffer;
}

/// Linear data-to-pixel frame over the plot rectangle.
struct Frame {
    double left = 70.0, right = 616.0, bottom = 360.0, top = 56.0;
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

    void fit_x(double lo, double hi) {
        if (!(hi > lo)) {
            const double pad = std::max(1.0, std::abs(lo)) * 0.1;
            lo -= pad;
            hi += pad;
        }
        xmin = lo;
        xmax = hi;
    }
    void fit_y(double lo, double hi) {
        if (!(hi > lo)) {
            const double pad = std::max(1.0, std::abs(lo)) * 0.1;
            lo -= pad;
            hi += pad;
        }
        ymin = lo;
        ymax = hi;
    }
    double x(double v) const { return left + (v - xmin) / (xmax - xmin) * (right - left); }
    double y(double v) const { return bottom - (v - ymin) / (ymax - ymin) * (bottom - top); }
};

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"#ffffff\"/>\n"
        << "<text x=\"" << kWidth / 2
        << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << escape_xml(title) << "</text>\n";
}

void draw_axes(std::ostringstream& out, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
    out << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(f.bottom) << "\" x2=\""
        << px(f.right) << "\" y2=\"" << px(f.bottom) << "\" stroke=\"#000\"/>\n";
    out << "<line x1=\"" << px(f.left) << "\" y1=\"" << px(f.bottom) << "\" x2=\""
        << px(f.left) << "\" y2=\"" << px(f.top) << "\" stroke=\"#000\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = f.xmin + (f.xmax - f.xmin) * k / 4.0;
        const double yv = f.ymin + (f.ymax - f.ymin) * k / 4.0;
        const double xp = f.x(xv);
        const double yp = f.y(yv);
        out << "<line x1=\"" << px(xp) << "\" y1=\"" << px(f.bottom) << "\" x2=\"" << px(xp)
            << "\" y2=\"" << px(f.bottom + 5) << "\" stroke=\"#000\"/>\n";
        out << "<text x=\"" << px(xp) << "\" y=\"" << px(f.bottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(xv) << "</text>\n";
        out << "<line x1=\"" << px(f.left - 5) << "\" y1=\"" << px(yp) << "\" x2=\""
            << px(f.left) << "\" y2=\"" << px(yp) << "\" stroke=\"#000\"/>\n";
        out << "<text x=\"" << px(f.left - 8) << "\" y=\"" << px(yp + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << px((f.left + f.right) / 2) << "\" y=\"" << px(kHeight - 14)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape_xml(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << px((f.top + f.bottom) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << px((f.top + f.bottom) / 2) << ")\">"
        << escape_xml(y_label) << "</text>\n";
}

}  // namespace

void emit_svg_histogram(const std::vector<double>& data, const std::string& title,
                        const std::string& x_label, const std::string& path) {
    if (data.empty()) throw std::invalid_argument("histogram needs nonempty data");
    const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (!(hi > lo)) {
        const double pad = std::max(1.0, std::abs(lo)) * 0.05;
        lo -= pad;
        hi += pad;
    }
    const int bins = std::clamp(static_cast<int>(std::lround(std::sqrt(
                                    static_cast<double>(data.size())))),
                                std::min<int>(8, static_cast<int>(data.size())), 64);
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (const double v : data) {
        int bin = static_cast<int>((v - lo) / (hi - lo) * bins);
        bin = std::clamp(bin, 0, bins - 1);
        ++counts[static_cast<std::size_t>(bin)];
    }
    const int peak = *std::max_element(counts.begin(), counts.end());

    Frame f;
    f.fit_x(lo, hi);
    f.fit_y(0.0, static_cast<double>(peak));
    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, f, x_label, "count");
    const double bar_w = (f.right - f.left) / bins;
    for (int b = 0; b < bins; ++b) {
        const double h = f.bottom - f.y(static_cast<double>(counts[static_cast<std::size_t>(b)]));
        if (h <= 0.0) continue;
        out << "<rect x=\"" << px(f.left + b * bar_w) << "\" y=\"" << px(f.bottom - h)
            << "\" width=\"" << px(std::max(1.0, bar_w - 1.0)) << "\" height=\"" << px(h)
            << "\" fill=\"#4878a8\"/>\n";
    }
    out << "</svg>\n";
    write_file_atomic(path, out.str());
}

void emit_svg_qq_normal(const std::vector<double>& data, const std::string& title,
                        const std::string& path) {
    if (data.empty()) throw std::invalid_argument("qq plot needs nonempty data");
    const auto points = qq_points_normal(data);
    double lo = points.front().first;
    double hi = points.back().first;
    for (const auto& [theo, obs] : points) {
        lo = std::min({lo, theo, obs});
        hi = std::max({hi, theo, obs});
    }
    Frame f;
    f.fit_x(lo, hi);
    f.fit_y(lo, hi);
    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, f, "normal quantile", "sample quantile");
    out << "<line x1=\"" << px(f.x(f.xmin)) << "\" y1=\"" << px(f.y(f.xmin)) << "\" x2=\""
        << px(f.x(f.xmax)) << "\" y2=\"" << px(f.y(f.xmax))
        << "\" stroke=\"#b04030\" stroke-dasharray=\"4 3\"/>\n";
    // Cap the marker count so large samples stay readable and small on disk.
    const std::size_t step = std::max<std::size_t>(1, points.size() / 512);
    for (std::size_t k = 0; k < points.size(); k += step) {
        out << "<circle cx=\"" << px(f.x(points[k].first)) << "\" cy=\""
            << px(f.y(points[k].second)) << "\" r=\"2\" fill=\"#28506e\"/>\n";
    }
    out << "</svg>\n";
    write_file_atomic(path, out.str());
}

void emit_svg_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::string& title, const std::string& x_label,
                   const std::string& y_label, const std::string& path) {
    if (x.empty() || y.empty()) throw std::invalid_argument("line plot needs nonempty data");
    if (x.size() != y.size()) throw std::invalid_argument("line plot needs matching x/y sizes");
    Frame f;
    f.fit_x(*std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end()));
    f.fit_y(*std::min_element(y.begin(), y.end()), *std::max_element(y.begin(), y.end()));
    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, f, x_label, y_label);
    if (x.size() > 1) {
        out << "<polyline fill=\"none\" stroke=\"#28506e\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < x.size(); ++k)
            out << px(f.x(x[k])) << ',' << px(f.y(y[k])) << ' ';
        out << "\"/>\n";
    }
    for (std::size_t k = 0; k < x.size(); ++k)
        out << "<circle cx=\"" << px(f.x(x[k])) << "\" cy=\"" << px(f.y(y[k]))
            << "\" r=\"3\" fill=\"#b04030\"/>\n";
    out << "</svg>\n";
    write_file_atomic(path, out.str());
}

}  // namespace gpmax
