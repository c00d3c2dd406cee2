#pragma once

#include <string>
#include <vector>

namespace resokit::io {

/// Comma-separated columns with a header row, full double precision.
std::string csv_table(const std::vector<std::string>& headers,
                      const std::vector<std::vector<double>>& columns);

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
    bool markers = false;  // points instead of a polyline
};

struct PlotSpec {
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<PlotSeries> series;
};

/// Minimal static SVG line/scatter chart. Non-finite or non-positive (on log
/// axes) samples are skipped.
std::string svg_plot(const PlotSpec& spec);

} // namespace resokit::io
