#include "resokit/io/plot.hpp"

#include "resokit/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace resokit::io {

std::string csv_table(const std::vector<std::string>& headers,
                      const std::vector<std::vector<double>>& columns) {
    if (headers.size() != columns.size())
        throw DomainError("csv_table: header and column counts differ");
    std::ostringstream out;
    out.precision(17);
    for (std::size_t c = 0; c < headers.size(); ++c)
        out << (c ? "," : "") << headers[c];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& col : columns)
        if (col.size() != rows)
            throw DomainError("csv_table: columns differ in length");
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << columns[c][r];
        out << '\n';
    }
    return out.str();
}

namespace {

constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 50;
const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

} // namespace

std::string svg_plot(const PlotSpec& spec) {
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
    };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : spec.series)
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
            if (usable(s.x[k], s.y[k])) {
                x0 = std::min(x0, tx(s.x[k]));
                x1 = std::max(x1, tx(s.x[k]));
                y0 = std::min(y0, ty(s.y[k]));
                y1 = std::max(y1, ty(s.y[k]));
            }
    if (!(x1 >= x0)) {
        x0 = y0 = 0.0;
        x1 = y1 = 1.0;
    }
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
        const double vx = spec.log_x ? std::pow(10.0, fx) : fx;
        const double vy = spec.log_y ? std::pow(10.0, fy) : fy;
        o << "<text x=\"" << left + pw * k / 4.0 << "\" y=\"" << top + ph + 16
          << "\" text-anchor=\"middle\">" << fmt(vx) << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << top + ph - ph * k / 4.0 + 4
          << "\" text-anchor=\"end\">" << fmt(vy) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = palette[si % 6];
        if (s.markers) {
            for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
                if (usable(s.x[k], s.y[k]))
                    o << "<circle cx=\"" << px(s.x[k]) << "\" cy=\"" << py(s.y[k])
                      << "\" r=\"2\" fill=\"" << color << "\"/>\n";
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
                if (usable(s.x[k], s.y[k]))
                    o << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
            o << "\"/>\n";
        }
        o << "<text x=\"" << left + pw - 8 << "\" y=\"" << top + 16 + 16 * si << "\" text-anchor=\"end\" fill=\""
          << color << "\">" << escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace resokit::io
