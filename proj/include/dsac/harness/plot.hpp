#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "dsac/errors.hpp"
#include "dsac/harness/config.hpp"

namespace dsac::harness {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw ConfigError("column '" + name + "' not found");
    }

    std::vector<double> values(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: empty input");
    t.header = split_list(line, ',');
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_list(line, ',');
        if (cells.size() != t.header.size())
            throw ConfigError("csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " fields");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c, "csv line " + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Trailing mean over the last min(window, k + 1) values.
inline std::vector<double> running_average(const std::vector<double>& x, std::size_t window) {
    if (window == 0) throw ConfigError("running_average: window must be >= 1");
    std::vector<double> out;
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sum += x[k];
        if (k >= window) sum -= x[k - window];
        out.push_back(sum / static_cast<double>(std::min(window, k + 1)));
    }
    return out;
}

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string fixed(double v, int precision = 2) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return std::string(buf, res.ptr);
}

inline std::string label(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Line chart of every series against its x values, with a legend.
inline std::string render_svg(const std::vector<PlotSeries>& series, const std::string& x_label = "k") {
    constexpr double W = 720, H = 420, left = 70, right = 180, top = 20, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series) {
        for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
        for (double v : s.y)
            if (std::isfinite(v)) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    }
    if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; }
    if (!std::isfinite(ymin)) { ymin = 0; ymax = 1; }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<g stroke=\"black\" stroke-width=\"1\">\n"
        << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n"
        << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = xmin + (xmax - xmin) * t / 4.0, fy = ymin + (ymax - ymin) * t / 4.0;
        svg << "<text x=\"" << detail::fixed(px(fx)) << "\" y=\"" << detail::fixed(top + ph + 16)
            << "\" text-anchor=\"middle\">" << detail::label(fx) << "</text>\n"
            << "<text x=\"" << detail::fixed(left - 6) << "\" y=\"" << detail::fixed(py(fy) + 4)
            << "\" text-anchor=\"end\">" << detail::label(fy) << "</text>\n";
    }
    svg << "<text x=\"" << detail::fixed(left + pw / 2) << "\" y=\"" << detail::fixed(H - 10)
        << "\" text-anchor=\"middle\">" << detail::xml_escape(x_label) << "</text>\n</g>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = colors[i % (sizeof colors / sizeof colors[0])];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t j = 0; j < s.x.size() && j < s.y.size(); ++j) {
            if (!std::isfinite(s.y[j])) continue;
            svg << (first ? "" : " ") << detail::fixed(px(s.x[j])) << ',' << detail::fixed(py(s.y[j]));
            first = false;
        }
        svg << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(i);
        svg << "<line x1=\"" << detail::fixed(left + pw + 12) << "\" y1=\"" << detail::fixed(ly) << "\" x2=\""
            << detail::fixed(left + pw + 32) << "\" y2=\"" << detail::fixed(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << detail::fixed(left + pw + 38) << "\" y=\"" << detail::fixed(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(s.name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Smoothed columns of a metrics table against k (or row index when k is absent).
inline std::string plot_columns(const CsvTable& table, const std::vector<std::string>& columns, std::size_t window = 50) {
    if (columns.empty()) throw ConfigError("plot: no columns requested");
    std::vector<double> x;
    bool has_k = false;
    for (const auto& h : table.header) has_k = has_k || h == "k";
    if (has_k) x = table.values("k");
    else
        for (std::size_t r = 0; r < table.rows.size(); ++r) x.push_back(static_cast<double>(r));
    std::vector<PlotSeries> series;
    for (const auto& c : columns) series.push_back({c, x, running_average(table.values(c), window)});
    return render_svg(series);
}

} // namespace dsac::harness
