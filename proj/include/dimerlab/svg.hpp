// svg.hpp: minimal deterministic SVG line plots

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dimerlab/errors.hpp"

namespace dimerlab {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotStyle {
    int width{720};
    int height{440};
    double y_min{0.0};
    double y_max{1.0};
    std::string x_label{"t"};
    std::string y_label{"population"};
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace detail

inline std::string render_svg(const std::vector<Series>& series, const PlotStyle& style = {}) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
    if (series.empty()) throw Error(ErrorKind::Argument, "render_svg: no series");

    double x_lo = INFINITY, x_hi = -INFINITY;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw Error(ErrorKind::Argument, "render_svg: series '" + s.label + "' is empty or ragged");
        for (double v : s.x) {
            x_lo = std::min(x_lo, v);
            x_hi = std::max(x_hi, v);
        }
    }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;

    const double left = 64, right = 160, top = 20, bottom = 50;
    const double pw = style.width - left - right, ph = style.height - top - bottom;
    auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) {
        const double c = std::clamp(y, style.y_min, style.y_max);
        return top + (style.y_max - c) / (style.y_max - style.y_min) * ph;
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
       << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"" << detail::num(left) << "\" y=\"" << detail::num(top) << "\" width=\"" << detail::num(pw)
       << "\" height=\"" << detail::num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double yv = style.y_min + (style.y_max - style.y_min) * i / 5.0;
        const double xv = x_lo + (x_hi - x_lo) * i / 5.0;
        os << "<text x=\"" << detail::num(left - 6) << "\" y=\"" << detail::num(sy(yv) + 4)
           << "\" text-anchor=\"end\">" << detail::num(yv) << "</text>\n";
        os << "<text x=\"" << detail::num(sx(xv)) << "\" y=\"" << detail::num(top + ph + 16)
           << "\" text-anchor=\"middle\">" << detail::num(xv) << "</text>\n";
    }
    os << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << detail::num(style.height - 10.0)
       << "\" text-anchor=\"middle\">" << detail::escape_xml(style.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << detail::num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << detail::escape_xml(style.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % (sizeof palette / sizeof *palette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << (i ? " " : "") << detail::num(sx(s.x[i])) << ',' << detail::num(sy(s.y[i]));
        os << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << detail::num(left + pw + 12) << "\" y1=\"" << detail::num(ly - 4) << "\" x2=\""
           << detail::num(left + pw + 32) << "\" y2=\"" << detail::num(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << detail::num(left + pw + 38) << "\" y=\"" << detail::num(ly) << "\">"
           << detail::escape_xml(s.label) << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

} // namespace dimerlab
