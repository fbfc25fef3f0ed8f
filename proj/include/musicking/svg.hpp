#ifndef MUSICKING_SVG_HPP
#define MUSICKING_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "analytics.hpp"

// Minimal static SVG rendering for the CLI's --svg flag. Purely cosmetic:
// nothing downstream reads these files.
namespace musicking::svg {

inline constexpr double kWidth = 800.0;
inline constexpr double kHeight = 320.0;
inline constexpr double kMargin = 40.0;

struct LineSeries {
    std::string label;
    std::string color;
    std::vector<std::optional<double>> values;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

inline std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string header(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
           "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           "<text x=\"" + fmt(kMargin) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
           "</text>\n";
}

} // namespace detail

inline std::string line_chart(const std::string& title, std::span<const LineSeries> series) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (const auto& v : s.values) {
            if (v) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
        }
    }
    std::string out = detail::header(title);
    if (n < 2 || !std::isfinite(lo)) return out + "</svg>\n";
    if (hi == lo) hi = lo + 1.0;
    const double pw = kWidth - 2 * kMargin;
    const double ph = kHeight - 2 * kMargin;
    for (const auto& s : series) {
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (!s.values[i]) {
                pen = false;
                continue;
            }
            const double x = kMargin + pw * static_cast<double>(i) / static_cast<double>(n - 1);
            const double y = kHeight - kMargin - ph * (*s.values[i] - lo) / (hi - lo);
            path += (pen ? " L" : " M") + detail::fmt(x) + " " + detail::fmt(y);
            pen = true;
        }
        out += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1\"><title>" +
               detail::escape(s.label) + "</title></path>\n";
    }
    return out + "</svg>\n";
}

inline std::string bar_chart(const std::string& title, std::span<const analytics::HistogramBin> bins) {
    std::string out = detail::header(title);
    std::size_t top = 0;
    for (const auto& b : bins) top = std::max(top, b.count);
    if (bins.empty() || top == 0) return out + "</svg>\n";
    const double pw = (kWidth - 2 * kMargin) / static_cast<double>(bins.size());
    const double ph = kHeight - 2 * kMargin;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double h = ph * static_cast<double>(bins[i].count) / static_cast<double>(top);
        out += "<rect x=\"" + detail::fmt(kMargin + pw * static_cast<double>(i)) + "\" y=\"" +
               detail::fmt(kHeight - kMargin - h) + "\" width=\"" + detail::fmt(pw * 0.9) + "\" height=\"" +
               detail::fmt(h) + "\" fill=\"steelblue\"/>\n";
    }
    return out + "</svg>\n";
}

inline std::string heatmap(const std::string& title, const std::vector<std::vector<std::size_t>>& counts) {
    std::string out = detail::header(title);
    std::size_t top = 0;
    for (const auto& row : counts) {
        for (auto c : row) top = std::max(top, c);
    }
    if (counts.empty() || counts.front().empty() || top == 0) return out + "</svg>\n";
    const double cw = (kWidth - 2 * kMargin) / static_cast<double>(counts.front().size());
    const double ch = (kHeight - 2 * kMargin) / static_cast<double>(counts.size());
    for (std::size_t r = 0; r < counts.size(); ++r) {
        for (std::size_t c = 0; c < counts[r].size(); ++c) {
            const double t = static_cast<double>(counts[r][c]) / static_cast<double>(top);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
            out += "<rect x=\"" + detail::fmt(kMargin + cw * static_cast<double>(c)) + "\" y=\"" +
                   detail::fmt(kMargin + ch * static_cast<double>(r)) + "\" width=\"" + detail::fmt(cw) +
                   "\" height=\"" + detail::fmt(ch) + "\" fill=\"rgb(255," + std::to_string(shade) + "," +
                   std::to_string(shade) + ")\"/>\n";
        }
    }
    return out + "</svg>\n";
}

} // namespace musicking::svg

#endif
