#pragma once

// Minimal line plots as standalone SVG documents.

#include "scnw/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace scnw::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string x_label;
    std::string y_label;
    std::string title;
    int width = 720;
    int height = 450;
};

namespace detail {

inline constexpr std::array<std::string_view, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                                         "#9467bd", "#ff7f0e", "#17becf"};

[[nodiscard]] inline std::string escape(std::string_view text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

[[nodiscard]] inline std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

[[nodiscard]] inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> ticks;
};

// Tick spacing from the 1-2-5 sequence, about `target` ticks over the span.
[[nodiscard]] inline Axis make_axis(double lo, double hi, int target = 6) {
    if (hi <= lo) {
        const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        lo -= pad;
        hi += pad;
    }
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = 10.0 * mag;
    for (double m : {1.0, 2.0, 5.0}) {
        if (m * mag >= raw) { step = m * mag; break; }
    }
    Axis a{std::floor(lo / step) * step, std::ceil(hi / step) * step, {}};
    for (double t = a.lo; t <= a.hi + 0.5 * step; t += step) a.ticks.push_back(std::round(t / step) * step);
    return a;
}

}  // namespace detail

/// One polyline per series on shared linear axes, with tick labels and a
/// legend.
[[nodiscard]] inline std::string render_svg_plot(const std::vector<Series>& series, const PlotOptions& opt = {}) {
    if (series.empty()) throw InvalidArgument("plot needs at least one series");
    double x_lo = HUGE_VAL, x_hi = -HUGE_VAL, y_lo = HUGE_VAL, y_hi = -HUGE_VAL;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw InvalidArgument("series '" + s.label + "' has mismatched x/y lengths");
        if (s.x.size() < 2) throw InvalidArgument("series '" + s.label + "' needs at least 2 points");
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
                throw InvalidArgument("series '" + s.label + "' has a non-finite value at point " + std::to_string(k));
            }
            x_lo = std::min(x_lo, s.x[k]);
            x_hi = std::max(x_hi, s.x[k]);
            y_lo = std::min(y_lo, s.y[k]);
            y_hi = std::max(y_hi, s.y[k]);
        }
    }
    const auto ax = detail::make_axis(x_lo, x_hi);
    const auto ay = detail::make_axis(y_lo, y_hi);

    const double left = 80, right = 20, top = opt.title.empty() ? 20 : 40, bottom = 60;
    const double pw = opt.width - left - right;
    const double ph = opt.height - top - bottom;
    auto px = [&](double x) { return left + (x - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto py = [&](double y) { return top + ph - (y - ay.lo) / (ay.hi - ay.lo) * ph; };
    using detail::fixed;

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
         std::to_string(opt.height) + "\" viewBox=\"0 0 " + std::to_string(opt.width) + " " +
         std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty()) {
        o += "<text x=\"" + fixed(opt.width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
             detail::escape(opt.title) + "</text>\n";
    }
    o += "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double t : ax.ticks) o += "<line x1=\"" + fixed(px(t)) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(px(t)) + "\" y2=\"" + fixed(top + ph) + "\"/>\n";
    for (double t : ay.ticks) o += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(py(t)) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" + fixed(py(t)) + "\"/>\n";
    o += "</g>\n";
    o += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ax.ticks) {
        o += "<text x=\"" + fixed(px(t)) + "\" y=\"" + fixed(top + ph + 16) + "\" text-anchor=\"middle\">" +
             detail::tick_label(t) + "</text>\n";
    }
    for (double t : ay.ticks) {
        o += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(py(t) + 4) + "\" text-anchor=\"end\">" +
             detail::tick_label(t) + "</text>\n";
    }
    o += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(opt.height - 16.0) + "\" text-anchor=\"middle\">" +
         detail::escape(opt.x_label) + "</text>\n";
    o += "<text transform=\"translate(18 " + fixed(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(opt.y_label) + "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        o += "<polyline fill=\"none\" stroke=\"";
        o += detail::kColors[k % detail::kColors.size()];
        o += "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            if (j) o += ' ';
            o += fixed(px(s.x[j])) + "," + fixed(py(s.y[j]));
        }
        o += "\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double y = top + 14 + 16.0 * static_cast<double>(k);
        const double x = left + pw - 150;
        o += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(y - 4) + "\" x2=\"" + fixed(x + 20) + "\" y2=\"" +
             fixed(y - 4) + "\" stroke=\"";
        o += detail::kColors[k % detail::kColors.size()];
        o += "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + fixed(x + 26) + "\" y=\"" + fixed(y) + "\">" + detail::escape(series[k].label) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

}  // namespace scnw::svg
