#pragma once

#include <algorithm>
#include <cstdio>
#include <string>

#include "protoscribe/analysis.hpp"

namespace protoscribe {

namespace detail {

inline std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

inline std::string shade_color(bool a_side, bool unlabeled, double shade) {
    // base blue for A, red for B; shade pulls toward black (darker = rarer)
    int r = unlabeled ? 102 : (a_side ? 52 : 192);
    int g = unlabeled ? 102 : (a_side ? 101 : 52);
    int b = unlabeled ? 102 : (a_side ? 192 : 52);
    double k = 1.0 - 0.75 * std::clamp(shade, 0.0, 1.0);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", int(r * k), int(g * k), int(b * k));
    return buf;
}

} // namespace detail

/// Deterministic SVG scatter for a comparison graph. Distance to reference A
/// runs up the vertical axis, distance to reference B along the horizontal;
/// the dashed diagonal separates "closer to A" (below it) from "closer to B".
/// Reference-corpus documents render as dots, the rest as crosses; warn/fail
/// filter flags outline the marker in orange/red.
inline std::string emit_graph_svg(const ComparisonGraph& graph) {
    const double plot = 440, left = 80, top = 40;
    const double width = 560, height = 560;

    double vmax = 0.0;
    long max_freq = 0;
    for (const auto& p : graph.points) {
        vmax = std::max({vmax, p.d_a, p.d_b});
        max_freq = std::max(max_freq, p.frequency);
    }
    vmax = vmax > 0 ? vmax * 1.08 : 1.0;
    const double scale = plot / vmax;
    auto px = [&](double d_b) { return left + d_b * scale; };
    auto py = [&](double d_a) { return top + plot - d_a * scale; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width, 0) +
           "\" height=\"" + detail::fmt(height, 0) + "\" viewBox=\"0 0 " + detail::fmt(width, 0) +
           " " + detail::fmt(height, 0) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    std::string title = (graph.kind == GraphKind::Character ? "character '" + graph.subject + "'"
                                                            : "document " + graph.subject);
    svg += "<text x=\"" + detail::fmt(left, 0) + "\" y=\"24\" font-size=\"16\" font-family=\"sans-serif\">" +
           title + "</text>\n";

    // axes
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" +
           detail::fmt(left) + "\" y2=\"" + detail::fmt(top + plot) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top + plot) + "\" x2=\"" +
           detail::fmt(left + plot) + "\" y2=\"" + detail::fmt(top + plot) +
           "\" stroke=\"black\"/>\n";
    // diagonal
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top + plot) + "\" x2=\"" +
           detail::fmt(left + plot) + "\" y2=\"" + detail::fmt(top) +
           "\" stroke=\"#999999\" stroke-dasharray=\"6 4\"/>\n";

    // ticks
    for (int i = 0; i <= 4; ++i) {
        double v = vmax * i / 4.0;
        svg += "<text x=\"" + detail::fmt(px(v) - 10) + "\" y=\"" + detail::fmt(top + plot + 18) +
               "\" font-size=\"10\" font-family=\"sans-serif\">" + detail::fmt(v, 2) + "</text>\n";
        svg += "<text x=\"" + detail::fmt(left - 44) + "\" y=\"" + detail::fmt(py(v) + 4) +
               "\" font-size=\"10\" font-family=\"sans-serif\">" + detail::fmt(v, 2) + "</text>\n";
    }
    svg += "<text x=\"" + detail::fmt(left + plot / 2 - 60) + "\" y=\"" +
           detail::fmt(top + plot + 40) + "\" font-size=\"12\" font-family=\"sans-serif\">" +
           graph.axis_b_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::fmt(top + plot / 2) +
           "\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 18 " +
           detail::fmt(top + plot / 2) + ")\">" + graph.axis_a_label + "</text>\n";

    for (const auto& p : graph.points) {
        double cx = px(p.d_b), cy = py(p.d_a);
        double shade = graph.kind == GraphKind::Document ? frequency_shade(p.frequency, max_freq) : 0.0;
        std::string color = detail::shade_color(p.side_class == SideClass::ASide,
                                                p.side_class == SideClass::Unlabeled, shade);
        std::string outline;
        if (p.flag == FilterFlag::Warn) outline = "#e8a013";
        if (p.flag == FilterFlag::Fail) outline = "#d42a2a";

        if (p.marker == MarkerKind::ReferenceDot) {
            svg += "<circle class=\"pt dot\" cx=\"" + detail::fmt(cx) + "\" cy=\"" + detail::fmt(cy) +
                   "\" r=\"5\" fill=\"" + color + "\"" +
                   (outline.empty() ? "" : " stroke=\"" + outline + "\" stroke-width=\"2.5\"") +
                   "/>\n";
        } else {
            svg += "<g class=\"pt cross\" stroke=\"" + color + "\" stroke-width=\"2\">";
            svg += "<line x1=\"" + detail::fmt(cx - 5) + "\" y1=\"" + detail::fmt(cy - 5) +
                   "\" x2=\"" + detail::fmt(cx + 5) + "\" y2=\"" + detail::fmt(cy + 5) + "\"/>";
            svg += "<line x1=\"" + detail::fmt(cx - 5) + "\" y1=\"" + detail::fmt(cy + 5) +
                   "\" x2=\"" + detail::fmt(cx + 5) + "\" y2=\"" + detail::fmt(cy - 5) + "\"/>";
            svg += "</g>\n";
            if (!outline.empty())
                svg += "<circle cx=\"" + detail::fmt(cx) + "\" cy=\"" + detail::fmt(cy) +
                       "\" r=\"8\" fill=\"none\" stroke=\"" + outline +
                       "\" stroke-width=\"2\"/>\n";
        }
        svg += "<text x=\"" + detail::fmt(cx + 8) + "\" y=\"" + detail::fmt(cy - 8) +
               "\" font-size=\"11\" font-family=\"sans-serif\">" + p.label + "</text>\n";
    }

    if (!graph.omitted.empty()) {
        svg += "<text x=\"" + detail::fmt(left) + "\" y=\"" + detail::fmt(height - 8) +
               "\" font-size=\"9\" font-family=\"sans-serif\" fill=\"#777777\">omitted: ";
        for (std::size_t i = 0; i < graph.omitted.size(); ++i)
            svg += (i ? "; " : "") + graph.omitted[i];
        svg += "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace protoscribe
