#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "protoscribe/errors.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/model.hpp"

namespace protoscribe {

/// Vertical offset of a scaled K-by-K glyph on a line of height H: glyphs are
/// centered vertically. Compositing, alignment and prototype re-estimation
/// must all use this same mapping.
inline double glyph_y_offset(int line_height, int proto_side, double scale) {
    return (double(line_height) - double(proto_side) * scale) / 2.0;
}

/// A reconstructed line: the composited image plus the placements that
/// produced it, ordered left to right.
struct RenderedLine {
    ColorImage image;
    std::vector<Placement> placements;
    Rgb bg_color;
};

namespace detail {

inline std::map<std::string, const GrayImage*> prototype_index(const std::vector<Prototype>& protos) {
    std::map<std::string, const GrayImage*> index;
    for (const auto& p : protos) index[p.char_id] = &p.image;
    return index;
}

} // namespace detail

/// Fills a canvas with bg_color, then over-composites each placement's
/// prototype as alpha in left-to-right order:
///   out(px) = (1 - a(px)) * out(px) + a(px) * fg
/// where a is the scaled, positioned prototype intensity (bilinear).
/// Placements escaping the canvas are clipped; a note per clipped glyph is
/// appended to `warnings` when provided.
inline ColorImage composite_line(Rgb bg_color, int width, int height,
                                 const std::vector<Placement>& placements,
                                 const std::vector<Prototype>& prototypes,
                                 std::vector<std::string>* warnings = nullptr) {
    if (width < 1 || height < 1) throw DataError("composite_line: empty canvas");
    ColorImage canvas(width, height, bg_color);
    auto index = detail::prototype_index(prototypes);

    std::vector<Placement> ordered = placements;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Placement& a, const Placement& b) { return a.x < b.x; });

    for (const auto& pl : ordered) {
        auto it = index.find(pl.char_id);
        if (it == index.end())
            throw DataError("composite_line: unknown char_id '" + pl.char_id + "'");
        const GrayImage& proto = *it->second;
        if (!(pl.scale > 0.0)) throw DataError("composite_line: non-positive scale");

        const int side = proto.width();
        const double s = pl.scale;
        const double y_off = glyph_y_offset(height, side, s);
        const double extent = side * s;

        int px0 = std::max(0, int(std::floor(pl.x - s)) - 1);
        int px1 = std::min(width - 1, int(std::ceil(pl.x + extent + s)) + 1);
        int py0 = std::max(0, int(std::floor(y_off - s)) - 1);
        int py1 = std::min(height - 1, int(std::ceil(y_off + extent + s)) + 1);

        if (warnings && (pl.x < 0.0 || pl.x + extent > width || y_off < 0.0 || y_off + extent > height))
            warnings->push_back("clipped glyph '" + pl.char_id + "' at x=" + std::to_string(pl.x));

        for (int py = py0; py <= py1; ++py) {
            double v = (py + 0.5 - y_off) / s - 0.5;
            for (int px = px0; px <= px1; ++px) {
                double u = (px + 0.5 - pl.x) / s - 0.5;
                double a = sample_zero_outside(proto, u, v);
                if (a <= 0.0) continue;
                Rgb dst = canvas.at(px, py);
                canvas.set(px, py,
                           {(1 - a) * dst.r + a * pl.fg_color.r,
                            (1 - a) * dst.g + a * pl.fg_color.g,
                            (1 - a) * dst.b + a * pl.fg_color.b});
            }
        }
    }
    return canvas;
}

/// Channel-wise lower median over all pixels. With an even pixel count the
/// element at sorted index (n-1)/2 is taken, so 0/1 ties resolve to 0.
inline Rgb estimate_background(const ColorImage& line) {
    if (line.empty()) throw DataError("estimate_background: empty image");
    const std::size_t n = std::size_t(line.width()) * line.height();
    const std::vector<double>& data = line.data();
    Rgb out;
    std::vector<double> channel(n);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) channel[i] = data[i * 3 + c];
        std::size_t mid = (n - 1) / 2;
        std::nth_element(channel.begin(), channel.begin() + mid, channel.end());
        double v = channel[mid];
        if (c == 0) out.r = v;
        else if (c == 1) out.g = v;
        else out.b = v;
    }
    return out;
}

} // namespace protoscribe
