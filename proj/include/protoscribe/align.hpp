#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "protoscribe/compositor.hpp"
#include "protoscribe/errors.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/model.hpp"

namespace protoscribe {

/// Search grid for forced alignment: x on a 1 px grid, a small fixed set of
/// isotropic scales, sub-pixel refinement by quadratic interpolation.
struct AlignParams {
    std::vector<double> scales{0.8, 0.9, 1.0, 1.1, 1.25};
    double advance_factor = 0.5;     // min advance between glyphs, fraction of scaled width
    int refine_window = 10;          // +-px searched around previous placements
    double min_ink_contrast = 0.02;  // max |I-bg| below this marks an all-background line
};

struct AlignStats {
    bool low_confidence = false;
    double total_cost = 0.0;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Prototype resampled at one scale, placed on the integer grid. The
/// fractional part of the vertical offset is baked into the rows so the
/// template matches what composite_line would paint at integer x.
struct GlyphTemplate {
    int cols = 0;
    int rows = 0;
    int y0 = 0;          // top canvas row
    double sq_sum = 0.0; // sum of squared alpha over the full template
    std::vector<double> alpha;

    double at(int u, int v) const { return alpha[std::size_t(v) * cols + u]; }
};

inline GlyphTemplate make_template(const GrayImage& proto, double scale, int line_height) {
    GlyphTemplate t;
    const int side = proto.width();
    const int span = std::max(1, int(std::lround(side * scale)));
    const double y_off = glyph_y_offset(line_height, side, scale);
    t.y0 = int(std::floor(y_off));
    const double fy = y_off - t.y0;
    t.cols = span;
    t.rows = span + 1;
    t.alpha.resize(std::size_t(t.cols) * t.rows);
    for (int v = 0; v < t.rows; ++v) {
        double sy = (v + 0.5 - fy) / scale - 0.5;
        for (int u = 0; u < t.cols; ++u) {
            double sx = (u + 0.5) / scale - 0.5;
            double a = sample_zero_outside(proto, sx, sy);
            t.alpha[std::size_t(v) * t.cols + u] = a;
            t.sq_sum += a * a;
        }
    }
    return t;
}

/// Scalar map derived from one line: m = (I-bg).k, the projection of each
/// pixel's background offset onto the ink axis. The squared reconstruction
/// error of a placed template over the whole line is
///   sum_line q - 2 sum alpha*m + |k|^2 sum alpha^2,
/// and sum_line q is candidate-independent, so each candidate is scored by
/// |k|^2 * sum alpha^2 - 2 * corr(alpha, m) alone. Restricting the q term to
/// the footprint instead would make smaller templates cheaper for free and
/// bias the search toward small scales.
struct LineEvidence {
    int width = 0;
    int height = 0;
    double k_norm2 = 0.0;
    Rgb ink{0, 0, 0};
    bool degenerate = true;
    std::vector<double> m;
};

inline LineEvidence make_evidence(const ColorImage& image, Rgb bg, double min_ink_contrast) {
    LineEvidence ev;
    ev.width = image.width();
    ev.height = image.height();
    const std::size_t n = std::size_t(ev.width) * ev.height;
    std::vector<double> q(n);
    const std::vector<double>& data = image.data();
    for (std::size_t i = 0; i < n; ++i) {
        double dr = data[i * 3] - bg.r;
        double dg = data[i * 3 + 1] - bg.g;
        double db = data[i * 3 + 2] - bg.b;
        q[i] = dr * dr + dg * dg + db * db;
    }

    // ink color: mean over the top decile of background-distance, a crude but
    // stable first estimate refined per glyph later
    std::vector<double> sorted_q = q;
    std::size_t hi = (n * 9) / 10;
    if (hi >= n) hi = n - 1;
    std::nth_element(sorted_q.begin(), sorted_q.begin() + hi, sorted_q.end());
    double thresh = std::max(sorted_q[hi], min_ink_contrast * min_ink_contrast);
    double sr = 0, sg = 0, sb = 0, cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (q[i] >= thresh && q[i] > 0.0) {
            sr += data[i * 3];
            sg += data[i * 3 + 1];
            sb += data[i * 3 + 2];
            cnt += 1;
        }
    }
    if (cnt > 0) {
        ev.ink = {sr / cnt, sg / cnt, sb / cnt};
        double kr = ev.ink.r - bg.r, kg = ev.ink.g - bg.g, kb = ev.ink.b - bg.b;
        ev.k_norm2 = kr * kr + kg * kg + kb * kb;
        ev.degenerate = ev.k_norm2 < min_ink_contrast * min_ink_contrast;
    }
    if (ev.degenerate) return ev;

    Rgb ink = ev.ink;
    ev.m.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dr = data[i * 3] - bg.r;
        double dg = data[i * 3 + 1] - bg.g;
        double db = data[i * 3 + 2] - bg.b;
        ev.m[i] = dr * (ink.r - bg.r) + dg * (ink.g - bg.g) + db * (ink.b - bg.b);
    }
    return ev;
}

/// Whole-line squared-error contribution of one template at integer x, up to
/// the candidate-independent constant sum_line q. Off-canvas template ink is
/// charged as fully unmatched, which keeps glyphs from drifting over the
/// border.
inline double template_cost_at(const LineEvidence& ev, const GlyphTemplate& t, int x) {
    int x0 = std::max(0, x), x1 = std::min(ev.width, x + t.cols);
    int y0 = std::max(0, t.y0), y1 = std::min(ev.height, t.y0 + t.rows);
    if (x0 >= x1 || y0 >= y1) return ev.k_norm2 * t.sq_sum;
    double corr = 0.0;
    for (int y = y0; y < y1; ++y) {
        const double* mrow = ev.m.data() + std::size_t(y) * ev.width;
        const double* trow = t.alpha.data() + std::size_t(y - t.y0) * t.cols;
        for (int px = x0; px < x1; ++px) corr += trow[px - x] * mrow[px];
    }
    return ev.k_norm2 * t.sq_sum - 2.0 * corr;
}

/// Cost of a template at every x in [0, x_max], one correlation sweep.
inline std::vector<double> template_cost_map(const LineEvidence& ev, const GlyphTemplate& t,
                                             int x_max) {
    std::vector<double> corr(std::size_t(x_max) + 1, 0.0);
    int y0 = std::max(0, t.y0), y1 = std::min(ev.height, t.y0 + t.rows);
    for (int y = y0; y < y1; ++y) {
        const double* mrow = ev.m.data() + std::size_t(y) * ev.width;
        const double* trow = t.alpha.data() + std::size_t(y - t.y0) * t.cols;
        for (int x = 0; x <= x_max; ++x) {
            double acc = 0.0;
            int u1 = std::min(t.cols, ev.width - x);
            const double* mp = mrow + x;
            for (int u = 0; u < u1; ++u) acc += trow[u] * mp[u];
            corr[std::size_t(x)] += acc;
        }
    }
    std::vector<double> cost(std::size_t(x_max) + 1, 0.0);
    for (int x = 0; x <= x_max; ++x)
        cost[std::size_t(x)] = ev.k_norm2 * t.sq_sum - 2.0 * corr[std::size_t(x)];
    return cost;
}

/// Scale indices ordered by the tie rule: closest to 1 first, then smaller.
inline std::vector<int> scale_preference(const std::vector<double>& scales) {
    std::vector<int> order(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) order[i] = int(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double da = std::abs(scales[std::size_t(a)] - 1.0);
        double db = std::abs(scales[std::size_t(b)] - 1.0);
        if (da != db) return da < db;
        return scales[std::size_t(a)] < scales[std::size_t(b)];
    });
    return order;
}

} // namespace detail

/// Ink-weighted least-squares foreground color of one placed glyph: solves
/// I = (1-a)*bg + a*fg over the footprint, per channel.
inline Rgb estimate_fg_color(const ColorImage& image, const GrayImage& proto, double x,
                             double scale, Rgb bg) {
    const int side = proto.width();
    const double y_off = glyph_y_offset(image.height(), side, scale);
    const double extent = side * scale;
    int px0 = std::max(0, int(std::floor(x - scale)) - 1);
    int px1 = std::min(image.width() - 1, int(std::ceil(x + extent + scale)) + 1);
    int py0 = std::max(0, int(std::floor(y_off - scale)) - 1);
    int py1 = std::min(image.height() - 1, int(std::ceil(y_off + extent + scale)) + 1);
    double den = 0.0, nr = 0.0, ng = 0.0, nb = 0.0;
    for (int py = py0; py <= py1; ++py) {
        double v = (py + 0.5 - y_off) / scale - 0.5;
        for (int px = px0; px <= px1; ++px) {
            double u = (px + 0.5 - x) / scale - 0.5;
            double a = sample_zero_outside(proto, u, v);
            if (a <= 0.0) continue;
            Rgb c = image.at(px, py);
            nr += a * (c.r - (1 - a) * bg.r);
            ng += a * (c.g - (1 - a) * bg.g);
            nb += a * (c.b - (1 - a) * bg.b);
            den += a * a;
        }
    }
    if (den < 1e-9) return bg;
    return Rgb{nr / den, ng / den, nb / den}.clamped();
}

/// Places the known transcription onto the line: one placement per character,
/// x monotone, each glyph scored by local squared reconstruction error over a
/// discrete (x, scale) grid, global consistency by monotone dynamic
/// programming, then sub-pixel refinement of x. When `previous` placements
/// are given, the search is restricted to a window around them.
inline std::vector<Placement> align_line(const LineSample& line,
                                         const std::vector<Prototype>& prototypes, Rgb bg_color,
                                         const AlignParams& params = {},
                                         const std::vector<Placement>* previous = nullptr,
                                         AlignStats* stats = nullptr) {
    using namespace detail;
    const std::vector<std::string>& text = line.transcription;
    if (stats) *stats = AlignStats{};
    if (text.empty()) return {};
    if (line.image.width() < 1 || line.image.height() < 1)
        throw DataError("align_line: empty line image");
    if (params.scales.empty()) throw DataError("align_line: empty scale set");

    auto proto_index = detail::prototype_index(prototypes);
    for (const auto& label : text)
        if (proto_index.find(label) == proto_index.end())
            throw DataError("align_line: transcription label '" + label + "' has no prototype");

    const int W = line.image.width();
    const int H = line.image.height();
    const int side = proto_index.begin()->second->width();
    const int n = int(text.size());

    LineEvidence ev = make_evidence(line.image, bg_color, params.min_ink_contrast);

    auto uniform_fallback = [&]() {
        std::vector<Placement> out;
        double advance = double(W) / n;
        for (int i = 0; i < n; ++i) {
            double x = std::clamp(i * advance + (advance - side) / 2.0, 0.0, double(W));
            out.push_back({text[std::size_t(i)], x, 1.0, bg_color});
        }
        if (stats) stats->low_confidence = true;
        return out;
    };
    if (ev.degenerate) return uniform_fallback();

    // templates per (distinct char, scale)
    const int n_scales = int(params.scales.size());
    std::map<std::string, int> char_slot;
    for (const auto& label : text)
        if (!char_slot.count(label)) {
            int slot = int(char_slot.size());
            char_slot[label] = slot;
        }
    std::vector<std::vector<GlyphTemplate>> templates(char_slot.size());
    for (const auto& [label, slot] : char_slot) {
        templates[std::size_t(slot)].resize(std::size_t(n_scales));
        for (int si = 0; si < n_scales; ++si)
            templates[std::size_t(slot)][std::size_t(si)] =
                make_template(*proto_index[label], params.scales[std::size_t(si)], H);
    }

    std::vector<int> pref = scale_preference(params.scales);
    auto advance_of = [&](int si) {
        return std::max(1, int(std::lround(params.advance_factor * side * params.scales[std::size_t(si)])));
    };

    // candidate x lists per glyph
    std::vector<std::vector<int>> candidates(static_cast<std::size_t>(n));
    const bool windowed = previous != nullptr && int(previous->size()) == n && params.refine_window >= 0;
    for (int i = 0; i < n; ++i) {
        int span = templates[std::size_t(char_slot[text[std::size_t(i)]])][0].cols;
        int x_max = std::max(0, W - span);
        if (windowed) {
            int cx = int(std::lround((*previous)[std::size_t(i)].x));
            int lo = std::clamp(cx - params.refine_window, 0, x_max);
            int hi = std::clamp(cx + params.refine_window, 0, x_max);
            for (int x = lo; x <= hi; ++x) candidates[std::size_t(i)].push_back(x);
        } else {
            candidates[std::size_t(i)].reserve(std::size_t(x_max) + 1);
            for (int x = 0; x <= x_max; ++x) candidates[std::size_t(i)].push_back(x);
        }
    }

    // per-glyph candidate costs
    std::vector<std::vector<std::vector<double>>> glyph_cost(
        static_cast<std::size_t>(n)); // [glyph][scale][cand]
    if (!windowed) {
        // one correlation sweep per distinct (char, scale), shared across glyphs
        std::vector<std::vector<std::vector<double>>> maps(char_slot.size());
        for (const auto& [label, slot] : char_slot) {
            maps[std::size_t(slot)].resize(std::size_t(n_scales));
            for (int si = 0; si < n_scales; ++si) {
                const GlyphTemplate& t = templates[std::size_t(slot)][std::size_t(si)];
                maps[std::size_t(slot)][std::size_t(si)] =
                    template_cost_map(ev, t, std::max(0, W - t.cols));
            }
        }
        for (int i = 0; i < n; ++i) {
            int slot = char_slot[text[std::size_t(i)]];
            glyph_cost[std::size_t(i)].resize(std::size_t(n_scales));
            for (int si = 0; si < n_scales; ++si) {
                auto& row = glyph_cost[std::size_t(i)][std::size_t(si)];
                const auto& map = maps[std::size_t(slot)][std::size_t(si)];
                row.reserve(candidates[std::size_t(i)].size());
                for (int x : candidates[std::size_t(i)])
                    row.push_back(std::size_t(x) < map.size() ? map[std::size_t(x)]
                                                              : ev.k_norm2 *
                                                                    templates[std::size_t(slot)][std::size_t(si)].sq_sum);
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            int slot = char_slot[text[std::size_t(i)]];
            glyph_cost[std::size_t(i)].resize(std::size_t(n_scales));
            for (int si = 0; si < n_scales; ++si) {
                const GlyphTemplate& t = templates[std::size_t(slot)][std::size_t(si)];
                auto& row = glyph_cost[std::size_t(i)][std::size_t(si)];
                row.reserve(candidates[std::size_t(i)].size());
                for (int x : candidates[std::size_t(i)]) row.push_back(template_cost_at(ev, t, x));
            }
        }
    }

    // monotone DP over (x, scale); ties prefer the leftmost x, then the scale
    // closest to 1 (iteration order + strict < gives exactly that)
    struct Back {
        int prev_cand = -1;
        int prev_scale = -1;
    };
    std::vector<std::vector<std::vector<Back>>> back(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> dp_prev(static_cast<std::size_t>(n_scales));
    std::vector<std::vector<double>> dp_cur(static_cast<std::size_t>(n_scales));

    for (int si = 0; si < n_scales; ++si) dp_prev[std::size_t(si)] = glyph_cost[0][std::size_t(si)];
    back[0].assign(std::size_t(n_scales),
                   std::vector<Back>(candidates[0].size(), Back{}));

    for (int i = 1; i < n; ++i) {
        const auto& prev_x = candidates[std::size_t(i - 1)];
        const auto& cur_x = candidates[std::size_t(i)];
        back[std::size_t(i)].assign(std::size_t(n_scales),
                                    std::vector<Back>(cur_x.size(), Back{}));
        for (int si = 0; si < n_scales; ++si)
            dp_cur[std::size_t(si)].assign(cur_x.size(), kInf);

        // prefix minima of dp_prev per scale, tie keeps the leftmost candidate
        std::vector<std::vector<double>> pm(static_cast<std::size_t>(n_scales));
        std::vector<std::vector<int>> pm_arg(static_cast<std::size_t>(n_scales));
        for (int si = 0; si < n_scales; ++si) {
            pm[std::size_t(si)].resize(prev_x.size());
            pm_arg[std::size_t(si)].resize(prev_x.size());
            double best = kInf;
            int best_j = -1;
            for (std::size_t j = 0; j < prev_x.size(); ++j) {
                if (dp_prev[std::size_t(si)][j] < best) {
                    best = dp_prev[std::size_t(si)][j];
                    best_j = int(j);
                }
                pm[std::size_t(si)][j] = best;
                pm_arg[std::size_t(si)][j] = best_j;
            }
        }

        for (std::size_t cj = 0; cj < cur_x.size(); ++cj) {
            double best = kInf;
            Back bp;
            for (int pi : pref) {
                int limit = cur_x[cj] - advance_of(pi);
                // rightmost previous candidate with x' <= limit
                auto it = std::upper_bound(prev_x.begin(), prev_x.end(), limit);
                if (it == prev_x.begin()) continue;
                std::size_t j = std::size_t(it - prev_x.begin()) - 1;
                if (pm[std::size_t(pi)][j] < best) {
                    best = pm[std::size_t(pi)][j];
                    bp = Back{pm_arg[std::size_t(pi)][j], pi};
                }
            }
            for (int si = 0; si < n_scales; ++si) {
                if (best == kInf) continue;
                dp_cur[std::size_t(si)][cj] = glyph_cost[std::size_t(i)][std::size_t(si)][cj] + best;
                back[std::size_t(i)][std::size_t(si)][cj] = bp;
            }
        }
        dp_prev.swap(dp_cur);
    }

    // final argmin: x ascending, scales in preference order, strict <
    double best_total = kInf;
    int best_scale = -1, best_cand = -1;
    for (std::size_t cj = 0; cj < candidates[std::size_t(n - 1)].size(); ++cj) {
        for (int pi : pref) {
            if (dp_prev[std::size_t(pi)][cj] < best_total) {
                best_total = dp_prev[std::size_t(pi)][cj];
                best_scale = pi;
                best_cand = int(cj);
            }
        }
    }
    if (best_cand < 0 || !std::isfinite(best_total)) return uniform_fallback();

    // backtrack
    std::vector<std::pair<int, int>> chosen(static_cast<std::size_t>(n)); // (cand, scale)
    int cs = best_scale, cc = best_cand;
    for (int i = n - 1; i >= 0; --i) {
        chosen[std::size_t(i)] = {cc, cs};
        if (i > 0) {
            Back bp = back[std::size_t(i)][std::size_t(cs)][std::size_t(cc)];
            cc = bp.prev_cand;
            cs = bp.prev_scale;
        }
    }

    // sub-pixel refinement + per-glyph ink color
    std::vector<Placement> out;
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        auto [cand_idx, scale_idx] = chosen[std::size_t(i)];
        int xi = candidates[std::size_t(i)][std::size_t(cand_idx)];
        double s = params.scales[std::size_t(scale_idx)];
        const GlyphTemplate& t =
            templates[std::size_t(char_slot[text[std::size_t(i)]])][std::size_t(scale_idx)];

        double c0 = template_cost_at(ev, t, xi);
        double delta = 0.0;
        if (xi - 1 >= 0 && xi + 1 <= std::max(0, W - t.cols)) {
            double cm = template_cost_at(ev, t, xi - 1);
            double cp = template_cost_at(ev, t, xi + 1);
            double denom = cm - 2.0 * c0 + cp;
            if (denom > 1e-12) delta = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
        }
        double x_refined = std::clamp(xi + delta, 0.0, double(W));
        Rgb fg = estimate_fg_color(line.image, *proto_index[text[std::size_t(i)]], x_refined, s,
                                   bg_color);
        out.push_back({text[std::size_t(i)], x_refined, s, fg});
    }
    if (stats) {
        stats->low_confidence = false;
        stats->total_cost = best_total;
    }
    return out;
}

} // namespace protoscribe
