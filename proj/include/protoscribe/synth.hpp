#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoscribe/compositor.hpp"
#include "protoscribe/corpus.hpp"
#include "protoscribe/errors.hpp"
#include "protoscribe/filter.hpp"
#include "protoscribe/model.hpp"
#include "protoscribe/model_io.hpp"
#include "protoscribe/png_io.hpp"
#include "protoscribe/rng.hpp"

namespace protoscribe {

// ---------------------------------------------------------------------------
// Stroke-primitive glyphs
// ---------------------------------------------------------------------------

namespace strokes {

/// Soft capsule: intensity 1 within half_width - soft/2 of the segment,
/// fading to 0 at half_width + soft/2. Strokes combine by max.
inline void draw_segment(GrayImage& img, double x0, double y0, double x1, double y1,
                         double half_width, double soft) {
    double dx = x1 - x0, dy = y1 - y0;
    double len2 = dx * dx + dy * dy;
    int lo_x = std::max(0, int(std::floor(std::min(x0, x1) - half_width - soft)));
    int hi_x = std::min(img.width() - 1, int(std::ceil(std::max(x0, x1) + half_width + soft)));
    int lo_y = std::max(0, int(std::floor(std::min(y0, y1) - half_width - soft)));
    int hi_y = std::min(img.height() - 1, int(std::ceil(std::max(y0, y1) + half_width + soft)));
    for (int py = lo_y; py <= hi_y; ++py) {
        for (int px = lo_x; px <= hi_x; ++px) {
            double t = len2 > 0 ? std::clamp(((px - x0) * dx + (py - y0) * dy) / len2, 0.0, 1.0) : 0.0;
            double qx = x0 + t * dx - px, qy = y0 + t * dy - py;
            double d = std::sqrt(qx * qx + qy * qy);
            double v = std::clamp((half_width + soft / 2 - d) / soft, 0.0, 1.0);
            if (v > img.at(px, py)) img.set(px, py, v);
        }
    }
}

/// Soft arc of a circle between angles a0 and a1 (radians, counterclockwise,
/// a1 > a0), same edge profile as draw_segment.
inline void draw_arc(GrayImage& img, double cx, double cy, double radius, double a0, double a1,
                     double half_width, double soft) {
    int lo_x = std::max(0, int(std::floor(cx - radius - half_width - soft)));
    int hi_x = std::min(img.width() - 1, int(std::ceil(cx + radius + half_width + soft)));
    int lo_y = std::max(0, int(std::floor(cy - radius - half_width - soft)));
    int hi_y = std::min(img.height() - 1, int(std::ceil(cy + radius + half_width + soft)));
    const double two_pi = 6.283185307179586476925286766559;
    for (int py = lo_y; py <= hi_y; ++py) {
        for (int px = lo_x; px <= hi_x; ++px) {
            double vx = px - cx, vy = py - cy;
            double ang = std::atan2(vy, vx);
            // smallest representative of ang within [a0, a0 + 2pi)
            while (ang < a0) ang += two_pi;
            double d;
            if (ang <= a1) {
                d = std::abs(std::sqrt(vx * vx + vy * vy) - radius);
            } else {
                double e0x = cx + radius * std::cos(a0) - px, e0y = cy + radius * std::sin(a0) - py;
                double e1x = cx + radius * std::cos(a1) - px, e1y = cy + radius * std::sin(a1) - py;
                d = std::sqrt(std::min(e0x * e0x + e0y * e0y, e1x * e1x + e1y * e1y));
            }
            double v = std::clamp((half_width + soft / 2 - d) / soft, 0.0, 1.0);
            if (v > img.at(px, py)) img.set(px, py, v);
        }
    }
}

} // namespace strokes

/// Shape edits injected into the B variant of a character, in the spirit of
/// the morphological criteria the toolkit is meant to surface: open vs closed
/// bows, spurs, angularity, stroke weight, decorated heads.
enum class GlyphDelta { None, OpenBow, AddSpur, Squarify, TiltBar, Thicken, DiamondMark };

inline const char* to_string(GlyphDelta d) {
    switch (d) {
        case GlyphDelta::OpenBow: return "open-bow";
        case GlyphDelta::AddSpur: return "add-spur";
        case GlyphDelta::Squarify: return "squarify";
        case GlyphDelta::TiltBar: return "tilt-bar";
        case GlyphDelta::Thicken: return "thicken";
        case GlyphDelta::DiamondMark: return "diamond-mark";
        default: return "none";
    }
}

namespace detail {

/// Raw stroke drawing for one of the ten built-in labels, before centering.
inline GrayImage draw_glyph(const std::string& label, int side, GlyphDelta delta) {
    using namespace strokes;
    GrayImage img(side, side);
    const double S = side;
    auto X = [&](double f) { return f * S; };
    const double pi = 3.14159265358979323846;
    double hw = 0.055 * S;
    double soft = 0.07 * S;
    if (delta == GlyphDelta::Thicken) hw *= 1.45;

    const char c = label.empty() ? '?' : label[0];
    switch (c) {
        case 'a': { // bow + right stem on the lower half
            draw_segment(img, X(0.72), X(0.35), X(0.72), X(0.85), hw, soft);
            if (delta == GlyphDelta::OpenBow)
                draw_arc(img, X(0.47), X(0.62), X(0.22) , pi * 0.45, pi * 1.55, hw, soft);
            else
                draw_arc(img, X(0.47), X(0.62), X(0.22), 0, 2 * pi, hw, soft);
            break;
        }
        case 'b': { // tall left stem + lower bow
            draw_segment(img, X(0.3), X(0.12), X(0.3), X(0.85), hw, soft);
            draw_arc(img, X(0.52), X(0.63), X(0.21), 0, 2 * pi, hw, soft);
            if (delta == GlyphDelta::AddSpur)
                draw_segment(img, X(0.3), X(0.85), X(0.14), X(0.85), hw, soft);
            break;
        }
        case 'c': { // open bow, gap to the right
            if (delta == GlyphDelta::Squarify) {
                draw_segment(img, X(0.72), X(0.40), X(0.32), X(0.40), hw, soft);
                draw_segment(img, X(0.32), X(0.40), X(0.32), X(0.84), hw, soft);
                draw_segment(img, X(0.32), X(0.84), X(0.72), X(0.84), hw, soft);
            } else {
                draw_arc(img, X(0.52), X(0.62), X(0.22), pi * 0.3, pi * 1.7, hw, soft);
            }
            break;
        }
        case 'd': { // tall right stem + lower bow
            draw_segment(img, X(0.7), X(0.12), X(0.7), X(0.85), hw, soft);
            draw_arc(img, X(0.48), X(0.63), X(0.21), 0, 2 * pi, hw, soft);
            break;
        }
        case 'e': { // bow + horizontal bar
            draw_arc(img, X(0.5), X(0.62), X(0.22), pi * 0.25, pi * 1.75, hw, soft);
            if (delta == GlyphDelta::TiltBar)
                draw_segment(img, X(0.3), X(0.66), X(0.72), X(0.52), hw, soft);
            else
                draw_segment(img, X(0.29), X(0.6), X(0.71), X(0.6), hw, soft);
            break;
        }
        case 'f': { // stem, top hook, crossbar
            draw_segment(img, X(0.45), X(0.25), X(0.45), X(0.85), hw, soft);
            draw_arc(img, X(0.58), X(0.25), X(0.13), pi, 2 * pi, hw, soft);
            draw_segment(img, X(0.3), X(0.45), X(0.62), X(0.45), hw, soft);
            break;
        }
        case 'g': { // upper bow + under-hook
            draw_arc(img, X(0.5), X(0.45), X(0.19), 0, 2 * pi, hw, soft);
            draw_segment(img, X(0.69), X(0.4), X(0.69), X(0.72), hw, soft);
            draw_arc(img, X(0.5), X(0.72), X(0.19), 0, pi, hw, soft);
            break;
        }
        case 'h': { // tall stem + arch
            draw_segment(img, X(0.3), X(0.12), X(0.3), X(0.85), hw, soft);
            draw_arc(img, X(0.5), X(0.62), X(0.2), pi, 2 * pi, hw, soft);
            draw_segment(img, X(0.7), X(0.62), X(0.7), X(0.85), hw, soft);
            break;
        }
        case 'i': { // minim + head mark
            draw_segment(img, X(0.5), X(0.4), X(0.5), X(0.85), hw, soft);
            if (delta == GlyphDelta::DiamondMark) {
                draw_segment(img, X(0.41), X(0.22), X(0.59), X(0.22), hw * 1.2, soft);
                draw_segment(img, X(0.5), X(0.13), X(0.5), X(0.31), hw * 1.2, soft);
            } else {
                draw_segment(img, X(0.5), X(0.2), X(0.5), X(0.22), hw * 1.15, soft);
            }
            break;
        }
        case 'j': { // minim with bottom hook + head mark
            draw_segment(img, X(0.55), X(0.4), X(0.55), X(0.78), hw, soft);
            draw_arc(img, X(0.42), X(0.78), X(0.13), 0, pi * 0.9, hw, soft);
            draw_segment(img, X(0.55), X(0.2), X(0.55), X(0.22), hw * 1.15, soft);
            break;
        }
        default:
            throw DataError("make_glyph: no built-in glyph for label '" + label + "'");
    }
    return img;
}

} // namespace detail

/// Renders the built-in glyph for one of the ten labels "a".."j", centered
/// horizontally in its cell. The shift is computed from the delta-free base
/// form, so A/B variants of the same character stay in the same gauge and
/// their difference is purely the injected delta.
inline GrayImage make_glyph(const std::string& label, int side,
                            GlyphDelta delta = GlyphDelta::None) {
    int shift = ink_centering_shift(detail::draw_glyph(label, side, GlyphDelta::None));
    GrayImage img =
        delta == GlyphDelta::None ? detail::draw_glyph(label, side, GlyphDelta::None)
                                  : detail::draw_glyph(label, side, delta);
    return shift_horizontal(img, shift);
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

/// Controls for the synthetic two-subtype corpus. Subtype A uses the base
/// glyphs; subtype B applies the configured per-character deltas. Shape
/// jitter perturbs each document's ground-truth prototypes with a smooth
/// random field, so documents within a subtype differ in a measurable way.
struct SynthSpec {
    std::vector<std::string> alphabet{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
    std::map<std::string, GlyphDelta> subtype_b_deltas{
        {"a", GlyphDelta::OpenBow},  {"b", GlyphDelta::AddSpur},
        {"c", GlyphDelta::Squarify}, {"e", GlyphDelta::TiltBar},
        {"g", GlyphDelta::Thicken},  {"i", GlyphDelta::DiamondMark}};
    int proto_side = 64;
    int line_height = 64;
    double pos_jitter = 0.0;       // std of per-glyph x noise, px
    double scale_jitter = 0.0;     // std of per-glyph scale noise
    double intensity_noise = 0.0;  // std of per-pixel gray noise
    double shape_jitter_a = 0.0;   // per-document prototype perturbation, subtype A
    double shape_jitter_b = 0.0;
    int lines_per_doc = 20;
    int docs_per_subtype = 4;
    int glyphs_per_line = 8;
    int reference_docs_per_subtype = 2;
    double spacing = 1.05; // glyph advance as a multiple of proto_side
    int margin = 12;
    Rgb ink{0.15, 0.12, 0.10};
    Rgb paper{0.92, 0.90, 0.86};
    std::uint64_t seed = 0;
    std::string corpus_id = "synth";

    void validate() const {
        if (alphabet.empty()) throw DataError("SynthSpec: empty alphabet");
        if (proto_side < 8) throw DataError("SynthSpec: proto_side too small");
        if (lines_per_doc < 1 || docs_per_subtype < 1 || glyphs_per_line < 1)
            throw DataError("SynthSpec: counts must be >= 1");
        if (pos_jitter < 0 || scale_jitter < 0 || intensity_noise < 0 || shape_jitter_a < 0 ||
            shape_jitter_b < 0)
            throw DataError("SynthSpec: noise stds must be >= 0");
        if (reference_docs_per_subtype < 0 || reference_docs_per_subtype > docs_per_subtype)
            throw DataError("SynthSpec: reference_docs_per_subtype out of range");
        if (std::size_t(lines_per_doc) * std::size_t(glyphs_per_line) < alphabet.size())
            throw DataError("SynthSpec: too few glyphs per document to cover the alphabet");
        for (const auto& [label, delta] : subtype_b_deltas)
            if (std::find(alphabet.begin(), alphabet.end(), label) == alphabet.end())
                throw DataError("SynthSpec: delta for label '" + label + "' not in alphabet");
        bool any = false;
        for (const auto& [label, delta] : subtype_b_deltas) any |= delta != GlyphDelta::None;
        if (!any) throw DataError("SynthSpec: at least one character must carry an A/B delta");
    }
};

struct GroundTruth {
    ModelState subtype_a;
    ModelState subtype_b;
    std::map<std::string, ModelState> per_doc;
    // ground-truth placements per line, in manifest order
    std::vector<std::vector<Placement>> placements;
};

struct SynthResult {
    CorpusManifest manifest; // image paths like images/<doc>_<line>.png
    std::vector<LineSample> lines; // manifest order, rendered at line_height
    GroundTruth truth;
};

namespace detail {

/// Smooth random field in [-1,1], unit maximum amplitude.
inline GrayImage smooth_field(int side, SplitMix64& rng) {
    GrayImage noise(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) noise.set(x, y, rng.uniform01());
    GrayImage blurred = gaussian_blur(noise, side / 16.0);
    // recenter to [-1,1] with max amplitude 1
    double lo = 1.0, hi = 0.0;
    for (double v : blurred.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    GrayImage out(side, side);
    double span = hi - lo;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            out.set(x, y, span > 0 ? (blurred.at(x, y) - lo) / span : 0.5);
    return out; // values in [0,1]; callers map to [-1,1]
}

inline GrayImage perturb_prototype(const GrayImage& base, double amplitude, SplitMix64& rng) {
    if (amplitude <= 0.0) return base;
    GrayImage field = smooth_field(base.width(), rng);
    GrayImage out(base.width(), base.height());
    for (int y = 0; y < base.height(); ++y)
        for (int x = 0; x < base.width(); ++x)
            out.set(x, y, base.at(x, y) + amplitude * (2.0 * field.at(x, y) - 1.0));
    return out;
}

} // namespace detail

/// Builds the ground-truth prototype set of one subtype.
inline std::vector<Prototype> synth_subtype_prototypes(const SynthSpec& spec, bool subtype_b) {
    std::vector<Prototype> protos;
    for (const auto& label : spec.alphabet) {
        GlyphDelta delta = GlyphDelta::None;
        if (subtype_b) {
            auto it = spec.subtype_b_deltas.find(label);
            if (it != spec.subtype_b_deltas.end()) delta = it->second;
        }
        protos.push_back({label, make_glyph(label, spec.proto_side, delta)});
    }
    return protos;
}

/// Renders the whole two-subtype corpus from ground truth under the sampled
/// jitters. Deterministic given the seed: every document and line draws from
/// its own derived stream.
inline SynthResult generate_corpus(const SynthSpec& spec) {
    spec.validate();
    SynthResult result;
    result.manifest.corpus_id = spec.corpus_id;

    const int side = spec.proto_side;
    const int H = spec.line_height;
    const int advance = int(std::lround(spec.spacing * side));
    const int W = 2 * spec.margin + (spec.glyphs_per_line - 1) * advance +
                  int(std::ceil(side * 1.3)) + 8;

    auto make_state = [&](std::vector<Prototype> protos, std::uint64_t seed) {
        ModelState st;
        st.alphabet = spec.alphabet;
        std::sort(st.alphabet.begin(), st.alphabet.end());
        // prototypes in sorted-alphabet order
        for (const auto& label : st.alphabet)
            for (auto& p : protos)
                if (p.char_id == label) st.prototypes.push_back(p);
        st.proto_side = side;
        st.line_height = H;
        st.bg_color = spec.paper;
        st.provenance = {ProvenanceKind::Reference, ""};
        st.training_seed = seed;
        return st;
    };
    result.truth.subtype_a = make_state(synth_subtype_prototypes(spec, false), spec.seed);
    result.truth.subtype_b = make_state(synth_subtype_prototypes(spec, true), spec.seed);

    for (int sub = 0; sub < 2; ++sub) {
        const std::string subtype = sub == 0 ? "A" : "B";
        const ModelState& base = sub == 0 ? result.truth.subtype_a : result.truth.subtype_b;
        const double shape_amp = sub == 0 ? spec.shape_jitter_a : spec.shape_jitter_b;
        for (int d = 0; d < spec.docs_per_subtype; ++d) {
            const int doc_index = sub * spec.docs_per_subtype + d;
            const std::string doc_id = subtype + std::to_string(d + 1);
            SplitMix64 doc_rng = seeded_stream(spec.seed, 1000 + std::uint64_t(doc_index));

            // per-document ground truth: smooth perturbation of the subtype base
            ModelState doc_truth = base;
            for (auto& proto : doc_truth.prototypes)
                proto.image = detail::perturb_prototype(proto.image, shape_amp, doc_rng);

            // glyph stream: one shuffled alphabet pass guarantees coverage,
            // the rest is uniform
            std::vector<std::string> stream = doc_truth.alphabet;
            for (std::size_t i = stream.size(); i > 1; --i)
                std::swap(stream[i - 1], stream[std::size_t(doc_rng.below(i))]);
            const std::size_t total = std::size_t(spec.lines_per_doc) * spec.glyphs_per_line;
            while (stream.size() < total)
                stream.push_back(doc_truth.alphabet[std::size_t(
                    doc_rng.below(doc_truth.alphabet.size()))]);

            ManifestDoc mdoc;
            mdoc.doc_id = doc_id;
            mdoc.subtype = subtype;
            mdoc.reference_member = d < spec.reference_docs_per_subtype;

            for (int l = 0; l < spec.lines_per_doc; ++l) {
                SplitMix64 line_rng = seeded_stream(
                    spec.seed, 1000000 + std::uint64_t(doc_index) * 10000 + std::uint64_t(l));
                std::vector<Placement> placements;
                std::string transcription;
                for (int g = 0; g < spec.glyphs_per_line; ++g) {
                    const std::string& label = stream[std::size_t(l) * spec.glyphs_per_line + g];
                    double x = spec.margin + double(g) * advance;
                    if (spec.pos_jitter > 0) x += line_rng.normal(0.0, spec.pos_jitter);
                    x = std::max(0.0, x);
                    double s = 1.0;
                    if (spec.scale_jitter > 0)
                        s = std::clamp(1.0 + line_rng.normal(0.0, spec.scale_jitter), 0.8, 1.25);
                    placements.push_back({label, x, s, spec.ink});
                    transcription += label;
                }
                ColorImage img =
                    composite_line(spec.paper, W, H, placements, doc_truth.prototypes);
                if (spec.intensity_noise > 0) {
                    for (int y = 0; y < H; ++y) {
                        for (int x = 0; x < W; ++x) {
                            double n = line_rng.normal(0.0, spec.intensity_noise);
                            Rgb c = img.at(x, y);
                            img.set(x, y, {c.r + n, c.g + n, c.b + n});
                        }
                    }
                }
                std::string image_name =
                    "images/" + doc_id + "_" + std::to_string(l) + ".png";
                mdoc.lines.push_back({image_name, transcription});
                LineSample sample;
                sample.image = std::move(img);
                sample.transcription =
                    std::vector<std::string>(placements.size());
                for (std::size_t g = 0; g < placements.size(); ++g)
                    sample.transcription[g] = placements[g].char_id;
                sample.doc_id = doc_id;
                result.lines.push_back(std::move(sample));
                result.truth.placements.push_back(std::move(placements));
            }
            result.truth.per_doc[doc_id] = std::move(doc_truth);
            result.manifest.documents.push_back(std::move(mdoc));
        }
    }
    return result;
}

/// Writes a generated corpus to disk in exactly the layout load_corpus
/// consumes, plus the ground-truth bundle under truth/.
inline void write_synth_corpus(const SynthResult& result, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "truth");

    std::size_t line_index = 0;
    for (const auto& doc : result.manifest.documents)
        for (const auto& line : doc.lines)
            write_png(dir / line.image, result.lines[line_index++].image);

    save_manifest(result.manifest, dir / "manifest.json");
    save_model(result.truth.subtype_a, dir / "truth" / "subtype_A.psm");
    save_model(result.truth.subtype_b, dir / "truth" / "subtype_B.psm");
    for (const auto& [doc_id, state] : result.truth.per_doc)
        save_model(state, dir / "truth" / ("doc_" + doc_id + ".psm"));

    nlohmann::ordered_json placements = nlohmann::ordered_json::array();
    std::size_t li = 0;
    for (const auto& doc : result.manifest.documents) {
        for (std::size_t l = 0; l < doc.lines.size(); ++l, ++li) {
            nlohmann::ordered_json jline;
            jline["doc_id"] = doc.doc_id;
            jline["line"] = l;
            jline["glyphs"] = nlohmann::ordered_json::array();
            for (const auto& pl : result.truth.placements[li])
                jline["glyphs"].push_back({{"char", pl.char_id},
                                           {"x", pl.x},
                                           {"scale", pl.scale},
                                           {"fg", {pl.fg_color.r, pl.fg_color.g, pl.fg_color.b}}});
            placements.push_back(std::move(jline));
        }
    }
    std::ofstream out(dir / "truth" / "placements.json");
    if (!out) throw DataError("write_synth_corpus: cannot write placements.json");
    out << placements.dump(2) << "\n";
}

} // namespace protoscribe
