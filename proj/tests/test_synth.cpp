#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "protoscribe/compositor.hpp"
#include "protoscribe/synth.hpp"

using namespace protoscribe;

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.proto_side = 24;
    spec.line_height = 24;
    spec.lines_per_doc = 3;
    spec.docs_per_subtype = 2;
    spec.glyphs_per_line = 5;
    spec.reference_docs_per_subtype = 1;
    spec.alphabet = {"a", "b", "c", "d", "e"};
    spec.subtype_b_deltas = {{"a", GlyphDelta::OpenBow}, {"c", GlyphDelta::Squarify}};
    spec.seed = 42;
    return spec;
}

} // namespace

TEST_CASE("generated corpora are deterministic given the seed") {
    SynthResult r1 = generate_corpus(small_spec());
    SynthResult r2 = generate_corpus(small_spec());
    CHECK(manifest_to_json(r1.manifest) == manifest_to_json(r2.manifest));
    REQUIRE(r1.lines.size() == r2.lines.size());
    for (std::size_t i = 0; i < r1.lines.size(); ++i) CHECK(r1.lines[i].image == r2.lines[i].image);

    SynthSpec other = small_spec();
    other.seed = 43;
    SynthResult r3 = generate_corpus(other);
    bool any_diff = false;
    for (std::size_t i = 0; i < r1.lines.size() && !any_diff; ++i)
        any_diff = !(r1.lines[i].image == r3.lines[i].image);
    CHECK(any_diff);
}

TEST_CASE("noiseless lines are exactly reproducible from the ground-truth bundle") {
    SynthResult r = generate_corpus(small_spec()); // all jitters zero
    std::size_t li = 0;
    for (const auto& doc : r.manifest.documents) {
        const ModelState& truth = r.truth.per_doc.at(doc.doc_id);
        for (std::size_t l = 0; l < doc.lines.size(); ++l, ++li) {
            ColorImage again =
                composite_line(truth.bg_color, r.lines[li].image.width(),
                               r.lines[li].image.height(), r.truth.placements[li],
                               truth.prototypes);
            CHECK(again == r.lines[li].image);
        }
    }
}

TEST_CASE("every document's lines cover the whole alphabet") {
    SynthResult r = generate_corpus(small_spec());
    std::map<std::string, std::set<std::string>> seen;
    for (const auto& line : r.lines)
        for (const auto& label : line.transcription) seen[line.doc_id].insert(label);
    for (const auto& doc : r.manifest.documents)
        CHECK(seen[doc.doc_id].size() == small_spec().alphabet.size());
}

TEST_CASE("subtype deltas are confined to the edited characters' footprints") {
    SynthSpec spec = small_spec();
    SynthResult r = generate_corpus(spec);
    const ModelState& ta = r.truth.subtype_a;
    const ModelState& tb = r.truth.subtype_b;

    // injected deltas differ exactly on the configured characters
    for (std::size_t ci = 0; ci < ta.alphabet.size(); ++ci) {
        bool has_delta = spec.subtype_b_deltas.count(ta.alphabet[ci]) > 0;
        bool differs = !(ta.prototypes[ci].image == tb.prototypes[ci].image);
        CHECK(differs == has_delta);
    }

    // render the same placements under both truths: differences only inside
    // delta-character footprints
    const auto& placements = r.truth.placements[0];
    int W = r.lines[0].image.width(), H = r.lines[0].image.height();
    ColorImage va = composite_line(spec.paper, W, H, placements, ta.prototypes);
    ColorImage vb = composite_line(spec.paper, W, H, placements, tb.prototypes);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            Rgb a = va.at(x, y), b = vb.at(x, y);
            if (a == b) continue;
            bool inside_delta_glyph = false;
            for (const auto& pl : placements) {
                if (!spec.subtype_b_deltas.count(pl.char_id)) continue;
                double extent = spec.proto_side * pl.scale;
                if (x + 1.0 >= pl.x && x - 1.0 <= pl.x + extent) inside_delta_glyph = true;
            }
            CHECK(inside_delta_glyph);
        }
    }
}

TEST_CASE("glyphs carry solid ink") {
    for (const auto& label : SynthSpec{}.alphabet) {
        GrayImage g = make_glyph(label, 32);
        double peak = 0;
        for (double v : g.data()) peak = std::max(peak, v);
        CHECK(peak >= 0.95);
    }
}

TEST_CASE("spec validation rejects inconsistent settings") {
    SynthSpec spec = small_spec();
    spec.subtype_b_deltas = {{"z", GlyphDelta::OpenBow}};
    CHECK_THROWS_AS(spec.validate(), DataError);

    spec = small_spec();
    spec.subtype_b_deltas.clear();
    CHECK_THROWS_AS(spec.validate(), DataError); // needs at least one delta

    spec = small_spec();
    spec.pos_jitter = -1;
    CHECK_THROWS_AS(spec.validate(), DataError);

    spec = small_spec();
    spec.lines_per_doc = 1;
    spec.glyphs_per_line = 2; // cannot cover 5 labels
    CHECK_THROWS_AS(spec.validate(), DataError);
}

TEST_CASE("shape jitter perturbs per-document prototypes") {
    SynthSpec spec = small_spec();
    spec.shape_jitter_a = 0.1;
    SynthResult r = generate_corpus(spec);
    const ModelState& d1 = r.truth.per_doc.at("A1");
    const ModelState& d2 = r.truth.per_doc.at("A2");
    bool differs = false;
    for (std::size_t i = 0; i < d1.prototypes.size() && !differs; ++i)
        differs = !(d1.prototypes[i].image == d2.prototypes[i].image);
    CHECK(differs);
}
