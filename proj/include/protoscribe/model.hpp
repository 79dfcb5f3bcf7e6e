#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "protoscribe/image.hpp"

namespace protoscribe {

/// One character's grayscale template. Intensity 1 denotes ink, 0 absence,
/// independent of the source-page polarity.
struct Prototype {
    std::string char_id;
    GrayImage image;
};

/// One glyph instance on a line: which character, where, how large, what ink
/// color. x is real-valued; compositing samples sub-pixel.
struct Placement {
    std::string char_id;
    double x = 0.0;
    double scale = 1.0;
    Rgb fg_color{0, 0, 0};
};

/// A transcribed text-line image, already normalized to the model height.
struct LineSample {
    ColorImage image;
    std::vector<std::string> transcription;
    std::string doc_id;
};

enum class ProvenanceKind { Reference, Finetuned };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::Reference;
    std::string parent_id; // content hash of the parent model when finetuned
};

/// Alphabet, prototypes, canvas geometry and provenance. Values are immutable
/// once built by training or loading; nothing here mutates in place.
struct ModelState {
    std::vector<std::string> alphabet;   // sorted, unique labels
    std::vector<Prototype> prototypes;   // one per label, same order
    int proto_side = 64;                 // K
    int line_height = 64;                // H
    Rgb bg_color{1, 1, 1};
    Provenance provenance;
    std::uint64_t training_seed = 0;

    int index_of(const std::string& label) const {
        for (std::size_t i = 0; i < alphabet.size(); ++i)
            if (alphabet[i] == label) return int(i);
        return -1;
    }

    const GrayImage* prototype_for(const std::string& label) const {
        int i = index_of(label);
        if (i < 0 || std::size_t(i) >= prototypes.size()) return nullptr;
        return &prototypes[std::size_t(i)].image;
    }

    bool same_geometry(const ModelState& o) const {
        return proto_side == o.proto_side && line_height == o.line_height;
    }
};

struct Violation {
    std::string field;
    std::string rule;
};

/// Checks every ModelState invariant; returns one entry per broken rule and
/// never throws. Empty result means the state is well formed.
inline std::vector<Violation> validate_model(const ModelState& state) {
    std::vector<Violation> out;
    if (state.alphabet.empty()) out.push_back({"alphabet", "alphabet-empty"});
    for (std::size_t i = 0; i + 1 < state.alphabet.size(); ++i) {
        if (!(state.alphabet[i] < state.alphabet[i + 1])) {
            out.push_back({"alphabet", "alphabet-not-sorted-unique"});
            break;
        }
    }
    if (state.proto_side < 1) out.push_back({"proto_side", "non-positive"});
    if (state.line_height < 1) out.push_back({"line_height", "non-positive"});

    for (const auto& label : state.alphabet) {
        bool found = false;
        for (const auto& p : state.prototypes)
            if (p.char_id == label) { found = true; break; }
        if (!found) out.push_back({"prototypes", "missing-prototype(" + label + ")"});
    }
    for (const auto& p : state.prototypes) {
        bool known = false;
        for (const auto& label : state.alphabet)
            if (label == p.char_id) { known = true; break; }
        if (!known) out.push_back({"prototypes", "prototype-without-label(" + p.char_id + ")"});
        if (p.image.width() != state.proto_side || p.image.height() != state.proto_side)
            out.push_back({"prototypes", "prototype-size(" + p.char_id + ")"});
        for (double v : p.image.data()) {
            if (!(v >= 0.0 && v <= 1.0)) {
                out.push_back({"prototypes", "intensity-out-of-range(" + p.char_id + ")"});
                break;
            }
        }
    }
    Rgb bg = state.bg_color;
    if (!(bg.r >= 0 && bg.r <= 1 && bg.g >= 0 && bg.g <= 1 && bg.b >= 0 && bg.b <= 1))
        out.push_back({"bg_color", "channel-out-of-range"});
    if (state.provenance.kind == ProvenanceKind::Finetuned && state.provenance.parent_id.empty())
        out.push_back({"provenance", "finetuned-without-parent-id"});
    return out;
}

/// Validation against the parent a finetuned state was derived from. The two
/// must agree on alphabet order and geometry or pixel-space comparison of
/// their prototypes is meaningless.
inline std::vector<Violation> validate_model(const ModelState& state, const ModelState& parent) {
    std::vector<Violation> out = validate_model(state);
    if (state.alphabet != parent.alphabet) out.push_back({"alphabet", "alphabet-mismatch"});
    if (!state.same_geometry(parent)) out.push_back({"proto_side/line_height", "geometry-mismatch"});
    return out;
}

inline std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace protoscribe
