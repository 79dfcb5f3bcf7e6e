#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "protoscribe/align.hpp"
#include "protoscribe/compositor.hpp"
#include "protoscribe/errors.hpp"
#include "protoscribe/model.hpp"
#include "protoscribe/model_io.hpp"
#include "protoscribe/parallel.hpp"
#include "protoscribe/rng.hpp"

namespace protoscribe {

struct TrainConfig {
    int max_rounds = 30;
    double proto_step = 1.0;        // blend factor toward the least-squares solution
    double convergence_tol = 1e-5;  // relative improvement below which training stops
    std::uint64_t seed = 0;
    bool freeze_placements = false; // must be true for finetuning
    int proto_side = 0;             // prototype side K; 0 means match the line height
    int threads = 0;                // 0: use all cores
    int warmup_rounds = 4;          // early rounds align at the neutral scale only
    AlignParams align;

    void validate() const {
        if (max_rounds < 1) throw DataError("TrainConfig: max_rounds must be >= 1");
        if (!(proto_step > 0.0)) throw DataError("TrainConfig: proto_step must be > 0");
        if (!(convergence_tol > 0.0)) throw DataError("TrainConfig: convergence_tol must be > 0");
    }

    static TrainConfig reference_defaults() { return {}; }
    static TrainConfig finetune_defaults() {
        TrainConfig c;
        c.freeze_placements = true;
        return c;
    }
};

struct UpdateResult {
    std::vector<Prototype> prototypes;
    std::vector<std::string> unseen_labels; // kept their previous prototype
};

/// Channel-wise lower median of a set of colors.
inline Rgb median_rgb(std::vector<Rgb> colors) {
    if (colors.empty()) throw DataError("median_rgb: empty input");
    std::vector<double> ch(colors.size());
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < colors.size(); ++i) ch[i] = colors[i][c];
        std::size_t mid = (ch.size() - 1) / 2;
        std::nth_element(ch.begin(), ch.begin() + mid, ch.end());
        if (c == 0) out.r = ch[mid];
        else if (c == 1) out.g = ch[mid];
        else out.b = ch[mid];
    }
    return out;
}

/// Re-estimates every prototype pixel as the occurrence-weighted
/// least-squares solution of the compositing equation, then blends toward it
/// by `step`. Compositing is affine in alpha once colors are known:
///   I(px) = (1 - a) * bg + a * fg  =>  a* = <I - bg, fg - bg> / |fg - bg|^2
/// per occurrence sample, weighted by |fg - bg|^2. Characters with no
/// occurrence keep their previous prototype and are reported.
inline UpdateResult update_prototypes(const std::vector<LineSample>& corpus,
                                      const std::vector<std::vector<Placement>>& placements,
                                      const ModelState& state, double step,
                                      const std::vector<Rgb>* line_bgs = nullptr) {
    if (placements.size() != corpus.size())
        throw DataError("update_prototypes: one placement sequence per line required");
    if (!(step >= 0.0)) throw DataError("update_prototypes: negative step");

    const int side = state.proto_side;
    const std::size_t n_px = std::size_t(side) * side;
    const std::size_t n_chars = state.alphabet.size();
    std::vector<double> acc_wa(n_chars * n_px, 0.0);
    std::vector<double> acc_w(n_chars * n_px, 0.0);
    std::vector<long> occurrences(n_chars, 0);

    for (std::size_t l = 0; l < corpus.size(); ++l) {
        const ColorImage& img = corpus[l].image;
        const Rgb bg = line_bgs ? (*line_bgs)[l] : estimate_background(img);
        const int W = img.width(), H = img.height();
        for (const Placement& pl : placements[l]) {
            int ci = state.index_of(pl.char_id);
            if (ci < 0) throw DataError("update_prototypes: unknown label '" + pl.char_id + "'");
            const double kr = pl.fg_color.r - bg.r;
            const double kg = pl.fg_color.g - bg.g;
            const double kb = pl.fg_color.b - bg.b;
            const double k2 = kr * kr + kg * kg + kb * kb;
            if (k2 < 1e-12) continue; // invisible ink, no evidence
            occurrences[std::size_t(ci)] += 1;
            const double s = pl.scale;
            const double y_off = glyph_y_offset(H, side, s);
            double* wa = acc_wa.data() + std::size_t(ci) * n_px;
            double* wt = acc_w.data() + std::size_t(ci) * n_px;
            for (int v = 0; v < side; ++v) {
                double cy = y_off + (v + 0.5) * s - 0.5;
                if (cy < 0.0 || cy > H - 1.0) continue;
                for (int u = 0; u < side; ++u) {
                    double cx = pl.x + (u + 0.5) * s - 0.5;
                    if (cx < 0.0 || cx > W - 1.0) continue;
                    Rgb obs = sample_clamped(img, cx, cy);
                    double num = (obs.r - bg.r) * kr + (obs.g - bg.g) * kg + (obs.b - bg.b) * kb;
                    double alpha = clamp01(num / k2);
                    wa[std::size_t(v) * side + u] += k2 * alpha;
                    wt[std::size_t(v) * side + u] += k2;
                }
            }
        }
    }

    UpdateResult result;
    result.prototypes.reserve(n_chars);
    for (std::size_t ci = 0; ci < n_chars; ++ci) {
        const GrayImage& old = state.prototypes[ci].image;
        if (occurrences[ci] == 0) {
            result.unseen_labels.push_back(state.alphabet[ci]);
            result.prototypes.push_back(state.prototypes[ci]);
            continue;
        }
        GrayImage img(side, side);
        const double* wa = acc_wa.data() + ci * n_px;
        const double* wt = acc_w.data() + ci * n_px;
        for (int v = 0; v < side; ++v) {
            for (int u = 0; u < side; ++u) {
                std::size_t k = std::size_t(v) * side + u;
                double value = old.at(u, v);
                if (wt[k] > 0.0) value = (1.0 - step) * value + step * (wa[k] / wt[k]);
                img.set(u, v, value);
            }
        }
        result.prototypes.push_back({state.alphabet[ci], std::move(img)});
    }
    return result;
}

/// Mean squared reconstruction error per pixel channel over the corpus.
inline double reconstruction_error(const std::vector<LineSample>& corpus,
                                   const std::vector<std::vector<Placement>>& placements,
                                   const std::vector<Prototype>& prototypes,
                                   const std::vector<Rgb>& line_bgs) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t l = 0; l < corpus.size(); ++l) {
        const ColorImage& img = corpus[l].image;
        ColorImage recon =
            composite_line(line_bgs[l], img.width(), img.height(), placements[l], prototypes);
        const auto& a = img.data();
        const auto& b = recon.data();
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - b[i];
            total += d * d;
        }
        count += a.size();
    }
    if (count == 0) throw NumericError("reconstruction_error: empty corpus");
    return total / double(count);
}

struct TrainLog {
    std::vector<double> round_errors;
    int rounds = 0;
    std::vector<std::vector<Placement>> final_placements;
    std::vector<Rgb> line_backgrounds;
    std::vector<std::string> warnings;
};

namespace detail {

inline GrayImage blob_prototype(int side, double amplitude, SplitMix64& noise) {
    GrayImage img(side, side);
    const double c = (side - 1) / 2.0;
    const double sigma = side / 4.0;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double r2 = (x - c) * (x - c) + (y - c) * (y - c);
            double v = amplitude * std::exp(-r2 / (2.0 * sigma * sigma));
            img.set(x, y, v + noise.uniform(-0.05, 0.05));
        }
    }
    return img;
}

inline void check_corpus_lines(const std::vector<LineSample>& corpus) {
    if (corpus.empty()) throw DataError("train: empty corpus");
    const int H = corpus.front().image.height();
    for (std::size_t l = 0; l < corpus.size(); ++l) {
        if (corpus[l].image.width() < 1)
            throw DataError("train: line " + std::to_string(l) + " has zero width");
        if (corpus[l].image.height() != H)
            throw DataError("train: line " + std::to_string(l) + " height differs; normalize first");
    }
}

} // namespace detail

/// Learns a reference model by alternating forced alignment and prototype
/// re-estimation until the reconstruction error stops improving. Prototypes
/// start as centered soft blobs with seed-controlled noise, so two runs with
/// the same corpus and seed are bit-identical.
inline ModelState train_reference(const std::vector<LineSample>& corpus, const TrainConfig& config,
                                  TrainLog* log = nullptr) {
    config.validate();
    detail::check_corpus_lines(corpus);

    std::set<std::string> labels;
    for (const auto& line : corpus)
        for (const auto& c : line.transcription) labels.insert(c);
    if (labels.empty()) throw DataError("train_reference: empty alphabet");

    const int H = corpus.front().image.height();
    const int K = config.proto_side > 0 ? config.proto_side : H;

    ModelState state;
    state.alphabet.assign(labels.begin(), labels.end());
    state.proto_side = K;
    state.line_height = H;
    state.provenance = {ProvenanceKind::Reference, ""};
    state.training_seed = config.seed;

    SplitMix64 noise(config.seed);
    for (const auto& label : state.alphabet)
        state.prototypes.push_back({label, detail::blob_prototype(K, 0.5, noise)});

    std::vector<Rgb> line_bgs(corpus.size());
    for (std::size_t l = 0; l < corpus.size(); ++l)
        line_bgs[l] = estimate_background(corpus[l].image);
    state.bg_color = median_rgb(line_bgs);

    // During warmup the search runs at the neutral scale only; scale choice
    // before the prototypes have any structure just injects jitter that the
    // per-character averages then bake in.
    AlignParams warm_align = config.align;
    if (!warm_align.scales.empty())
        warm_align.scales = {config.align.scales[std::size_t(
            detail::scale_preference(config.align.scales).front())]};

    std::vector<std::vector<Placement>> placements(corpus.size());
    double prev_err = detail::kInf;
    int rounds_done = 0;
    for (int round = 1; round <= config.max_rounds; ++round) {
        const bool warm = round <= config.warmup_rounds;
        // full-x search on round 1 and when the scale grid switches back on
        const bool fresh = round == 1 || round == config.warmup_rounds + 1;
        const AlignParams& align_now = warm ? warm_align : config.align;
        parallel_for(
            corpus.size(),
            [&](std::size_t l) {
                placements[l] = align_line(corpus[l], state.prototypes, line_bgs[l], align_now,
                                           fresh ? nullptr : &placements[l]);
            },
            config.threads);

        UpdateResult updated =
            update_prototypes(corpus, placements, state, config.proto_step, &line_bgs);
        state.prototypes = std::move(updated.prototypes);
        if (log)
            for (const auto& label : updated.unseen_labels)
                log->warnings.push_back("round " + std::to_string(round) + ": no occurrence of '" +
                                        label + "'");

        // keep prototypes horizontally centered; alignment re-locks the
        // positions next round ("standardized for position")
        bool recentered = false;
        for (auto& proto : state.prototypes) {
            int shift = ink_centering_shift(proto.image);
            if (shift != 0) {
                proto.image = shift_horizontal(proto.image, shift);
                recentered = true;
            }
        }

        double err = reconstruction_error(corpus, placements, state.prototypes, line_bgs);
        if (!std::isfinite(err)) throw NumericError("train_reference: non-finite reconstruction error");
        if (log) log->round_errors.push_back(err);
        rounds_done = round;
        if (round >= 2 && !recentered && !warm) {
            double rel = (prev_err - err) / std::max(prev_err, 1e-300);
            if (rel < config.convergence_tol) break;
        }
        prev_err = err;
    }

    if (log) {
        log->rounds = rounds_done;
        log->final_placements = placements;
        log->line_backgrounds = line_bgs;
    }
    return state;
}

struct FinetuneResult {
    ModelState model;
    std::vector<std::vector<Placement>> placements; // frozen reference-pass placements
    std::vector<Rgb> line_backgrounds;
    std::vector<std::string> warnings;
    int rounds = 0;
};

/// Re-estimates prototype pixels only. Placements are computed once with the
/// frozen reference prototypes and never move afterwards, which is what keeps
/// finetuned prototypes aligned and comparable across documents. Alphabet,
/// geometry and the background estimation rule carry over unchanged.
inline FinetuneResult finetune_prototypes(const ModelState& reference,
                                          const std::vector<LineSample>& corpus,
                                          const TrainConfig& config, AlignStats* = nullptr) {
    config.validate();
    if (!config.freeze_placements)
        throw DataError("finetune_prototypes: freeze_placements must be true");
    {
        auto violations = validate_model(reference);
        if (!violations.empty())
            throw DataError("finetune_prototypes: invalid reference model (" +
                            violations.front().field + ": " + violations.front().rule + ")");
    }
    detail::check_corpus_lines(corpus);
    if (corpus.front().image.height() != reference.line_height)
        throw DataError("finetune_prototypes: corpus height differs from reference line height");

    std::set<std::string> unknown;
    for (const auto& line : corpus)
        for (const auto& c : line.transcription)
            if (reference.index_of(c) < 0) unknown.insert(c);
    if (!unknown.empty()) {
        std::string list;
        for (const auto& c : unknown) list += (list.empty() ? "" : ", ") + c;
        throw DataError("finetune_prototypes: corpus uses labels unknown to the reference: " + list);
    }

    FinetuneResult result;
    result.line_backgrounds.resize(corpus.size());
    for (std::size_t l = 0; l < corpus.size(); ++l)
        result.line_backgrounds[l] = estimate_background(corpus[l].image);

    result.placements.resize(corpus.size());
    parallel_for(
        corpus.size(),
        [&](std::size_t l) {
            result.placements[l] = align_line(corpus[l], reference.prototypes,
                                              result.line_backgrounds[l], config.align);
        },
        config.threads);

    ModelState work = reference;
    for (int round = 1; round <= config.max_rounds; ++round) {
        UpdateResult updated = update_prototypes(corpus, result.placements, work,
                                                 config.proto_step, &result.line_backgrounds);
        double max_change = 0.0;
        for (std::size_t ci = 0; ci < work.prototypes.size(); ++ci) {
            const auto& a = work.prototypes[ci].image.data();
            const auto& b = updated.prototypes[ci].image.data();
            for (std::size_t i = 0; i < a.size(); ++i)
                max_change = std::max(max_change, std::abs(a[i] - b[i]));
        }
        if (round == 1)
            for (const auto& label : updated.unseen_labels)
                result.warnings.push_back("no occurrence of '" + label +
                                          "'; reference prototype kept");
        work.prototypes = std::move(updated.prototypes);
        result.rounds = round;
        if (max_change < config.convergence_tol) break;
    }

    work.provenance = {ProvenanceKind::Finetuned, model_id(reference)};
    work.training_seed = config.seed;
    work.bg_color = median_rgb(result.line_backgrounds);
    result.model = std::move(work);
    return result;
}

} // namespace protoscribe
