// protoscribe command-line tool: config-driven, seed-reproducible runs of the
// prototype learning and comparison pipeline. Subcommands: synth, train,
// finetune, filter, compare, graph, variability, pipeline.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "protoscribe/analysis.hpp"
#include "protoscribe/corpus.hpp"
#include "protoscribe/emit.hpp"
#include "protoscribe/errors.hpp"
#include "protoscribe/filter.hpp"
#include "protoscribe/model_io.hpp"
#include "protoscribe/png_io.hpp"
#include "protoscribe/svg.hpp"
#include "protoscribe/synth.hpp"
#include "protoscribe/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Run configuration: defaults < environment < flags < config file
// ---------------------------------------------------------------------------

struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 0;
    int line_height = 64;
    int proto_side = 0; // 0: match line height

    int max_rounds = 30;
    double proto_step = 1.0;
    double convergence_tol = 1e-5;

    protoscribe::AlignParams align;
    protoscribe::FilterParams filter;

    protoscribe::DistanceNorm norm = protoscribe::DistanceNorm::L2;
    bool use_filtered = true;
    protoscribe::VariabilityAgg variability = protoscribe::VariabilityAgg::SumPixels;

    protoscribe::CharsetMode charset_mode = protoscribe::CharsetMode::Passthrough;
    std::vector<std::string> charset_allow;
    std::vector<std::string> charset_exclude;
    bool lowercase_alpha = false;

    protoscribe::SynthSpec synth;

    protoscribe::TrainConfig train_config(bool finetune) const {
        protoscribe::TrainConfig c;
        c.max_rounds = max_rounds;
        c.proto_step = proto_step;
        c.convergence_tol = convergence_tol;
        c.seed = seed;
        c.freeze_placements = finetune;
        c.proto_side = proto_side;
        c.threads = threads;
        c.align = align;
        return c;
    }

    protoscribe::CharsetPolicy charset_policy() const {
        protoscribe::CharsetPolicy p;
        p.mode = charset_mode;
        if (lowercase_alpha) {
            std::set<std::string> excluded(charset_exclude.begin(), charset_exclude.end());
            p = protoscribe::CharsetPolicy::lowercase_alpha(excluded, charset_mode);
            return p;
        }
        p.allow.insert(charset_allow.begin(), charset_allow.end());
        p.exclude.insert(charset_exclude.begin(), charset_exclude.end());
        return p;
    }
};

std::string mode_name(protoscribe::CharsetMode m) {
    switch (m) {
        case protoscribe::CharsetMode::Drop: return "drop";
        case protoscribe::CharsetMode::Error: return "error";
        default: return "passthrough";
    }
}

protoscribe::CharsetMode mode_from(const std::string& s) {
    if (s == "drop") return protoscribe::CharsetMode::Drop;
    if (s == "error") return protoscribe::CharsetMode::Error;
    if (s == "passthrough") return protoscribe::CharsetMode::Passthrough;
    throw UsageError("charset.mode must be drop|error|passthrough, got '" + s + "'");
}

std::string delta_name(protoscribe::GlyphDelta d) { return protoscribe::to_string(d); }

protoscribe::GlyphDelta delta_from(const std::string& s) {
    using protoscribe::GlyphDelta;
    if (s == "none") return GlyphDelta::None;
    if (s == "open-bow") return GlyphDelta::OpenBow;
    if (s == "add-spur") return GlyphDelta::AddSpur;
    if (s == "squarify") return GlyphDelta::Squarify;
    if (s == "tilt-bar") return GlyphDelta::TiltBar;
    if (s == "thicken") return GlyphDelta::Thicken;
    if (s == "diamond-mark") return GlyphDelta::DiamondMark;
    throw UsageError("unknown glyph delta '" + s + "'");
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["line_height"] = c.line_height;
    j["proto_side"] = c.proto_side;
    j["train"] = {{"max_rounds", c.max_rounds},
                  {"proto_step", c.proto_step},
                  {"convergence_tol", c.convergence_tol}};
    j["align"] = {{"scales", c.align.scales},
                  {"advance_factor", c.align.advance_factor},
                  {"refine_window", c.align.refine_window},
                  {"min_ink_contrast", c.align.min_ink_contrast}};
    j["filter"] = {{"t", c.filter.t},
                   {"dilate_radius", c.filter.dilate_radius},
                   {"sigma", c.filter.sigma},
                   {"t_prime", c.filter.t_prime},
                   {"warn_at", c.filter.warn_at},
                   {"fail_at", c.filter.fail_at},
                   {"element",
                    c.filter.element == protoscribe::StructuringElement::Disk ? "disk" : "square"}};
    j["analysis"] = {{"norm", c.norm == protoscribe::DistanceNorm::L1 ? "l1" : "l2"},
                     {"use_filtered", c.use_filtered},
                     {"variability",
                      c.variability == protoscribe::VariabilityAgg::MeanPixels ? "mean" : "sum"}};
    j["charset"] = {{"mode", mode_name(c.charset_mode)},
                    {"allow", c.charset_allow},
                    {"exclude", c.charset_exclude},
                    {"lowercase_alpha", c.lowercase_alpha}};
    ordered_json deltas = ordered_json::object();
    for (const auto& [label, d] : c.synth.subtype_b_deltas) deltas[label] = delta_name(d);
    j["synth"] = {{"alphabet", c.synth.alphabet},
                  {"subtype_b_deltas", deltas},
                  {"pos_jitter", c.synth.pos_jitter},
                  {"scale_jitter", c.synth.scale_jitter},
                  {"intensity_noise", c.synth.intensity_noise},
                  {"shape_jitter_a", c.synth.shape_jitter_a},
                  {"shape_jitter_b", c.synth.shape_jitter_b},
                  {"lines_per_doc", c.synth.lines_per_doc},
                  {"docs_per_subtype", c.synth.docs_per_subtype},
                  {"glyphs_per_line", c.synth.glyphs_per_line},
                  {"reference_docs_per_subtype", c.synth.reference_docs_per_subtype},
                  {"spacing", c.synth.spacing},
                  {"margin", c.synth.margin},
                  {"ink", {c.synth.ink.r, c.synth.ink.g, c.synth.ink.b}},
                  {"paper", {c.synth.paper.r, c.synth.paper.g, c.synth.paper.b}},
                  {"corpus_id", c.synth.corpus_id}};
    return j;
}

void apply_config_json(RunConfig& c, const json& j) {
    try {
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads")) c.threads = j["threads"].get<int>();
        if (j.contains("line_height")) c.line_height = j["line_height"].get<int>();
        if (j.contains("proto_side")) c.proto_side = j["proto_side"].get<int>();
        if (j.contains("train")) {
            const json& t = j["train"];
            if (t.contains("max_rounds")) c.max_rounds = t["max_rounds"].get<int>();
            if (t.contains("proto_step")) c.proto_step = t["proto_step"].get<double>();
            if (t.contains("convergence_tol"))
                c.convergence_tol = t["convergence_tol"].get<double>();
        }
        if (j.contains("align")) {
            const json& a = j["align"];
            if (a.contains("scales")) c.align.scales = a["scales"].get<std::vector<double>>();
            if (a.contains("advance_factor"))
                c.align.advance_factor = a["advance_factor"].get<double>();
            if (a.contains("refine_window")) c.align.refine_window = a["refine_window"].get<int>();
            if (a.contains("min_ink_contrast"))
                c.align.min_ink_contrast = a["min_ink_contrast"].get<double>();
        }
        if (j.contains("filter")) {
            const json& f = j["filter"];
            if (f.contains("t")) c.filter.t = f["t"].get<double>();
            if (f.contains("dilate_radius")) c.filter.dilate_radius = f["dilate_radius"].get<int>();
            if (f.contains("sigma")) c.filter.sigma = f["sigma"].get<double>();
            if (f.contains("t_prime")) c.filter.t_prime = f["t_prime"].get<double>();
            if (f.contains("warn_at")) c.filter.warn_at = f["warn_at"].get<double>();
            if (f.contains("fail_at")) c.filter.fail_at = f["fail_at"].get<double>();
            if (f.contains("element"))
                c.filter.element = f["element"].get<std::string>() == "disk"
                                       ? protoscribe::StructuringElement::Disk
                                       : protoscribe::StructuringElement::Square;
        }
        if (j.contains("analysis")) {
            const json& a = j["analysis"];
            if (a.contains("norm"))
                c.norm = a["norm"].get<std::string>() == "l1" ? protoscribe::DistanceNorm::L1
                                                              : protoscribe::DistanceNorm::L2;
            if (a.contains("use_filtered")) c.use_filtered = a["use_filtered"].get<bool>();
            if (a.contains("variability"))
                c.variability = a["variability"].get<std::string>() == "mean"
                                    ? protoscribe::VariabilityAgg::MeanPixels
                                    : protoscribe::VariabilityAgg::SumPixels;
        }
        if (j.contains("charset")) {
            const json& a = j["charset"];
            if (a.contains("mode")) c.charset_mode = mode_from(a["mode"].get<std::string>());
            if (a.contains("allow")) c.charset_allow = a["allow"].get<std::vector<std::string>>();
            if (a.contains("exclude"))
                c.charset_exclude = a["exclude"].get<std::vector<std::string>>();
            if (a.contains("lowercase_alpha")) c.lowercase_alpha = a["lowercase_alpha"].get<bool>();
        }
        if (j.contains("synth")) {
            const json& s = j["synth"];
            if (s.contains("alphabet"))
                c.synth.alphabet = s["alphabet"].get<std::vector<std::string>>();
            if (s.contains("subtype_b_deltas")) {
                c.synth.subtype_b_deltas.clear();
                for (const auto& [label, name] : s["subtype_b_deltas"].items())
                    c.synth.subtype_b_deltas[label] = delta_from(name.get<std::string>());
            }
            if (s.contains("pos_jitter")) c.synth.pos_jitter = s["pos_jitter"].get<double>();
            if (s.contains("scale_jitter")) c.synth.scale_jitter = s["scale_jitter"].get<double>();
            if (s.contains("intensity_noise"))
                c.synth.intensity_noise = s["intensity_noise"].get<double>();
            if (s.contains("shape_jitter_a"))
                c.synth.shape_jitter_a = s["shape_jitter_a"].get<double>();
            if (s.contains("shape_jitter_b"))
                c.synth.shape_jitter_b = s["shape_jitter_b"].get<double>();
            if (s.contains("lines_per_doc")) c.synth.lines_per_doc = s["lines_per_doc"].get<int>();
            if (s.contains("docs_per_subtype"))
                c.synth.docs_per_subtype = s["docs_per_subtype"].get<int>();
            if (s.contains("glyphs_per_line"))
                c.synth.glyphs_per_line = s["glyphs_per_line"].get<int>();
            if (s.contains("reference_docs_per_subtype"))
                c.synth.reference_docs_per_subtype = s["reference_docs_per_subtype"].get<int>();
            if (s.contains("spacing")) c.synth.spacing = s["spacing"].get<double>();
            if (s.contains("margin")) c.synth.margin = s["margin"].get<int>();
            if (s.contains("ink"))
                c.synth.ink = {s["ink"].at(0).get<double>(), s["ink"].at(1).get<double>(),
                               s["ink"].at(2).get<double>()};
            if (s.contains("paper"))
                c.synth.paper = {s["paper"].at(0).get<double>(), s["paper"].at(1).get<double>(),
                                 s["paper"].at(2).get<double>()};
            if (s.contains("corpus_id")) c.synth.corpus_id = s["corpus_id"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config file: ") + e.what());
    }
}

/// File-name-safe form of a character or model label.
std::string safe_label(const std::string& label) {
    bool plain = !label.empty();
    for (char ch : label)
        if (!(std::isalnum((unsigned char)ch) || ch == '-' || ch == '_')) plain = false;
    if (plain) return label;
    std::string out = "u";
    char buf[4];
    for (unsigned char ch : label) {
        std::snprintf(buf, sizeof(buf), "%02X", ch);
        out += buf;
    }
    return out;
}

void write_run_config(const RunConfig& cfg, const fs::path& out_dir, const std::string& subcommand,
                      const std::map<std::string, std::string>& inputs) {
    ordered_json j;
    j["subcommand"] = subcommand;
    j["inputs"] = inputs;
    j["config"] = config_to_json(cfg);
    protoscribe::write_text_file(out_dir / "run_config.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces
// ---------------------------------------------------------------------------

std::vector<protoscribe::LineSample> lines_of_docs(const protoscribe::LoadedCorpus& corpus,
                                                   const std::set<std::string>& doc_ids) {
    std::vector<protoscribe::LineSample> out;
    for (const auto& doc : corpus.docs) {
        if (!doc_ids.count(doc.doc_id)) continue;
        for (std::size_t idx : doc.line_indices) out.push_back(corpus.lines[idx]);
    }
    return out;
}

struct Fleet {
    std::vector<protoscribe::DocEntry> entries;                 // metadata + model pointers
    std::map<std::string, protoscribe::ModelState> doc_models;  // storage
};

/// Two subtype labels, sorted; exactly two must be declared.
std::pair<std::string, std::string> subtype_pair(const protoscribe::LoadedCorpus& corpus) {
    std::set<std::string> subtypes;
    for (const auto& doc : corpus.docs)
        if (!doc.subtype.empty()) subtypes.insert(doc.subtype);
    if (subtypes.size() != 2)
        throw protoscribe::DataError("expected exactly 2 declared subtypes, found " +
                                     std::to_string(subtypes.size()));
    auto it = subtypes.begin();
    std::string a = *it++;
    std::string b = *it;
    return {a, b};
}

int run_synth(const RunConfig& cfg, const fs::path& out_dir) {
    protoscribe::SynthSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    spec.proto_side = cfg.proto_side > 0 ? cfg.proto_side : cfg.line_height;
    spec.line_height = cfg.line_height;
    protoscribe::SynthResult result = protoscribe::generate_corpus(spec);
    protoscribe::write_synth_corpus(result, out_dir);
    write_run_config(cfg, out_dir, "synth", {});
    std::cout << "synth: wrote " << result.lines.size() << " lines, "
              << result.manifest.documents.size() << " documents to " << out_dir.string() << "\n";
    return 0;
}

int run_train(const RunConfig& cfg, const fs::path& out_dir, const fs::path& corpus_path,
              bool reference_only) {
    protoscribe::LoadedCorpus corpus =
        protoscribe::load_corpus(corpus_path, cfg.line_height, cfg.charset_policy());
    std::vector<protoscribe::LineSample> lines;
    if (reference_only) {
        std::set<std::string> ids;
        for (const auto& doc : corpus.docs)
            if (doc.reference_member) ids.insert(doc.doc_id);
        lines = lines_of_docs(corpus, ids);
    } else {
        lines = corpus.lines;
    }
    if (lines.empty()) throw protoscribe::DataError("train: no lines selected");

    protoscribe::TrainLog log;
    protoscribe::ModelState model = protoscribe::train_reference(lines, cfg.train_config(false), &log);
    protoscribe::save_model(model, out_dir / "reference.psm");

    ordered_json jlog;
    jlog["rounds"] = log.rounds;
    jlog["round_errors"] = log.round_errors;
    jlog["warnings"] = log.warnings;
    jlog["model_id"] = protoscribe::model_id(model);
    protoscribe::write_text_file(out_dir / "train_log.json", jlog.dump(2) + "\n");
    write_run_config(cfg, out_dir, "train", {{"corpus", corpus_path.string()}});
    std::cout << "train: " << log.rounds << " rounds, final error "
              << (log.round_errors.empty() ? 0.0 : log.round_errors.back()) << ", model "
              << (out_dir / "reference.psm").string() << "\n";
    return 0;
}

int run_finetune(const RunConfig& cfg, const fs::path& out_dir, const fs::path& reference_path,
                 const fs::path& corpus_path, const std::string& doc_id) {
    protoscribe::ModelState reference = protoscribe::load_model(reference_path);
    protoscribe::LoadedCorpus corpus =
        protoscribe::load_corpus(corpus_path, reference.line_height, cfg.charset_policy());
    std::vector<protoscribe::LineSample> lines;
    if (doc_id.empty()) {
        lines = corpus.lines;
    } else {
        lines = lines_of_docs(corpus, {doc_id});
        if (lines.empty())
            throw protoscribe::DataError("finetune: no lines for doc '" + doc_id + "'");
    }

    protoscribe::FinetuneResult result =
        protoscribe::finetune_prototypes(reference, lines, cfg.train_config(true));
    std::string name = doc_id.empty() ? "finetuned" : "doc_" + safe_label(doc_id);
    protoscribe::save_model(result.model, out_dir / (name + ".psm"));

    ordered_json jplacements = ordered_json::array();
    for (std::size_t l = 0; l < result.placements.size(); ++l) {
        ordered_json jl = ordered_json::array();
        for (const auto& pl : result.placements[l])
            jl.push_back({{"char", pl.char_id},
                          {"x", pl.x},
                          {"scale", pl.scale},
                          {"fg", {pl.fg_color.r, pl.fg_color.g, pl.fg_color.b}}});
        jplacements.push_back(std::move(jl));
    }
    ordered_json jlog;
    jlog["rounds"] = result.rounds;
    jlog["warnings"] = result.warnings;
    jlog["parent_id"] = result.model.provenance.parent_id;
    jlog["placements"] = std::move(jplacements);
    protoscribe::write_text_file(out_dir / (name + "_finetune_log.json"), jlog.dump(2) + "\n");
    write_run_config(cfg, out_dir, "finetune",
                     {{"reference", reference_path.string()},
                      {"corpus", corpus_path.string()},
                      {"doc", doc_id}});
    std::cout << "finetune: " << result.rounds << " update rounds, model "
              << (out_dir / (name + ".psm")).string() << "\n";
    return 0;
}

int run_filter(const RunConfig& cfg, const fs::path& out_dir, const fs::path& reference_path,
               const std::vector<fs::path>& model_paths) {
    protoscribe::ModelState reference = protoscribe::load_model(reference_path);
    std::vector<protoscribe::ModelState> models;
    std::vector<std::string> names;
    for (const auto& p : model_paths) {
        models.push_back(protoscribe::load_model(p));
        names.push_back(p.stem().string());
    }

    ordered_json jreports = ordered_json::object();
    std::map<std::string, std::map<std::string, protoscribe::FilterFlag>> flags;
    for (std::size_t m = 0; m < models.size(); ++m) {
        if (models[m].alphabet != reference.alphabet || !models[m].same_geometry(reference))
            throw protoscribe::DataError("filter: model '" + names[m] +
                                         "' alphabet/geometry differs from reference");
        ordered_json per_char = ordered_json::array();
        for (std::size_t ci = 0; ci < reference.alphabet.size(); ++ci) {
            protoscribe::FilterReport report = protoscribe::make_filter_report(
                reference.prototypes[ci], models[m].prototypes[ci], cfg.filter);
            flags[names[m]][report.char_id] = report.flag;
            per_char.push_back(protoscribe::filter_report_to_json(report));
            protoscribe::write_png(out_dir / ("filtered_" + safe_label(names[m]) + "_" +
                                              safe_label(report.char_id) + ".png"),
                                   report.filtered);
        }
        jreports[names[m]] = std::move(per_char);
    }

    std::vector<const protoscribe::ModelState*> sheet_models{&reference};
    std::vector<std::string> sheet_names{"reference"};
    for (std::size_t m = 0; m < models.size(); ++m) {
        sheet_models.push_back(&models[m]);
        sheet_names.push_back(names[m]);
    }
    protoscribe::write_png(out_dir / "sheet.png",
                           protoscribe::prototype_sheet(sheet_models, &flags, &sheet_names));

    ordered_json j;
    j["rows"] = sheet_names;
    j["columns"] = reference.alphabet;
    j["reports"] = std::move(jreports);
    protoscribe::write_text_file(out_dir / "filter_report.json", j.dump(2) + "\n");
    write_run_config(cfg, out_dir, "filter", {{"reference", reference_path.string()}});
    std::cout << "filter: " << models.size() << " models, sheet " << (out_dir / "sheet.png").string()
              << "\n";
    return 0;
}

int run_compare(const RunConfig& cfg, const fs::path& out_dir, const fs::path& model_a_path,
                const fs::path& model_b_path, const fs::path& reference_path) {
    protoscribe::ModelState a = protoscribe::load_model(model_a_path);
    protoscribe::ModelState b = protoscribe::load_model(model_b_path);
    if (a.alphabet != b.alphabet || !a.same_geometry(b))
        throw protoscribe::DataError("compare: models are not comparable (alphabet/geometry)");

    std::map<std::string, protoscribe::GrayImage> masks;
    if (!reference_path.empty()) {
        protoscribe::ModelState reference = protoscribe::load_model(reference_path);
        if (reference.alphabet != a.alphabet || !reference.same_geometry(a))
            throw protoscribe::DataError("compare: reference not comparable with models");
        for (const auto& proto : reference.prototypes)
            masks[proto.char_id] = protoscribe::reference_mask(proto, cfg.filter);
    }

    std::string name_a = model_a_path.stem().string();
    std::string name_b = model_b_path.stem().string();
    ordered_json jdist = ordered_json::object();
    for (std::size_t ci = 0; ci < a.alphabet.size(); ++ci) {
        const std::string& label = a.alphabet[ci];
        protoscribe::GrayImage pa = a.prototypes[ci].image;
        protoscribe::GrayImage pb = b.prototypes[ci].image;
        if (!masks.empty()) {
            pa = protoscribe::filter_prototype(masks.at(label), a.prototypes[ci]);
            pb = protoscribe::filter_prototype(masks.at(label), b.prototypes[ci]);
        }
        protoscribe::DifferenceMap diff = protoscribe::difference_map(pa, pb);
        protoscribe::write_png(out_dir / ("diff_" + safe_label(label) + ".png"), diff.render);
        jdist[label] = protoscribe::prototype_distance(pa, pb, cfg.norm);
    }
    ordered_json j;
    j["model_a"] = name_a;
    j["model_b"] = name_b;
    j["filtered"] = !masks.empty();
    j["distances"] = std::move(jdist);
    protoscribe::write_text_file(out_dir / "distances.json", j.dump(2) + "\n");
    write_run_config(cfg, out_dir, "compare",
                     {{"model_a", model_a_path.string()}, {"model_b", model_b_path.string()}});
    std::cout << "compare: wrote per-character difference maps to " << out_dir.string() << "\n";
    return 0;
}

Fleet load_fleet(const protoscribe::LoadedCorpus& corpus, const fs::path& models_dir,
                 const protoscribe::ModelState& reference) {
    Fleet fleet;
    for (const auto& doc : corpus.docs) {
        fs::path path = models_dir / ("doc_" + safe_label(doc.doc_id) + ".psm");
        if (!fs::exists(path))
            throw protoscribe::DataError("missing document model " + path.string());
        protoscribe::ModelState model = protoscribe::load_model(path);
        if (model.alphabet != reference.alphabet || !model.same_geometry(reference))
            throw protoscribe::DataError("graph: model for doc '" + doc.doc_id +
                                         "' alphabet/geometry mismatch with reference");
        fleet.doc_models[doc.doc_id] = std::move(model);
    }
    for (const auto& doc : corpus.docs) {
        protoscribe::DocEntry entry;
        entry.doc_id = doc.doc_id;
        entry.subtype = doc.subtype;
        entry.reference_member = doc.reference_member;
        entry.char_counts = doc.char_counts;
        entry.model = &fleet.doc_models.at(doc.doc_id);
        fleet.entries.push_back(std::move(entry));
    }
    return fleet;
}

int run_graph(const RunConfig& cfg, const fs::path& out_dir, const fs::path& reference_path,
              const fs::path& ref_a_path, const fs::path& ref_b_path, const fs::path& corpus_path,
              const fs::path& models_dir, std::string subtype_a, std::string subtype_b) {
    protoscribe::ModelState reference = protoscribe::load_model(reference_path);
    protoscribe::ModelState ref_a = protoscribe::load_model(ref_a_path);
    protoscribe::ModelState ref_b = protoscribe::load_model(ref_b_path);
    protoscribe::LoadedCorpus corpus =
        protoscribe::load_corpus(corpus_path, reference.line_height, cfg.charset_policy());
    if (subtype_a.empty() || subtype_b.empty()) {
        auto [a, b] = subtype_pair(corpus);
        subtype_a = a;
        subtype_b = b;
    }
    Fleet fleet = load_fleet(corpus, models_dir, reference);
    protoscribe::AnalysisContext ctx(reference, cfg.filter, cfg.norm, cfg.use_filtered,
                                     cfg.variability);

    ordered_json jgraphs = ordered_json::array();
    for (const auto& label : reference.alphabet) {
        protoscribe::ComparisonGraph g = protoscribe::character_graph(
            ctx, label, fleet.entries, ref_a, ref_b, subtype_a, subtype_b);
        protoscribe::write_text_file(out_dir / ("character_" + safe_label(label) + ".svg"),
                                     protoscribe::emit_graph_svg(g));
        jgraphs.push_back(protoscribe::graph_to_json(g));
    }
    for (const auto& entry : fleet.entries) {
        protoscribe::ComparisonGraph g =
            protoscribe::document_graph(ctx, entry, ref_a, ref_b, subtype_a, subtype_b);
        protoscribe::write_text_file(out_dir / ("document_" + safe_label(entry.doc_id) + ".svg"),
                                     protoscribe::emit_graph_svg(g));
        jgraphs.push_back(protoscribe::graph_to_json(g));
    }
    ordered_json j;
    j["subtype_a"] = subtype_a;
    j["subtype_b"] = subtype_b;
    j["graphs"] = std::move(jgraphs);
    protoscribe::write_text_file(out_dir / "graphs.json", j.dump(2) + "\n");
    write_run_config(cfg, out_dir, "graph",
                     {{"reference", reference_path.string()},
                      {"ref_a", ref_a_path.string()},
                      {"ref_b", ref_b_path.string()},
                      {"corpus", corpus_path.string()},
                      {"models", models_dir.string()}});
    std::cout << "graph: wrote " << reference.alphabet.size() << " character graphs and "
              << fleet.entries.size() << " document graphs\n";
    return 0;
}

int run_variability(const RunConfig& cfg, const fs::path& out_dir, const fs::path& reference_path,
                    const fs::path& corpus_path, const fs::path& models_dir) {
    protoscribe::ModelState reference = protoscribe::load_model(reference_path);
    protoscribe::LoadedCorpus corpus =
        protoscribe::load_corpus(corpus_path, reference.line_height, cfg.charset_policy());
    Fleet fleet = load_fleet(corpus, models_dir, reference);
    protoscribe::AnalysisContext ctx(reference, cfg.filter, cfg.norm, cfg.use_filtered,
                                     cfg.variability);

    std::map<std::string, std::vector<protoscribe::DocEntry>> by_subtype;
    for (const auto& entry : fleet.entries)
        if (!entry.subtype.empty()) by_subtype[entry.subtype].push_back(entry);

    ordered_json jreports = ordered_json::array();
    for (const auto& [subtype, docs] : by_subtype) {
        if (docs.size() < 2) continue;
        jreports.push_back(
            protoscribe::variability_to_json(protoscribe::variability_report(ctx, subtype, docs)));
    }
    ordered_json j;
    j["variability"] = std::move(jreports);
    protoscribe::write_text_file(out_dir / "variability.json", j.dump(2) + "\n");
    write_run_config(cfg, out_dir, "variability",
                     {{"reference", reference_path.string()},
                      {"corpus", corpus_path.string()},
                      {"models", models_dir.string()}});
    std::cout << "variability: wrote " << (out_dir / "variability.json").string() << "\n";
    return 0;
}

int run_pipeline(const RunConfig& cfg, const fs::path& out_dir, const fs::path& corpus_path) {
    protoscribe::LoadedCorpus corpus =
        protoscribe::load_corpus(corpus_path, cfg.line_height, cfg.charset_policy());
    auto [subtype_a, subtype_b] = subtype_pair(corpus);

    fs::create_directories(out_dir / "models");
    fs::create_directories(out_dir / "sheets");
    fs::create_directories(out_dir / "diffs");
    fs::create_directories(out_dir / "graphs");

    // 1. reference model on the reference members
    std::set<std::string> ref_ids;
    for (const auto& doc : corpus.docs)
        if (doc.reference_member) ref_ids.insert(doc.doc_id);
    if (ref_ids.empty()) throw protoscribe::DataError("pipeline: no reference_member documents");
    protoscribe::TrainLog train_log;
    protoscribe::ModelState reference =
        protoscribe::train_reference(lines_of_docs(corpus, ref_ids), cfg.train_config(false),
                                     &train_log);
    protoscribe::save_model(reference, out_dir / "models" / "reference.psm");

    // 2. subtype models: finetune on each subtype's reference members
    auto finetune_on = [&](const std::set<std::string>& ids) {
        return protoscribe::finetune_prototypes(reference, lines_of_docs(corpus, ids),
                                                cfg.train_config(true));
    };
    std::set<std::string> ids_a, ids_b;
    for (const auto& doc : corpus.docs) {
        if (!doc.reference_member) continue;
        if (doc.subtype == subtype_a) ids_a.insert(doc.doc_id);
        if (doc.subtype == subtype_b) ids_b.insert(doc.doc_id);
    }
    if (ids_a.empty() || ids_b.empty())
        throw protoscribe::DataError("pipeline: each subtype needs at least one reference member");
    protoscribe::ModelState ref_a = finetune_on(ids_a).model;
    protoscribe::ModelState ref_b = finetune_on(ids_b).model;
    protoscribe::save_model(ref_a, out_dir / "models" / ("subtype_" + safe_label(subtype_a) + ".psm"));
    protoscribe::save_model(ref_b, out_dir / "models" / ("subtype_" + safe_label(subtype_b) + ".psm"));

    // 3. per-document models
    Fleet fleet;
    for (const auto& doc : corpus.docs) {
        protoscribe::FinetuneResult result = finetune_on({doc.doc_id});
        protoscribe::save_model(result.model,
                                out_dir / "models" / ("doc_" + safe_label(doc.doc_id) + ".psm"));
        fleet.doc_models[doc.doc_id] = std::move(result.model);
    }
    for (const auto& doc : corpus.docs) {
        protoscribe::DocEntry entry;
        entry.doc_id = doc.doc_id;
        entry.subtype = doc.subtype;
        entry.reference_member = doc.reference_member;
        entry.char_counts = doc.char_counts;
        entry.model = &fleet.doc_models.at(doc.doc_id);
        fleet.entries.push_back(std::move(entry));
    }

    protoscribe::AnalysisContext ctx(reference, cfg.filter, cfg.norm, cfg.use_filtered,
                                     cfg.variability);

    // 4. filter reports + prototype sheet
    ordered_json jfilter = ordered_json::object();
    std::map<std::string, std::map<std::string, protoscribe::FilterFlag>> flags;
    auto collect_reports = [&](const std::string& name, const protoscribe::ModelState& model) {
        ordered_json arr = ordered_json::array();
        for (const auto& label : reference.alphabet) {
            protoscribe::FilterReport report = ctx.report_for(model, label);
            flags[name][label] = report.flag;
            arr.push_back(protoscribe::filter_report_to_json(report));
        }
        jfilter[name] = std::move(arr);
    };
    collect_reports("subtype_" + subtype_a, ref_a);
    collect_reports("subtype_" + subtype_b, ref_b);
    for (const auto& entry : fleet.entries) collect_reports("doc_" + entry.doc_id, *entry.model);

    std::vector<const protoscribe::ModelState*> sheet_models{&reference, &ref_a, &ref_b};
    std::vector<std::string> sheet_names{"reference", "subtype_" + subtype_a,
                                         "subtype_" + subtype_b};
    for (const auto& entry : fleet.entries) {
        sheet_models.push_back(entry.model);
        sheet_names.push_back("doc_" + entry.doc_id);
    }
    protoscribe::write_png(out_dir / "sheets" / "prototypes.png",
                           protoscribe::prototype_sheet(sheet_models, &flags, &sheet_names));

    // 5. difference maps: subtype A vs B, and each document vs its subtype
    for (const auto& label : reference.alphabet) {
        protoscribe::DifferenceMap diff = protoscribe::difference_map(
            ctx.analysis_prototype(ref_a, label), ctx.analysis_prototype(ref_b, label));
        protoscribe::write_png(out_dir / "diffs" /
                                   ("subtypes_" + safe_label(label) + ".png"),
                               diff.render);
    }
    for (const auto& entry : fleet.entries) {
        const protoscribe::ModelState& own = entry.subtype == subtype_a ? ref_a : ref_b;
        for (const auto& label : reference.alphabet) {
            protoscribe::DifferenceMap diff = protoscribe::difference_map(
                ctx.analysis_prototype(*entry.model, label), ctx.analysis_prototype(own, label));
            protoscribe::write_png(out_dir / "diffs" /
                                       ("doc_" + safe_label(entry.doc_id) + "_" +
                                        safe_label(label) + ".png"),
                                   diff.render);
        }
    }

    // 6. graphs
    ordered_json jgraphs = ordered_json::array();
    for (const auto& label : reference.alphabet) {
        protoscribe::ComparisonGraph g = protoscribe::character_graph(
            ctx, label, fleet.entries, ref_a, ref_b, subtype_a, subtype_b);
        protoscribe::write_text_file(out_dir / "graphs" /
                                         ("character_" + safe_label(label) + ".svg"),
                                     protoscribe::emit_graph_svg(g));
        jgraphs.push_back(protoscribe::graph_to_json(g));
    }
    for (const auto& entry : fleet.entries) {
        protoscribe::ComparisonGraph g =
            protoscribe::document_graph(ctx, entry, ref_a, ref_b, subtype_a, subtype_b);
        protoscribe::write_text_file(out_dir / "graphs" /
                                         ("document_" + safe_label(entry.doc_id) + ".svg"),
                                     protoscribe::emit_graph_svg(g));
        jgraphs.push_back(protoscribe::graph_to_json(g));
    }

    // 7. variability per subtype
    std::map<std::string, std::vector<protoscribe::DocEntry>> by_subtype;
    for (const auto& entry : fleet.entries) by_subtype[entry.subtype].push_back(entry);
    ordered_json jvar = ordered_json::array();
    for (const auto& [subtype, docs] : by_subtype) {
        if (docs.size() < 2) continue;
        jvar.push_back(
            protoscribe::variability_to_json(protoscribe::variability_report(ctx, subtype, docs)));
    }

    // 8. single numeric report
    ordered_json report;
    report["corpus_id"] = corpus.corpus_id;
    report["subtype_a"] = subtype_a;
    report["subtype_b"] = subtype_b;
    report["reference_model_id"] = protoscribe::model_id(reference);
    report["train_rounds"] = train_log.rounds;
    report["train_errors"] = train_log.round_errors;
    report["sheet_rows"] = sheet_names;
    report["sheet_columns"] = reference.alphabet;
    report["filter_reports"] = std::move(jfilter);
    report["graphs"] = std::move(jgraphs);
    report["variability"] = std::move(jvar);
    protoscribe::write_text_file(out_dir / "report.json", report.dump(2) + "\n");
    write_run_config(cfg, out_dir, "pipeline", {{"corpus", corpus_path.string()}});
    std::cout << "pipeline: complete, report " << (out_dir / "report.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"protoscribe: aligned character-prototype learning and interpretable "
                 "script comparison"};
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand

    RunConfig cfg;
    if (const char* env = std::getenv("PROTOSCRIBE_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
    if (const char* env = std::getenv("PROTOSCRIBE_THREADS")) cfg.threads = std::atoi(env);
    std::string out_str;
    if (const char* env = std::getenv("PROTOSCRIBE_OUT")) out_str = env;

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; overrides flags")
        ->expected(1);
    auto* seed_opt = app.add_option("--seed", cfg.seed, "random seed");
    auto* threads_opt = app.add_option("--threads", cfg.threads, "worker threads, 0 = all cores");
    auto* height_opt = app.add_option("--line-height", cfg.line_height, "model line height H");
    auto* side_opt = app.add_option("--proto-side", cfg.proto_side,
                                    "prototype side K, 0 = match line height");
    app.add_option("--out", out_str, "output directory")->expected(1);

    std::string corpus_str, reference_str, model_a_str, model_b_str, models_dir_str, doc_id;
    std::string ref_a_str, ref_b_str, subtype_a, subtype_b;
    std::vector<std::string> model_strs;
    bool reference_only = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic two-subtype corpus");

    CLI::App* train = app.add_subcommand("train", "train a reference model from a corpus");
    train->add_option("--corpus", corpus_str, "corpus manifest")->required();
    train->add_flag("--reference-only", reference_only, "use only reference_member documents");

    CLI::App* finetune = app.add_subcommand("finetune", "finetune prototypes on a corpus");
    finetune->add_option("--reference", reference_str, "reference model")->required();
    finetune->add_option("--corpus", corpus_str, "corpus manifest")->required();
    finetune->add_option("--doc", doc_id, "restrict to one document id");

    CLI::App* filter = app.add_subcommand("filter", "masks, filtered prototypes, failure flags");
    filter->add_option("--reference", reference_str, "reference model")->required();
    filter->add_option("--model", model_strs, "finetuned model (repeatable)")->required();

    CLI::App* compare = app.add_subcommand("compare", "signed difference maps of two models");
    compare->add_option("--model-a", model_a_str, "first model")->required();
    compare->add_option("--model-b", model_b_str, "second model")->required();
    compare->add_option("--reference", reference_str, "reference model for masks (optional)");

    CLI::App* graph = app.add_subcommand("graph", "character and document comparison graphs");
    graph->add_option("--reference", reference_str, "common reference model")->required();
    graph->add_option("--ref-a", ref_a_str, "reference model A")->required();
    graph->add_option("--ref-b", ref_b_str, "reference model B")->required();
    graph->add_option("--corpus", corpus_str, "corpus manifest")->required();
    graph->add_option("--models", models_dir_str, "directory of doc_<id>.psm models")->required();
    graph->add_option("--subtype-a", subtype_a, "subtype label for axis A");
    graph->add_option("--subtype-b", subtype_b, "subtype label for axis B");

    CLI::App* variability = app.add_subcommand("variability", "per-subtype variability sigma");
    variability->add_option("--reference", reference_str, "common reference model")->required();
    variability->add_option("--corpus", corpus_str, "corpus manifest")->required();
    variability->add_option("--models", models_dir_str, "directory of doc models")->required();

    CLI::App* pipeline = app.add_subcommand("pipeline", "train, finetune, filter, compare, graph");
    pipeline->add_option("--corpus", corpus_str, "corpus manifest")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        // config file wins over flags, flags over environment, all over defaults
        (void)seed_opt;
        (void)threads_opt;
        (void)height_opt;
        (void)side_opt;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw UsageError("cannot open config file " + config_path);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw UsageError("config file " + config_path + ": " + e.what());
            }
            apply_config_json(cfg, j);
        }
        try {
            cfg.filter.validate();
            cfg.train_config(false).validate();
            cfg.synth.validate();
        } catch (const protoscribe::DataError& e) {
            throw UsageError(e.what());
        }
        if (out_str.empty()) throw UsageError("--out is required (or set PROTOSCRIBE_OUT)");
        fs::path out_dir = out_str;
        fs::create_directories(out_dir);

        if (synth->parsed()) return run_synth(cfg, out_dir);
        if (train->parsed()) return run_train(cfg, out_dir, corpus_str, reference_only);
        if (finetune->parsed())
            return run_finetune(cfg, out_dir, reference_str, corpus_str, doc_id);
        if (filter->parsed()) {
            std::vector<fs::path> paths(model_strs.begin(), model_strs.end());
            return run_filter(cfg, out_dir, reference_str, paths);
        }
        if (compare->parsed())
            return run_compare(cfg, out_dir, model_a_str, model_b_str, reference_str);
        if (graph->parsed())
            return run_graph(cfg, out_dir, reference_str, ref_a_str, ref_b_str, corpus_str,
                             models_dir_str, subtype_a, subtype_b);
        if (variability->parsed())
            return run_variability(cfg, out_dir, reference_str, corpus_str, models_dir_str);
        if (pipeline->parsed()) return run_pipeline(cfg, out_dir, corpus_str);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const protoscribe::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const protoscribe::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
