#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "protoscribe/errors.hpp"
#include "protoscribe/filter.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/model.hpp"

namespace protoscribe {

enum class DistanceNorm { L2, L1 };
enum class VariabilityAgg { SumPixels, MeanPixels };

/// Signed per-pixel values in [-1,1]; plain grid, not a GrayImage, because
/// images only hold [0,1].
struct SignedMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
};

/// A - B with its white/blue/red rendering: zero is white, positive values
/// shade linearly toward saturated blue, negative toward saturated red.
/// Differences below one 8-bit step (1/255) render exactly white.
struct DifferenceMap {
    SignedMap signed_map;
    ColorImage render;
};

inline DifferenceMap difference_map(const GrayImage& a, const GrayImage& b) {
    if (!a.same_size(b)) throw DataError("difference_map: dimension mismatch");
    DifferenceMap out;
    out.signed_map.width = a.width();
    out.signed_map.height = a.height();
    out.signed_map.values.resize(a.size());
    out.render = ColorImage(a.width(), a.height(), {1, 1, 1});
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            double s = a.at(x, y) - b.at(x, y);
            out.signed_map.values[std::size_t(y) * a.width() + x] = s;
            if (std::abs(s) < 1.0 / 255.0) continue; // stays white
            if (s > 0)
                out.render.set(x, y, {1 - s, 1 - s, 1});
            else
                out.render.set(x, y, {1, 1 + s, 1 + s});
        }
    }
    return out;
}

/// Distance in pixel space between two (filtered) prototypes.
inline double prototype_distance(const GrayImage& a, const GrayImage& b,
                                 DistanceNorm norm = DistanceNorm::L2) {
    if (!a.same_size(b)) throw DataError("prototype_distance: dimension mismatch");
    double acc = 0.0;
    const auto& da = a.data();
    const auto& db = b.data();
    if (norm == DistanceNorm::L2) {
        for (std::size_t i = 0; i < da.size(); ++i) {
            double d = da[i] - db[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(da[i] - db[i]);
    return acc;
}

enum class MarkerKind { ReferenceDot, HoldoutCross };
enum class SideClass { ASide, BSide, Unlabeled };

struct GraphPoint {
    std::string label;  // doc id (character graphs) or char id (document graphs)
    double d_a = 0.0;
    double d_b = 0.0;
    MarkerKind marker = MarkerKind::HoldoutCross;
    SideClass side_class = SideClass::Unlabeled;
    long frequency = 0; // used by document graphs for shading
    FilterFlag flag = FilterFlag::Ok;
};

enum class GraphKind { Character, Document };

struct ComparisonGraph {
    GraphKind kind = GraphKind::Character;
    std::string subject; // the char (character graph) or doc id (document graph)
    std::vector<GraphPoint> points;
    std::string axis_a_label; // vertical axis: distance to reference A
    std::string axis_b_label; // horizontal axis: distance to reference B
    std::vector<std::string> omitted; // sidecar notes for points with no data
};

/// Which side of the diagonal a point falls on: closer to A means d_a < d_b.
inline SideClass diagonal_side(const GraphPoint& p) {
    if (p.d_a < p.d_b) return SideClass::ASide;
    if (p.d_b < p.d_a) return SideClass::BSide;
    return SideClass::Unlabeled;
}

/// Shading weight for document-graph markers: 0 for the most frequent
/// character, approaching 1 for the rarest. Darker marks rarer.
inline double frequency_shade(long count, long max_count) {
    if (max_count < 1 || count < 0) return 0.0;
    double ratio = std::log1p(double(count)) / std::log1p(double(max_count));
    return 1.0 - std::min(1.0, ratio);
}

/// One document of a fleet: its finetuned model plus corpus metadata.
struct DocEntry {
    std::string doc_id;
    std::string subtype;          // declared subtype label, may be empty
    bool reference_member = false;
    std::map<std::string, long> char_counts;
    const ModelState* model = nullptr;
};

/// Shared setup for graph building: the common reference model providing the
/// masks, plus the distance/aggregation options. Quantitative comparisons
/// consume filtered prototypes unless use_filtered is turned off.
class AnalysisContext {
public:
    explicit AnalysisContext(const ModelState& reference, FilterParams params = {},
                             DistanceNorm norm = DistanceNorm::L2, bool use_filtered = true,
                             VariabilityAgg agg = VariabilityAgg::SumPixels)
        : reference_(&reference), params_(params), norm_(norm), use_filtered_(use_filtered),
          agg_(agg) {
        params_.validate();
        for (const auto& proto : reference.prototypes)
            masks_[proto.char_id] = reference_mask(proto, params_);
    }

    const ModelState& reference() const { return *reference_; }
    const FilterParams& params() const { return params_; }
    DistanceNorm norm() const { return norm_; }
    VariabilityAgg aggregation() const { return agg_; }
    bool use_filtered() const { return use_filtered_; }

    const GrayImage& mask_for(const std::string& char_id) const {
        auto it = masks_.find(char_id);
        if (it == masks_.end())
            throw DataError("AnalysisContext: no mask for '" + char_id + "'");
        return it->second;
    }

    /// The prototype a quantitative comparison sees: F = M*P, or raw P.
    GrayImage analysis_prototype(const ModelState& model, const std::string& char_id) const {
        check_comparable(model);
        int i = model.index_of(char_id);
        if (i < 0) throw DataError("AnalysisContext: model lacks prototype '" + char_id + "'");
        const Prototype& p = model.prototypes[std::size_t(i)];
        if (!use_filtered_) return p.image;
        return filter_prototype(mask_for(char_id), p);
    }

    FilterReport report_for(const ModelState& model, const std::string& char_id) const {
        check_comparable(model);
        int i = model.index_of(char_id);
        if (i < 0) throw DataError("AnalysisContext: model lacks prototype '" + char_id + "'");
        int ri = reference_->index_of(char_id);
        if (ri < 0) throw DataError("AnalysisContext: reference lacks prototype '" + char_id + "'");
        return make_filter_report(reference_->prototypes[std::size_t(ri)],
                                  model.prototypes[std::size_t(i)], params_);
    }

    void check_comparable(const ModelState& model) const {
        if (!model.same_geometry(*reference_))
            throw DataError("analysis: geometry mismatch, prototypes not comparable (proto_side " +
                            std::to_string(model.proto_side) + " vs " +
                            std::to_string(reference_->proto_side) + ")");
    }

private:
    const ModelState* reference_;
    FilterParams params_;
    DistanceNorm norm_;
    bool use_filtered_;
    VariabilityAgg agg_;
    std::map<std::string, GrayImage> masks_;
};

/// One character across all documents: each point is a document's finetuned
/// prototype at its pixel-space distances to the two selected references.
/// Dots mark documents used to train the reference, crosses the rest.
inline ComparisonGraph character_graph(const AnalysisContext& ctx, const std::string& char_id,
                                       const std::vector<DocEntry>& fleet, const ModelState& ref_a,
                                       const ModelState& ref_b, const std::string& subtype_a,
                                       const std::string& subtype_b) {
    ctx.check_comparable(ref_a);
    ctx.check_comparable(ref_b);
    GrayImage fa = ctx.analysis_prototype(ref_a, char_id);
    GrayImage fb = ctx.analysis_prototype(ref_b, char_id);

    ComparisonGraph graph;
    graph.kind = GraphKind::Character;
    graph.subject = char_id;
    graph.axis_a_label = "distance to " + subtype_a;
    graph.axis_b_label = "distance to " + subtype_b;

    for (const DocEntry& doc : fleet) {
        if (!doc.model) throw DataError("character_graph: fleet entry without model");
        auto it = doc.char_counts.find(char_id);
        long count = it == doc.char_counts.end() ? 0 : it->second;
        if (count <= 0) {
            graph.omitted.push_back(doc.doc_id + ": no occurrence of '" + char_id + "'");
            continue;
        }
        GrayImage f = ctx.analysis_prototype(*doc.model, char_id);
        GraphPoint p;
        p.label = doc.doc_id;
        p.d_a = prototype_distance(f, fa, ctx.norm());
        p.d_b = prototype_distance(f, fb, ctx.norm());
        p.marker = doc.reference_member ? MarkerKind::ReferenceDot : MarkerKind::HoldoutCross;
        p.side_class = doc.subtype == subtype_a   ? SideClass::ASide
                       : doc.subtype == subtype_b ? SideClass::BSide
                                                  : SideClass::Unlabeled;
        p.frequency = count;
        p.flag = ctx.report_for(*doc.model, char_id).flag;
        graph.points.push_back(std::move(p));
    }
    return graph;
}

/// One document across its characters. Characters the document never wrote
/// are omitted and noted; marker shade comes from log-scaled frequency and
/// warn/fail filter flags carry over to the rendering.
inline ComparisonGraph document_graph(const AnalysisContext& ctx, const DocEntry& doc,
                                      const ModelState& ref_a, const ModelState& ref_b,
                                      const std::string& subtype_a, const std::string& subtype_b) {
    if (!doc.model) throw DataError("document_graph: entry without model");
    ctx.check_comparable(ref_a);
    ctx.check_comparable(ref_b);
    ctx.check_comparable(*doc.model);

    ComparisonGraph graph;
    graph.kind = GraphKind::Document;
    graph.subject = doc.doc_id;
    graph.axis_a_label = "distance to " + subtype_a;
    graph.axis_b_label = "distance to " + subtype_b;

    SideClass doc_side = doc.subtype == subtype_a   ? SideClass::ASide
                         : doc.subtype == subtype_b ? SideClass::BSide
                                                    : SideClass::Unlabeled;
    for (const auto& label : doc.model->alphabet) {
        auto it = doc.char_counts.find(label);
        long count = it == doc.char_counts.end() ? 0 : it->second;
        if (count <= 0) {
            graph.omitted.push_back("'" + label + "': absent from document corpus");
            continue;
        }
        GraphPoint p;
        p.label = label;
        p.d_a = prototype_distance(ctx.analysis_prototype(*doc.model, label),
                                   ctx.analysis_prototype(ref_a, label), ctx.norm());
        p.d_b = prototype_distance(ctx.analysis_prototype(*doc.model, label),
                                   ctx.analysis_prototype(ref_b, label), ctx.norm());
        p.marker = doc.reference_member ? MarkerKind::ReferenceDot : MarkerKind::HoldoutCross;
        p.side_class = doc_side;
        p.frequency = count;
        p.flag = ctx.report_for(*doc.model, label).flag;
        graph.points.push_back(std::move(p));
    }
    return graph;
}

/// Spread of one character's prototypes across the documents of a subtype:
/// the population standard deviation of each pixel across documents, summed
/// over pixels (pixel units) or averaged, per the aggregation choice.
inline double subtype_variability(const std::map<std::string, GrayImage>& prototypes_by_doc,
                                  VariabilityAgg agg = VariabilityAgg::SumPixels) {
    if (prototypes_by_doc.size() < 2)
        throw DataError("subtype_variability: need at least 2 documents");
    const GrayImage& first = prototypes_by_doc.begin()->second;
    for (const auto& [doc, img] : prototypes_by_doc)
        if (!img.same_size(first))
            throw DataError("subtype_variability: prototype dimensions differ (doc " + doc + ")");

    const std::size_t n_docs = prototypes_by_doc.size();
    const std::size_t n_px = first.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n_px; ++i) {
        double mean = 0.0;
        for (const auto& [doc, img] : prototypes_by_doc) mean += img.data()[i];
        mean /= double(n_docs);
        double var = 0.0;
        for (const auto& [doc, img] : prototypes_by_doc) {
            double d = img.data()[i] - mean;
            var += d * d;
        }
        total += std::sqrt(var / double(n_docs));
    }
    if (agg == VariabilityAgg::MeanPixels && n_px > 0) total /= double(n_px);
    return total;
}

struct VariabilityReport {
    std::string subtype_id;
    std::map<std::string, double> sigma_by_char;
    std::vector<std::string> documents;
};

/// Per-character variability over all documents of one subtype. Characters
/// present in fewer than two document corpora are skipped.
inline VariabilityReport variability_report(const AnalysisContext& ctx,
                                            const std::string& subtype_id,
                                            const std::vector<DocEntry>& docs) {
    VariabilityReport report;
    report.subtype_id = subtype_id;
    for (const DocEntry& d : docs) report.documents.push_back(d.doc_id);
    for (const auto& label : ctx.reference().alphabet) {
        std::map<std::string, GrayImage> protos;
        for (const DocEntry& d : docs) {
            auto it = d.char_counts.find(label);
            if (it == d.char_counts.end() || it->second <= 0) continue;
            protos[d.doc_id] = ctx.analysis_prototype(*d.model, label);
        }
        if (protos.size() >= 2)
            report.sigma_by_char[label] = subtype_variability(protos, ctx.aggregation());
    }
    return report;
}

} // namespace protoscribe
