#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoscribe/analysis.hpp"
#include "protoscribe/errors.hpp"
#include "protoscribe/filter.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/model.hpp"

namespace protoscribe {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_text_file: cannot open " + path.string());
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) throw DataError("write_text_file: write failed for " + path.string());
}

/// One row per model, one column per character; prototypes drawn ink-dark on
/// white. Cells whose filter report is warn/fail get an orange/red outline.
inline ColorImage prototype_sheet(
    const std::vector<const ModelState*>& models,
    const std::map<std::string, std::map<std::string, FilterFlag>>* flags_by_model = nullptr,
    const std::vector<std::string>* model_names = nullptr) {
    if (models.empty()) throw DataError("prototype_sheet: no models");
    const ModelState& first = *models.front();
    for (const ModelState* m : models) {
        if (!m) throw DataError("prototype_sheet: null model");
        if (m->alphabet != first.alphabet || !m->same_geometry(first))
            throw DataError("prototype_sheet: models differ in alphabet or geometry");
    }
    const int side = first.proto_side;
    const int pad = 3;
    const int cell = side + 2 * pad;
    ColorImage sheet(cell * int(first.alphabet.size()), cell * int(models.size()), {1, 1, 1});

    for (std::size_t row = 0; row < models.size(); ++row) {
        const ModelState& m = *models[row];
        for (std::size_t col = 0; col < m.alphabet.size(); ++col) {
            const GrayImage& proto = m.prototypes[col].image;
            int ox = int(col) * cell + pad;
            int oy = int(row) * cell + pad;
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x) {
                    double v = 1.0 - proto.at(x, y);
                    sheet.set(ox + x, oy + y, {v, v, v});
                }
            FilterFlag flag = FilterFlag::Ok;
            if (flags_by_model && model_names && row < model_names->size()) {
                auto mit = flags_by_model->find((*model_names)[row]);
                if (mit != flags_by_model->end()) {
                    auto fit = mit->second.find(m.alphabet[col]);
                    if (fit != mit->second.end()) flag = fit->second;
                }
            }
            if (flag != FilterFlag::Ok) {
                Rgb c = flag == FilterFlag::Fail ? Rgb{0.85, 0.15, 0.15} : Rgb{0.95, 0.63, 0.1};
                int x0 = int(col) * cell, y0 = int(row) * cell;
                for (int t = 0; t < 2; ++t) {
                    for (int x = x0; x < x0 + cell; ++x) {
                        sheet.set(x, y0 + t, c);
                        sheet.set(x, y0 + cell - 1 - t, c);
                    }
                    for (int y = y0; y < y0 + cell; ++y) {
                        sheet.set(x0 + t, y, c);
                        sheet.set(x0 + cell - 1 - t, y, c);
                    }
                }
            }
        }
    }
    return sheet;
}

inline nlohmann::ordered_json filter_report_to_json(const FilterReport& r) {
    return {{"char", r.char_id}, {"error", r.error}, {"flag", to_string(r.flag)}};
}

inline nlohmann::ordered_json graph_to_json(const ComparisonGraph& g) {
    nlohmann::ordered_json j;
    j["kind"] = g.kind == GraphKind::Character ? "character" : "document";
    j["subject"] = g.subject;
    j["axis_a"] = g.axis_a_label;
    j["axis_b"] = g.axis_b_label;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : g.points) {
        j["points"].push_back(
            {{"label", p.label},
             {"d_a", p.d_a},
             {"d_b", p.d_b},
             {"marker", p.marker == MarkerKind::ReferenceDot ? "reference-dot" : "holdout-cross"},
             {"class", p.side_class == SideClass::ASide   ? "A-side"
                       : p.side_class == SideClass::BSide ? "B-side"
                                                          : "unlabeled"},
             {"closer_to", diagonal_side(p) == SideClass::ASide   ? "A"
                           : diagonal_side(p) == SideClass::BSide ? "B"
                                                                  : "tie"},
             {"frequency", p.frequency},
             {"flag", to_string(p.flag)}});
    }
    j["omitted"] = g.omitted;
    return j;
}

inline nlohmann::ordered_json variability_to_json(const VariabilityReport& r) {
    nlohmann::ordered_json j;
    j["subtype"] = r.subtype_id;
    j["documents"] = r.documents;
    j["sigma_by_char"] = nlohmann::ordered_json::object();
    for (const auto& [label, sigma] : r.sigma_by_char) j["sigma_by_char"][label] = sigma;
    return j;
}

} // namespace protoscribe
