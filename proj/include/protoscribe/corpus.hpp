#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoscribe/errors.hpp"
#include "protoscribe/image.hpp"
#include "protoscribe/model.hpp"
#include "protoscribe/png_io.hpp"

namespace protoscribe {

// ---------------------------------------------------------------------------
// Transcription normalization
// ---------------------------------------------------------------------------

enum class CharsetMode { Drop, Error, Passthrough };

/// What to do with labels outside the configured charset. A label is outside
/// when an allow-list exists and does not contain it, or when it appears in
/// the exclude set. Whitespace never produces a label.
struct CharsetPolicy {
    CharsetMode mode = CharsetMode::Passthrough;
    std::set<std::string> allow;
    std::set<std::string> exclude;

    /// Lowercase alphabetic filter: allow a-z minus the given exclusions.
    static CharsetPolicy lowercase_alpha(std::set<std::string> excluded = {},
                                         CharsetMode mode = CharsetMode::Drop) {
        CharsetPolicy p;
        p.mode = mode;
        for (char c = 'a'; c <= 'z'; ++c) {
            std::string s(1, c);
            if (!excluded.count(s)) p.allow.insert(s);
        }
        return p;
    }
};

namespace detail {

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += char(cp);
    } else if (cp < 0x800) {
        out += char(0xC0 | (cp >> 6));
        out += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += char(0xE0 | (cp >> 12));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    } else {
        out += char(0xF0 | (cp >> 18));
        out += char(0x80 | ((cp >> 12) & 0x3F));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    }
}

inline std::vector<char32_t> decode_utf8(const std::string& text) {
    std::vector<char32_t> cps;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = (unsigned char)text[i];
        char32_t cp = 0;
        int extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            extra = 1;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            extra = 2;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07;
            extra = 3;
        } else {
            throw DataError("invalid UTF-8 byte in transcription");
        }
        if (extra > 0 && i + std::size_t(extra) >= text.size())
            throw DataError("truncated UTF-8 sequence in transcription");
        for (int k = 1; k <= extra; ++k) {
            unsigned char cc = (unsigned char)text[i + std::size_t(k)];
            if ((cc & 0xC0) != 0x80) throw DataError("malformed UTF-8 continuation byte");
            cp = (cp << 6) | (cc & 0x3F);
        }
        i += std::size_t(extra) + 1;
        cps.push_back(cp);
    }
    return cps;
}

struct Composition {
    char32_t base;
    char32_t mark;
    char32_t composed;
};

/// Canonical compositions for the Latin letters this toolkit meets in
/// practice. Pairs not listed stay together as one multi-codepoint label.
inline const Composition* composition_table(std::size_t& count) {
    static const Composition table[] = {
        {U'a', 0x0300, 0x00E0}, {U'a', 0x0301, 0x00E1}, {U'a', 0x0302, 0x00E2},
        {U'a', 0x0303, 0x00E3}, {U'a', 0x0308, 0x00E4}, {U'a', 0x030A, 0x00E5},
        {U'e', 0x0300, 0x00E8}, {U'e', 0x0301, 0x00E9}, {U'e', 0x0302, 0x00EA},
        {U'e', 0x0308, 0x00EB}, {U'i', 0x0300, 0x00EC}, {U'i', 0x0301, 0x00ED},
        {U'i', 0x0302, 0x00EE}, {U'i', 0x0308, 0x00EF}, {U'o', 0x0300, 0x00F2},
        {U'o', 0x0301, 0x00F3}, {U'o', 0x0302, 0x00F4}, {U'o', 0x0303, 0x00F5},
        {U'o', 0x0308, 0x00F6}, {U'u', 0x0300, 0x00F9}, {U'u', 0x0301, 0x00FA},
        {U'u', 0x0302, 0x00FB}, {U'u', 0x0308, 0x00FC}, {U'y', 0x0301, 0x00FD},
        {U'y', 0x0308, 0x00FF}, {U'n', 0x0303, 0x00F1}, {U'c', 0x0327, 0x00E7},
        {U'A', 0x0300, 0x00C0}, {U'A', 0x0301, 0x00C1}, {U'A', 0x0302, 0x00C2},
        {U'A', 0x0303, 0x00C3}, {U'A', 0x0308, 0x00C4}, {U'A', 0x030A, 0x00C5},
        {U'E', 0x0300, 0x00C8}, {U'E', 0x0301, 0x00C9}, {U'E', 0x0302, 0x00CA},
        {U'E', 0x0308, 0x00CB}, {U'I', 0x0300, 0x00CC}, {U'I', 0x0301, 0x00CD},
        {U'I', 0x0302, 0x00CE}, {U'I', 0x0308, 0x00CF}, {U'O', 0x0300, 0x00D2},
        {U'O', 0x0301, 0x00D3}, {U'O', 0x0302, 0x00D4}, {U'O', 0x0303, 0x00D5},
        {U'O', 0x0308, 0x00D6}, {U'U', 0x0300, 0x00D9}, {U'U', 0x0301, 0x00DA},
        {U'U', 0x0302, 0x00DB}, {U'U', 0x0308, 0x00DC}, {U'Y', 0x0301, 0x00DD},
        {U'N', 0x0303, 0x00D1}, {U'C', 0x0327, 0x00C7}, {U's', 0x030C, 0x0161},
        {U'S', 0x030C, 0x0160}, {U'z', 0x030C, 0x017E}, {U'Z', 0x030C, 0x017D},
        {U'c', 0x030C, 0x010D}, {U'C', 0x030C, 0x010C},
    };
    count = sizeof(table) / sizeof(table[0]);
    return table;
}

inline bool is_combining_mark(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

inline bool is_whitespace(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x00A0;
}

} // namespace detail

/// Splits a transcription into character labels: canonical composition of
/// base + combining mark where a precomposed form exists (unknown marks stay
/// clustered with their base), whitespace dropped, then the charset policy
/// applied to each label.
inline std::vector<std::string> normalize_transcription(const std::string& text,
                                                        const CharsetPolicy& policy = {}) {
    std::vector<char32_t> cps = detail::decode_utf8(text);
    std::vector<std::vector<char32_t>> clusters;
    for (char32_t cp : cps) {
        if (detail::is_whitespace(cp)) continue;
        if (detail::is_combining_mark(cp) && !clusters.empty()) {
            auto& prev = clusters.back();
            if (prev.size() == 1) {
                std::size_t n = 0;
                const detail::Composition* table = detail::composition_table(n);
                bool composed = false;
                for (std::size_t i = 0; i < n; ++i) {
                    if (table[i].base == prev[0] && table[i].mark == cp) {
                        prev[0] = table[i].composed;
                        composed = true;
                        break;
                    }
                }
                if (composed) continue;
            }
            prev.push_back(cp); // keep the cluster together
            continue;
        }
        clusters.push_back({cp});
    }

    std::vector<std::string> labels;
    for (const auto& cluster : clusters) {
        std::string label;
        for (char32_t cp : cluster) detail::append_utf8(label, cp);
        bool outside = (!policy.allow.empty() && !policy.allow.count(label)) ||
                       policy.exclude.count(label) > 0;
        if (!outside) {
            labels.push_back(label);
            continue;
        }
        switch (policy.mode) {
            case CharsetMode::Drop: break;
            case CharsetMode::Passthrough: labels.push_back(label); break;
            case CharsetMode::Error: {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "U+%04X", unsigned(cluster[0]));
                throw DataError(std::string("normalize_transcription: character outside charset: ") +
                                buf);
            }
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Corpus manifest
// ---------------------------------------------------------------------------

struct ManifestLine {
    std::string image; // path relative to the manifest file
    std::string transcription;
};

struct ManifestDoc {
    std::string doc_id;
    std::string subtype; // optional subtype label, empty if undeclared
    bool reference_member = false;
    std::vector<ManifestLine> lines;
};

struct CorpusManifest {
    std::string corpus_id;
    std::vector<ManifestDoc> documents;
};

inline nlohmann::ordered_json manifest_to_json(const CorpusManifest& m) {
    nlohmann::ordered_json j;
    j["corpus_id"] = m.corpus_id;
    j["documents"] = nlohmann::ordered_json::array();
    for (const auto& doc : m.documents) {
        nlohmann::ordered_json jd;
        jd["doc_id"] = doc.doc_id;
        jd["subtype"] = doc.subtype;
        jd["reference_member"] = doc.reference_member;
        jd["lines"] = nlohmann::ordered_json::array();
        for (const auto& line : doc.lines)
            jd["lines"].push_back({{"image", line.image}, {"transcription", line.transcription}});
        j["documents"].push_back(std::move(jd));
    }
    return j;
}

inline CorpusManifest manifest_from_json(const nlohmann::json& j) {
    CorpusManifest m;
    m.corpus_id = j.value("corpus_id", std::string("corpus"));
    std::set<std::string> seen;
    for (const auto& jd : j.at("documents")) {
        ManifestDoc doc;
        doc.doc_id = jd.at("doc_id").get<std::string>();
        doc.subtype = jd.value("subtype", std::string());
        doc.reference_member = jd.value("reference_member", false);
        if (!seen.insert(doc.doc_id).second)
            throw DataError("manifest: duplicate doc_id '" + doc.doc_id + "'");
        for (const auto& jl : jd.at("lines"))
            doc.lines.push_back(
                {jl.at("image").get<std::string>(), jl.at("transcription").get<std::string>()});
        m.documents.push_back(std::move(doc));
    }
    return m;
}

inline void save_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_manifest: cannot open " + path.string());
    out << manifest_to_json(m).dump(2) << "\n";
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_manifest: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("load_manifest: " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

/// Per-document metadata gathered while loading a corpus.
struct DocumentMeta {
    std::string doc_id;
    std::string subtype;
    bool reference_member = false;
    std::map<std::string, long> char_counts;
    std::vector<std::size_t> line_indices; // into LoadedCorpus::lines
};

struct LoadedCorpus {
    std::string corpus_id;
    std::vector<LineSample> lines; // manifest order
    std::vector<DocumentMeta> docs;
};

/// Loads every line of a corpus: images decoded and normalized to
/// line_height, transcriptions normalized under the charset policy.
/// Ordering is the manifest order, so loading is deterministic.
inline LoadedCorpus load_corpus(const std::filesystem::path& manifest_path, int line_height,
                                const CharsetPolicy& policy = {}) {
    CorpusManifest manifest = load_manifest(manifest_path);
    std::filesystem::path base = manifest_path.parent_path();

    LoadedCorpus corpus;
    corpus.corpus_id = manifest.corpus_id;
    for (const auto& doc : manifest.documents) {
        DocumentMeta meta;
        meta.doc_id = doc.doc_id;
        meta.subtype = doc.subtype;
        meta.reference_member = doc.reference_member;
        for (std::size_t li = 0; li < doc.lines.size(); ++li) {
            const auto& line = doc.lines[li];
            std::filesystem::path img_path = base / line.image;
            if (!std::filesystem::exists(img_path))
                throw DataError("load_corpus: missing image file " + img_path.string() + " (doc " +
                                doc.doc_id + ", line " + std::to_string(li) + ")");
            LineSample sample;
            sample.image = normalize_line(read_png(img_path), line_height);
            sample.transcription = normalize_transcription(line.transcription, policy);
            sample.doc_id = doc.doc_id;
            if (sample.transcription.empty())
                throw DataError("load_corpus: empty transcription (doc " + doc.doc_id + ", line " +
                                std::to_string(li) + ")");
            for (const auto& label : sample.transcription) meta.char_counts[label] += 1;
            meta.line_indices.push_back(corpus.lines.size());
            corpus.lines.push_back(std::move(sample));
        }
        corpus.docs.push_back(std::move(meta));
    }
    return corpus;
}

} // namespace protoscribe
