#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoscribe/errors.hpp"
#include "protoscribe/model.hpp"

namespace protoscribe {

// Model container: "PSMD" magic, u32 version, u64 header length, JSON header
// (alphabet, geometry, background, provenance, seed), raw prototype planes as
// K*K little-endian doubles in alphabet order, trailing u64 FNV-1a checksum
// of everything before it. Lossless: load(save(s)) is bit-identical to s.

inline constexpr char kModelMagic[4] = {'P', 'S', 'M', 'D'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

template <typename T>
void append_raw(std::string& out, const T& value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T read_raw(const std::string& bytes, std::size_t& offset) {
    if (offset + sizeof(T) > bytes.size()) throw DataError("model file truncated");
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

} // namespace detail

inline std::string serialize_model(const ModelState& state) {
    nlohmann::ordered_json header;
    header["alphabet"] = state.alphabet;
    header["proto_side"] = state.proto_side;
    header["line_height"] = state.line_height;
    header["bg_color"] = {state.bg_color.r, state.bg_color.g, state.bg_color.b};
    header["provenance"] = {
        {"kind", state.provenance.kind == ProvenanceKind::Reference ? "reference" : "finetuned"},
        {"parent_id", state.provenance.parent_id}};
    header["training_seed"] = state.training_seed;
    std::string header_text = header.dump();

    std::string out;
    out.append(kModelMagic, 4);
    detail::append_raw(out, kModelVersion);
    detail::append_raw(out, std::uint64_t(header_text.size()));
    out += header_text;
    for (const auto& proto : state.prototypes)
        for (double v : proto.image.data()) detail::append_raw(out, v);
    detail::append_raw(out, fnv1a64(out.data(), out.size()));
    return out;
}

inline ModelState deserialize_model(const std::string& bytes,
                                    std::vector<std::string>* warnings = nullptr) {
    if (bytes.size() < 4 + sizeof(std::uint32_t) + 2 * sizeof(std::uint64_t))
        throw DataError("model file truncated");
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - sizeof(std::uint64_t), sizeof(stored));
    if (fnv1a64(bytes.data(), bytes.size() - sizeof(std::uint64_t)) != stored)
        throw DataError("model file checksum failure");

    std::size_t offset = 0;
    if (std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw DataError("not a model file (bad magic)");
    offset += 4;
    std::uint32_t version = detail::read_raw<std::uint32_t>(bytes, offset);
    if (version != kModelVersion)
        throw DataError("model file version mismatch: " + std::to_string(version));
    std::uint64_t header_len = detail::read_raw<std::uint64_t>(bytes, offset);
    if (offset + header_len > bytes.size()) throw DataError("model file truncated");
    nlohmann::json header = nlohmann::json::parse(bytes.substr(offset, header_len));
    offset += header_len;

    ModelState state;
    state.alphabet = header.at("alphabet").get<std::vector<std::string>>();
    state.proto_side = header.at("proto_side").get<int>();
    state.line_height = header.at("line_height").get<int>();
    auto bg = header.at("bg_color");
    state.bg_color = {bg.at(0).get<double>(), bg.at(1).get<double>(), bg.at(2).get<double>()};
    std::string kind = header.at("provenance").at("kind").get<std::string>();
    state.provenance.kind =
        kind == "finetuned" ? ProvenanceKind::Finetuned : ProvenanceKind::Reference;
    state.provenance.parent_id = header.at("provenance").at("parent_id").get<std::string>();
    state.training_seed = header.at("training_seed").get<std::uint64_t>();

    const std::size_t n_px = std::size_t(state.proto_side) * state.proto_side;
    const std::size_t plane_bytes = state.alphabet.size() * n_px * sizeof(double);
    if (offset + plane_bytes + sizeof(std::uint64_t) != bytes.size())
        throw DataError("model file plane section has unexpected length");
    for (const auto& label : state.alphabet) {
        std::vector<double> plane(n_px);
        for (double& v : plane) v = detail::read_raw<double>(bytes, offset);
        state.prototypes.push_back(
            {label, GrayImage::from_data(state.proto_side, state.proto_side, std::move(plane))});
    }

    if (warnings && state.provenance.kind == ProvenanceKind::Finetuned &&
        state.provenance.parent_id.empty())
        warnings->push_back("finetuned model has no parent id (dangling parent)");
    return state;
}

/// Content hash used as identity and provenance link.
inline std::string model_id_from_bytes(const std::string& bytes) {
    std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline std::string model_id(const ModelState& state) {
    return model_id_from_bytes(serialize_model(state));
}

inline void save_model(const ModelState& state, const std::filesystem::path& path) {
    std::string bytes = serialize_model(state);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_model: cannot open " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw DataError("save_model: write failed for " + path.string());
}

inline ModelState load_model(const std::filesystem::path& path,
                             std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_model: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes, warnings);
}

} // namespace protoscribe
