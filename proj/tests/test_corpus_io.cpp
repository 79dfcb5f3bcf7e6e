#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "protoscribe/corpus.hpp"
#include "protoscribe/model_io.hpp"
#include "protoscribe/png_io.hpp"
#include "protoscribe/rng.hpp"
#include "protoscribe/synth.hpp"

using namespace protoscribe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("protoscribe_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("normalize_transcription splits plain text into labels") {
    CHECK(normalize_transcription("domine") ==
          std::vector<std::string>{"d", "o", "m", "i", "n", "e"});
}

TEST_CASE("normalize_transcription drops excluded characters") {
    CharsetPolicy policy;
    policy.mode = CharsetMode::Drop;
    policy.exclude = {"j", "k", "v", "x", "y", "z"};
    CHECK(normalize_transcription("karta", policy) == std::vector<std::string>{"a", "r", "t", "a"});
}

TEST_CASE("normalize_transcription composes decomposed accents") {
    // 'e' + U+0301 combining acute -> precomposed U+00E9
    std::string decomposed = "d\x65\xcc\x81";
    std::vector<std::string> labels = normalize_transcription(decomposed);
    REQUIRE(labels.size() == 2);
    CHECK(labels[1] == "\xc3\xa9");
}

TEST_CASE("normalize_transcription error policy names the code point") {
    CharsetPolicy policy;
    policy.mode = CharsetMode::Error;
    policy.allow = {"a", "b"};
    try {
        normalize_transcription("abq", policy);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("U+0071") != std::string::npos);
    }
}

TEST_CASE("normalize_transcription passthrough keeps unknown labels and drops whitespace") {
    CharsetPolicy policy;
    policy.mode = CharsetMode::Passthrough;
    policy.allow = {"a"};
    CHECK(normalize_transcription("a b\tq\n", policy) == std::vector<std::string>{"a", "b", "q"});
}

TEST_CASE("lowercase_alpha builds the paper-style charset") {
    CharsetPolicy policy = CharsetPolicy::lowercase_alpha({"j", "k", "v", "x", "y", "z"});
    CHECK(normalize_transcription("Jovix dak", policy) ==
          std::vector<std::string>{"o", "i", "d", "a"});
}

TEST_CASE("model persistence round-trips bit-identically") {
    SplitMix64 rng(3);
    ModelState state;
    state.alphabet = {"a", "b"};
    for (const auto& label : state.alphabet) {
        GrayImage img(12, 12);
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) img.set(x, y, rng.uniform01());
        state.prototypes.push_back({label, img});
    }
    state.proto_side = 12;
    state.line_height = 12;
    state.bg_color = {0.93, 0.91, 0.88};
    state.provenance = {ProvenanceKind::Finetuned, "deadbeef00000000"};
    state.training_seed = 123456789;

    fs::path dir = temp_dir("model_io");
    save_model(state, dir / "m.psm");
    ModelState loaded = load_model(dir / "m.psm");
    CHECK(serialize_model(loaded) == serialize_model(state));
    CHECK(model_id(loaded) == model_id(state));
}

TEST_CASE("truncated model files fail the checksum") {
    ModelState state;
    state.alphabet = {"a"};
    state.prototypes.push_back({"a", GrayImage(8, 8, 0.5)});
    state.proto_side = 8;
    state.line_height = 8;
    fs::path dir = temp_dir("model_trunc");
    save_model(state, dir / "m.psm");

    std::ifstream in(dir / "m.psm", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(dir / "t.psm", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() - 17));
    out.close();
    CHECK_THROWS_AS(load_model(dir / "t.psm"), DataError);
}

TEST_CASE("loading a finetuned model without parent id warns") {
    ModelState state;
    state.alphabet = {"a"};
    state.prototypes.push_back({"a", GrayImage(8, 8, 0.5)});
    state.proto_side = 8;
    state.line_height = 8;
    state.provenance = {ProvenanceKind::Finetuned, ""};
    fs::path dir = temp_dir("model_dangling");
    save_model(state, dir / "m.psm");
    std::vector<std::string> warnings;
    load_model(dir / "m.psm", &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("dangling") != std::string::npos);
}

TEST_CASE("png round trip preserves 8-bit quantized values") {
    SplitMix64 rng(9);
    ColorImage img(17, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 17; ++x)
            img.set(x, y, {rng.uniform01(), rng.uniform01(), rng.uniform01()});
    fs::path dir = temp_dir("png");
    write_png(dir / "t.png", img);
    ColorImage back = read_png(dir / "t.png");
    REQUIRE(back.width() == img.width());
    REQUIRE(back.height() == img.height());
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 17; ++x) {
            CHECK(std::abs(back.at(x, y).r - img.at(x, y).r) <= 0.5 / 255.0 + 1e-12);
            CHECK(std::abs(back.at(x, y).g - img.at(x, y).g) <= 0.5 / 255.0 + 1e-12);
        }
}

TEST_CASE("a written synthetic corpus loads back in manifest order") {
    SynthSpec spec;
    spec.proto_side = 16;
    spec.line_height = 16;
    spec.lines_per_doc = 3;
    spec.docs_per_subtype = 1;
    spec.glyphs_per_line = 4;
    spec.reference_docs_per_subtype = 1;
    spec.alphabet = {"a", "b", "c"};
    spec.subtype_b_deltas = {{"a", GlyphDelta::OpenBow}};
    SynthResult r = generate_corpus(spec);
    fs::path dir = temp_dir("corpus_roundtrip");
    write_synth_corpus(r, dir);

    LoadedCorpus corpus = load_corpus(dir / "manifest.json", 16);
    CHECK(corpus.lines.size() == r.lines.size()); // 2 docs x 3 lines
    REQUIRE(corpus.docs.size() == 2);
    CHECK(corpus.docs[0].doc_id == "A1");
    CHECK(corpus.docs[1].doc_id == "B1");
    CHECK(corpus.docs[0].reference_member);
    for (std::size_t i = 0; i < corpus.lines.size(); ++i)
        CHECK(corpus.lines[i].transcription == r.lines[i].transcription);
}

TEST_CASE("load_corpus reports missing image files by path") {
    SynthSpec spec;
    spec.proto_side = 16;
    spec.line_height = 16;
    spec.lines_per_doc = 2;
    spec.docs_per_subtype = 1;
    spec.glyphs_per_line = 3;
    spec.alphabet = {"a", "b", "c"};
    spec.subtype_b_deltas = {{"a", GlyphDelta::OpenBow}};
    SynthResult r = generate_corpus(spec);
    fs::path dir = temp_dir("corpus_missing");
    write_synth_corpus(r, dir);
    fs::remove(dir / "images" / "B1_0.png");
    try {
        load_corpus(dir / "manifest.json", 16);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("B1_0.png") != std::string::npos);
    }
}

TEST_CASE("manifests with duplicate doc ids are rejected") {
    nlohmann::json j = {{"corpus_id", "x"},
                        {"documents",
                         {{{"doc_id", "d"}, {"lines", nlohmann::json::array()}},
                          {{"doc_id", "d"}, {"lines", nlohmann::json::array()}}}}};
    CHECK_THROWS_AS(manifest_from_json(j), DataError);
}

TEST_CASE("empty transcriptions are reported with coordinates") {
    fs::path dir = temp_dir("corpus_empty_tx");
    fs::create_directories(dir / "images");
    write_png(dir / "images" / "l0.png", ColorImage(20, 16, {1, 1, 1}));
    CorpusManifest m;
    m.corpus_id = "t";
    ManifestDoc doc;
    doc.doc_id = "d0";
    doc.lines.push_back({"images/l0.png", "   "});
    m.documents.push_back(doc);
    save_manifest(m, dir / "manifest.json");
    try {
        load_corpus(dir / "manifest.json", 16);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("d0") != std::string::npos);
        CHECK(msg.find("line 0") != std::string::npos);
    }
}
