#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "protoscribe/corpus.hpp"
#include "protoscribe/model_io.hpp"

using namespace protoscribe;
namespace fs = std::filesystem;

namespace {

const char* kCli = PROTOSCRIBE_CLI_PATH;

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("protoscribe_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

/// Small synthetic setup so CLI tests stay fast.
void write_config(const fs::path& path, int line_height = 32) {
    nlohmann::json j;
    j["line_height"] = line_height;
    j["train"] = {{"max_rounds", 6}};
    j["synth"] = {{"alphabet", {"a", "b", "c", "d", "e", "f"}},
                  {"subtype_b_deltas", {{"a", "open-bow"}, {"c", "squarify"}, {"e", "tilt-bar"}}},
                  {"lines_per_doc", 4},
                  {"docs_per_subtype", 2},
                  {"glyphs_per_line", 6},
                  {"reference_docs_per_subtype", 1}};
    std::ofstream out(path);
    out << j.dump(2);
}

} // namespace

TEST_CASE("cli synth then pipeline succeeds and leaves the expected artifacts") {
    fs::path dir = temp_dir("pipeline");
    write_config(dir / "config.json");
    REQUIRE(run("synth --config " + (dir / "config.json").string() + " --seed 5 --out " +
                (dir / "corpus").string()) == 0);
    CHECK(fs::exists(dir / "corpus" / "manifest.json"));
    CHECK(fs::exists(dir / "corpus" / "images" / "A1_0.png"));
    CHECK(fs::exists(dir / "corpus" / "truth" / "subtype_A.psm"));
    CHECK(fs::exists(dir / "corpus" / "run_config.json"));

    REQUIRE(run("pipeline --config " + (dir / "config.json").string() + " --seed 5 --corpus " +
                (dir / "corpus" / "manifest.json").string() + " --out " +
                (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "models" / "reference.psm"));
    CHECK(fs::exists(dir / "out" / "models" / "subtype_A.psm"));
    CHECK(fs::exists(dir / "out" / "models" / "doc_A1.psm"));
    CHECK(fs::exists(dir / "out" / "sheets" / "prototypes.png"));
    CHECK(fs::exists(dir / "out" / "graphs" / "character_a.svg"));
    CHECK(fs::exists(dir / "out" / "graphs" / "document_B2.svg"));
    CHECK(fs::exists(dir / "out" / "diffs" / "subtypes_a.png"));
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "run_config.json"));

    // report must parse and carry the variability section
    std::ifstream in(dir / "out" / "report.json");
    nlohmann::json report;
    in >> report;
    CHECK(report.contains("variability"));
    CHECK(report["filter_reports"].size() >= 4);
}

TEST_CASE("cli finetune fails with exit 2 on labels unknown to the reference") {
    fs::path dir = temp_dir("unknown_labels");
    write_config(dir / "config.json");
    REQUIRE(run("synth --config " + (dir / "config.json").string() + " --out " +
                (dir / "corpus").string()) == 0);
    REQUIRE(run("train --config " + (dir / "config.json").string() + " --corpus " +
                (dir / "corpus" / "manifest.json").string() + " --out " +
                (dir / "model").string()) == 0);

    // a corpus with one extra label 'g'
    nlohmann::json j;
    j["line_height"] = 32;
    j["synth"] = {{"alphabet", {"a", "b", "c", "d", "e", "f", "g"}},
                  {"subtype_b_deltas", {{"a", "open-bow"}}},
                  {"lines_per_doc", 3},
                  {"docs_per_subtype", 1},
                  {"glyphs_per_line", 7},
                  {"reference_docs_per_subtype", 1}};
    std::ofstream(dir / "config7.json") << j.dump(2);
    REQUIRE(run("synth --config " + (dir / "config7.json").string() + " --out " +
                (dir / "corpus7").string()) == 0);

    CHECK(run("finetune --reference " + (dir / "model" / "reference.psm").string() + " --corpus " +
              (dir / "corpus7" / "manifest.json").string() + " --out " +
              (dir / "ft").string()) == 2);
}

TEST_CASE("cli graph fails with exit 2 on geometry mismatch") {
    fs::path dir = temp_dir("geometry");
    write_config(dir / "config.json");
    REQUIRE(run("synth --config " + (dir / "config.json").string() + " --out " +
                (dir / "corpus").string()) == 0);
    REQUIRE(run("train --config " + (dir / "config.json").string() + " --corpus " +
                (dir / "corpus" / "manifest.json").string() + " --out " +
                (dir / "model").string()) == 0);

    // doctored doc models with a different prototype side
    ModelState reference = load_model(dir / "model" / "reference.psm");
    ModelState wrong;
    wrong.alphabet = reference.alphabet;
    wrong.proto_side = reference.proto_side / 2;
    wrong.line_height = reference.line_height;
    for (const auto& label : wrong.alphabet)
        wrong.prototypes.push_back({label, GrayImage(wrong.proto_side, wrong.proto_side, 0.5)});
    fs::create_directories(dir / "docs");
    LoadedCorpus corpus = load_corpus(dir / "corpus" / "manifest.json", 32);
    for (const auto& doc : corpus.docs) save_model(wrong, dir / "docs" / ("doc_" + doc.doc_id + ".psm"));

    CHECK(run("graph --reference " + (dir / "model" / "reference.psm").string() + " --ref-a " +
              (dir / "model" / "reference.psm").string() + " --ref-b " +
              (dir / "model" / "reference.psm").string() + " --corpus " +
              (dir / "corpus" / "manifest.json").string() + " --models " + (dir / "docs").string() +
              " --out " + (dir / "g").string()) == 2);
}

TEST_CASE("cli rejects missing subcommand and missing required options") {
    CHECK(run("") == 1);
    CHECK(run("train") == 1); // --corpus required
    CHECK(run("synth") == 1); // --out required
}
