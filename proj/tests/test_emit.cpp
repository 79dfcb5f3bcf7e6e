#include <filesystem>

#include <catch2/catch_amalgamated.hpp>

#include "protoscribe/emit.hpp"
#include "protoscribe/png_io.hpp"
#include "protoscribe/rng.hpp"
#include "protoscribe/svg.hpp"

using namespace protoscribe;
namespace fs = std::filesystem;

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

ComparisonGraph sample_graph(int n_points) {
    ComparisonGraph g;
    g.kind = GraphKind::Character;
    g.subject = "a";
    g.axis_a_label = "distance to A";
    g.axis_b_label = "distance to B";
    SplitMix64 rng(4);
    for (int i = 0; i < n_points; ++i) {
        GraphPoint p;
        p.label = "D" + std::to_string(i);
        p.d_a = rng.uniform01() * 3;
        p.d_b = rng.uniform01() * 3;
        p.marker = i % 2 ? MarkerKind::ReferenceDot : MarkerKind::HoldoutCross;
        p.side_class = i % 2 ? SideClass::ASide : SideClass::BSide;
        p.frequency = 1 + long(rng.below(100));
        if (i == 3) p.flag = FilterFlag::Warn;
        g.points.push_back(p);
    }
    return g;
}

} // namespace

TEST_CASE("the SVG contains one marker per point and is deterministic") {
    ComparisonGraph g = sample_graph(14);
    std::string svg = emit_graph_svg(g);
    CHECK(count_occurrences(svg, "class=\"pt") == 14);
    CHECK(svg == emit_graph_svg(g));
    CHECK(svg.find("distance to A") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos); // the diagonal
    CHECK(svg.find("#e8a013") != std::string::npos);          // warn outline present
}

TEST_CASE("graph json round-trips numeric values exactly") {
    ComparisonGraph g = sample_graph(5);
    nlohmann::ordered_json j = graph_to_json(g);
    std::string dumped = j.dump();
    nlohmann::json parsed = nlohmann::json::parse(dumped);
    for (std::size_t i = 0; i < g.points.size(); ++i) {
        double d_a = parsed["points"][i]["d_a"].get<double>();
        double d_b = parsed["points"][i]["d_b"].get<double>();
        CHECK(std::abs(d_a - g.points[i].d_a) <= 1e-12);
        CHECK(std::abs(d_b - g.points[i].d_b) <= 1e-12);
    }
}

TEST_CASE("prototype sheets have one row per model and one column per character") {
    ModelState m1, m2;
    m1.alphabet = {"a", "b", "c"};
    m1.proto_side = 10;
    m1.line_height = 10;
    for (const auto& label : m1.alphabet) m1.prototypes.push_back({label, GrayImage(10, 10, 0.8)});
    m2 = m1;

    std::vector<const ModelState*> models{&m1, &m2};
    ColorImage sheet = prototype_sheet(models);
    const int cell = 10 + 2 * 3;
    CHECK(sheet.width() == cell * 3);
    CHECK(sheet.height() == cell * 2);
    // ink renders dark
    CHECK(sheet.at(cell / 2, cell / 2).r == Catch::Approx(0.2).margin(1e-9));

    std::map<std::string, std::map<std::string, FilterFlag>> flags;
    flags["m2"]["a"] = FilterFlag::Fail;
    std::vector<std::string> names{"m1", "m2"};
    ColorImage flagged = prototype_sheet(models, &flags, &names);
    // red outline on the second row, first column
    Rgb border = flagged.at(0, cell);
    CHECK(border.r > 0.8);
    CHECK(border.g < 0.3);
}

TEST_CASE("difference renders write and read back as PNG") {
    fs::path dir = fs::temp_directory_path() / "protoscribe_test_emit";
    fs::create_directories(dir);
    GrayImage a(8, 8, 0.0), b(8, 8, 0.0);
    a.set(2, 2, 1.0);
    b.set(5, 5, 1.0);
    DifferenceMap diff = difference_map(a, b);
    write_png(dir / "diff.png", diff.render);
    ColorImage back = read_png(dir / "diff.png");
    CHECK(back.at(2, 2).b == 1.0); // blue where A has extra ink
    CHECK(back.at(2, 2).r == 0.0);
    CHECK(back.at(5, 5).r == 1.0); // red where B has extra ink
}

TEST_CASE("filter report json carries the flag names") {
    FilterReport r;
    r.char_id = "a";
    r.error = 17.0;
    r.flag = FilterFlag::Warn;
    nlohmann::ordered_json j = filter_report_to_json(r);
    CHECK(j["flag"] == "warn");
    CHECK(j["error"] == 17.0);
}
