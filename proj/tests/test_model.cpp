#include <catch2/catch_amalgamated.hpp>

#include "protoscribe/model.hpp"

using namespace protoscribe;

namespace {

ModelState small_state() {
    ModelState s;
    s.alphabet = {"a", "q"};
    s.proto_side = 8;
    s.line_height = 8;
    for (const auto& label : s.alphabet) s.prototypes.push_back({label, GrayImage(8, 8, 0.5)});
    return s;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
    for (const auto& viol : v)
        if (viol.rule.find(rule) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("validate_model accepts a well-formed state") {
    CHECK(validate_model(small_state()).empty());
}

TEST_CASE("validate_model reports a missing prototype by label") {
    ModelState s = small_state();
    s.prototypes.pop_back(); // drop "q"
    auto v = validate_model(s);
    REQUIRE_FALSE(v.empty());
    CHECK(has_rule(v, "missing-prototype(q)"));
}

TEST_CASE("validate_model reports geometry mismatch against the parent") {
    ModelState parent = small_state();
    ModelState child = small_state();
    child.provenance = {ProvenanceKind::Finetuned, "abc"};
    child.proto_side = 16;
    child.prototypes.clear();
    for (const auto& label : child.alphabet)
        child.prototypes.push_back({label, GrayImage(16, 16, 0.5)});
    auto v = validate_model(child, parent);
    CHECK(has_rule(v, "geometry-mismatch"));
}

TEST_CASE("validate_model reports alphabet disagreement with the parent") {
    ModelState parent = small_state();
    ModelState child = small_state();
    child.alphabet = {"a", "z"};
    child.prototypes[1].char_id = "z";
    auto v = validate_model(child, parent);
    CHECK(has_rule(v, "alphabet-mismatch"));
}

TEST_CASE("validate_model flags a finetuned state without parent id") {
    ModelState s = small_state();
    s.provenance = {ProvenanceKind::Finetuned, ""};
    CHECK(has_rule(validate_model(s), "finetuned-without-parent-id"));
}

TEST_CASE("validate_model never throws on broken states") {
    ModelState s; // empty everything
    auto v = validate_model(s);
    CHECK(has_rule(v, "alphabet-empty"));
}
