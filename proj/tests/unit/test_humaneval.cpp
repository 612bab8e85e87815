// SPDX-License-Identifier: Apache-2.0

#include <doctest/doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "entsumm/error.hpp"
#include "entsumm/humaneval.hpp"

#include "test_util.hpp"

using entsumm::aggregate_annotations;
using entsumm::AnnotationRecord;
using entsumm::DirectionValue;
using entsumm::normalize_pico_element;
using entsumm::percent_half_up;
using entsumm::pico_alignment;

TEST_CASE("direction values roundtrip through strings") {
    CHECK(entsumm::direction_value_from_string("positive") == DirectionValue::Positive);
    CHECK(entsumm::direction_value_from_string("negative") == DirectionValue::Negative);
    CHECK(entsumm::direction_value_from_string("no_effect") == DirectionValue::NoEffect);
    CHECK(entsumm::direction_value_from_string("no_evidence") == DirectionValue::NoEvidence);
    CHECK(entsumm::direction_value_from_string("no_claim") == DirectionValue::NoClaim);
    CHECK(entsumm::to_string(DirectionValue::NoEffect) == "no_effect");
    CHECK_THROWS_AS((void)entsumm::direction_value_from_string("sideways"), entsumm::Error);
}

TEST_CASE("no_evidence derives from the generated direction") {
    AnnotationRecord r;
    r.generated_direction = DirectionValue::NoEvidence;
    CHECK(r.no_evidence());
    r.generated_direction = DirectionValue::Positive;
    CHECK(!r.no_evidence());
}

TEST_CASE("factual is the conjunction of pico and direction") {
    AnnotationRecord r;
    r.pico_aligned = true;
    r.direction_correct = true;
    CHECK(entsumm::factual(r));
    r.direction_correct = false;
    CHECK(!entsumm::factual(r));
    r.pico_aligned = false;
    r.direction_correct = true;
    CHECK(!entsumm::factual(r));
    r.direction_correct = false;
    CHECK(!entsumm::factual(r));
}

TEST_CASE("pico elements normalize by case and whitespace") {
    CHECK(normalize_pico_element("  Magnesium   Sulfate ") == "magnesium sulfate");
    CHECK(normalize_pico_element("ADULTS\twith\n diabetes") == "adults with diabetes");
    CHECK(normalize_pico_element("") == "");
    CHECK(normalize_pico_element("   ") == "");
}

TEST_CASE("pico alignment accepts subsets plus objectives and rejects extras") {
    const std::vector<std::string> target = {"magnesium sulfate", "women with preeclampsia"};
    const std::vector<std::string> objectives = {"eclampsia risk"};

    CHECK(pico_alignment(target, target, {}));
    CHECK(pico_alignment(target, {"magnesium sulfate"}, {}));
    CHECK(!pico_alignment(target, {"magnesium sulfate", "blood pressure"}, objectives));
    CHECK(pico_alignment(target, {"magnesium sulfate", "eclampsia risk"}, objectives));
    CHECK(!pico_alignment(target, {}, objectives));
    CHECK(pico_alignment(target, {"  MAGNESIUM  sulfate "}, {}));
}

TEST_CASE("pico alignment is monotone in the allowed sets") {
    const std::vector<std::string> generated = {"a", "b"};
    std::vector<std::string> target = {"a"};
    std::vector<std::string> objectives = {"b"};
    REQUIRE(pico_alignment(target, generated, objectives));
    target.push_back("c");
    CHECK(pico_alignment(target, generated, objectives));
    objectives.push_back("d");
    CHECK(pico_alignment(target, generated, objectives));
}

TEST_CASE("percentages round half up") {
    CHECK(percent_half_up(10, 20) == 50);
    CHECK(percent_half_up(1, 3) == 33);
    CHECK(percent_half_up(3, 8) == 38);
    CHECK(percent_half_up(1, 8) == 13);
    CHECK(percent_half_up(0, 7) == 0);
    CHECK(percent_half_up(7, 7) == 100);
    CHECK(percent_half_up(1, 200) == 1);
    CHECK_THROWS_AS((void)percent_half_up(1, 0), entsumm::Error);
}

TEST_CASE("the 20-record fixture aggregates to the expected row") {
    const auto records =
        entsumm::load_annotations(testutil::test_data_dir() / "annotations.jsonl");
    REQUIRE(records.size() == 25);
    const auto table = aggregate_annotations(records);
    REQUIRE(table.rows.size() == 2);

    const auto& markers = table.rows[0];
    CHECK(markers.model_id == "ent_markers_full");
    CHECK(markers.records == 5);
    CHECK(markers.pico == 80);
    CHECK(markers.direction == 80);
    CHECK(markers.factual == 80);
    CHECK(markers.contradictory == 0);
    CHECK(markers.malformed == 0);
    CHECK(markers.no_evidence == 20);

    const auto& baseline = table.rows[1];
    CHECK(baseline.model_id == "no_entity_full");
    CHECK(baseline.records == 20);
    CHECK(baseline.pico == 50);
    CHECK(baseline.direction == 60);
    CHECK(baseline.factual == 35);
    CHECK(baseline.contradictory == 10);
    CHECK(baseline.malformed == 10);
    CHECK(baseline.no_evidence == 35);
}

TEST_CASE("factual never exceeds pico or direction per model") {
    const auto records =
        entsumm::load_annotations(testutil::test_data_dir() / "annotations.jsonl");
    const auto table = aggregate_annotations(records);
    for (const auto& row : table.rows) {
        CHECK(row.factual <= std::min(row.pico, row.direction));
    }
}

TEST_CASE("aggregation is invariant under record order") {
    auto records = entsumm::load_annotations(testutil::test_data_dir() / "annotations.jsonl");
    const auto before = aggregate_annotations(records);
    std::mt19937 rng(5);
    std::shuffle(records.begin(), records.end(), rng);
    const auto after = aggregate_annotations(records);
    REQUIRE(before.rows.size() == after.rows.size());
    for (std::size_t i = 0; i < before.rows.size(); ++i) {
        CHECK(before.rows[i].model_id == after.rows[i].model_id);
        CHECK(before.rows[i].pico == after.rows[i].pico);
        CHECK(before.rows[i].direction == after.rows[i].direction);
        CHECK(before.rows[i].factual == after.rows[i].factual);
        CHECK(before.rows[i].no_evidence == after.rows[i].no_evidence);
    }
}

TEST_CASE("aggregation rejects an empty record list") {
    CHECK_THROWS_AS((void)aggregate_annotations({}), entsumm::Error);
}

TEST_CASE("eval tables render as csv and aligned text") {
    const auto records =
        entsumm::load_annotations(testutil::test_data_dir() / "annotations.jsonl");
    const auto table = aggregate_annotations(records);

    const auto csv = table.to_csv();
    CHECK(csv.rfind("model_id,pico,direction,factual,contradictory,malformed,no_evidence,records",
                    0) == 0);
    CHECK(csv.find("no_entity_full,50,60,35,10,10,35,20") != std::string::npos);

    const auto text = table.to_text();
    CHECK(text.find("Model") != std::string::npos);
    CHECK(text.find("no_entity_full") != std::string::npos);
    CHECK(text.find("ent_markers_full") != std::string::npos);
}

TEST_CASE("annotations roundtrip and validate the stored no_evidence flag") {
    const auto records =
        entsumm::load_annotations(testutil::test_data_dir() / "annotations.jsonl");
    testutil::TempDir tmp;
    entsumm::save_annotations(tmp.file("annotations.jsonl"), records);
    const auto again = entsumm::load_annotations(tmp.file("annotations.jsonl"));
    REQUIRE(again.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(again[i].review_id == records[i].review_id);
        CHECK(again[i].model_id == records[i].model_id);
        CHECK(again[i].pico_aligned == records[i].pico_aligned);
        CHECK(again[i].direction_correct == records[i].direction_correct);
        CHECK(again[i].target_direction == records[i].target_direction);
        CHECK(again[i].generated_direction == records[i].generated_direction);
    }

    testutil::write_file(
        tmp.file("bad.jsonl"),
        R"({"review_id":"R1","model_id":"m","pico_aligned":true,"direction_correct":true,)"
        R"("contradictory":false,"malformed":false,"no_evidence":true,)"
        R"("target_direction":"positive","generated_direction":"positive"})"
        "\n");
    CHECK_THROWS_AS((void)entsumm::load_annotations(tmp.file("bad.jsonl")), entsumm::Error);
}
