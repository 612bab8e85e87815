// SPDX-License-Identifier: Apache-2.0

#include <doctest/doctest.h>

#include <string>
#include <vector>

#include "entsumm/corpus.hpp"
#include "entsumm/error.hpp"
#include "entsumm/spans.hpp"

#include "test_util.hpp"

using entsumm::insert_entity_markers;
using entsumm::MarkedText;
using entsumm::normalize_spans;
using entsumm::PicoClass;
using entsumm::PicoSpan;
using entsumm::strip_entity_markers;

TEST_CASE("normalize sorts and merges overlapping or touching spans") {
    std::vector<PicoSpan> spans = {{10, 14, PicoClass::O}, {2, 5, PicoClass::P}, {4, 8, PicoClass::I}};
    const auto norm = normalize_spans(spans, 20);
    REQUIRE(norm.size() == 2);
    CHECK(norm[0].start == 2);
    CHECK(norm[0].end == 8);
    CHECK(norm[0].klass == PicoClass::P);
    CHECK(norm[1].start == 10);
    CHECK(norm[1].end == 14);

    const auto touching = normalize_spans({{0, 3, PicoClass::I}, {3, 6, PicoClass::O}}, 6);
    REQUIRE(touching.size() == 1);
    CHECK(touching[0].start == 0);
    CHECK(touching[0].end == 6);
    CHECK(touching[0].klass == PicoClass::I);
}

TEST_CASE("normalize rejects invalid spans") {
    CHECK_THROWS_AS((void)normalize_spans({{5, 5, PicoClass::P}}, 10), entsumm::Error);
    CHECK_THROWS_AS((void)normalize_spans({{7, 3, PicoClass::P}}, 10), entsumm::Error);
    CHECK_THROWS_AS((void)normalize_spans({{0, 11, PicoClass::P}}, 10), entsumm::Error);
}

TEST_CASE("marker insertion wraps each span") {
    const std::string text =
        "Magnesium sulfate does not have a major impact on disease progression in women with "
        "mild preeclampsia.";
    const auto i_start = text.find("Magnesium sulfate");
    const auto p_start = text.find("women with mild preeclampsia");
    const std::vector<PicoSpan> spans = {
        {i_start, i_start + std::string("Magnesium sulfate").size(), PicoClass::I},
        {p_start, p_start + std::string("women with mild preeclampsia").size(), PicoClass::P}};
    const auto marked = insert_entity_markers(text, spans);
    CHECK(marked.text ==
          "<ent> Magnesium sulfate </ent> does not have a major impact on disease progression "
          "in <ent> women with mild preeclampsia </ent>.");
}

TEST_CASE("marker insertion rejects overlapping or touching spans") {
    CHECK_THROWS_AS((void)insert_entity_markers("abcdef", {{0, 3, PicoClass::I}, {3, 6, PicoClass::O}}),
                    entsumm::Error);
    CHECK_THROWS_AS((void)insert_entity_markers("abcdef", {{0, 4, PicoClass::I}, {2, 6, PicoClass::O}}),
                    entsumm::Error);
    CHECK_THROWS_AS((void)insert_entity_markers("abc", {{1, 1, PicoClass::I}}), entsumm::Error);
    CHECK_THROWS_AS((void)insert_entity_markers("abc", {{0, 9, PicoClass::I}}), entsumm::Error);
}

TEST_CASE("strip undoes insert and recovers span offsets") {
    const std::string text = "Insulin improves glycaemic control in adults.";
    const std::vector<PicoSpan> spans = {{0, 7, PicoClass::I}, {17, 34, PicoClass::O}};
    const auto marked = insert_entity_markers(text, spans);
    const auto stripped = strip_entity_markers(marked);
    CHECK(stripped.text == text);
    REQUIRE(stripped.spans.size() == spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        CHECK(stripped.spans[i].start == spans[i].start);
        CHECK(stripped.spans[i].end == spans[i].end);
    }
}

TEST_CASE("strip flags malformed marker structure") {
    CHECK_THROWS_AS((void)strip_entity_markers(MarkedText{"<ent> a <ent> b </ent>"}), entsumm::Error);
    CHECK_THROWS_AS((void)strip_entity_markers(MarkedText{"a </ent> b"}), entsumm::Error);
    CHECK_THROWS_AS((void)strip_entity_markers(MarkedText{"a <ent> b"}), entsumm::Error);
}

TEST_CASE("strip drops empty marker pairs") {
    const auto stripped = strip_entity_markers(MarkedText{"a <ent> </ent> b"});
    CHECK(stripped.text == "a  b");
    CHECK(stripped.spans.empty());
}

TEST_CASE("lexicon tagging finds case-insensitive longest matches at word starts") {
    const auto lexicon = entsumm::load_lexicon(testutil::repo_data_dir() / "pico_lexicon.tsv");

    const std::string text = "Animal insulin lowered blood pressure.";
    const auto spans = entsumm::lexicon_tag(text, lexicon);
    REQUIRE(spans.size() == 2);
    CHECK(text.substr(spans[0].start, spans[0].end - spans[0].start) == "Animal insulin");
    CHECK(spans[0].klass == PicoClass::I);
    CHECK(text.substr(spans[1].start, spans[1].end - spans[1].start) == "blood pressure");
    CHECK(spans[1].klass == PicoClass::O);
}

TEST_CASE("lexicon tagging respects word boundaries") {
    const entsumm::Lexicon lexicon = {{"insulin", PicoClass::I}};
    CHECK(entsumm::lexicon_tag("insulins were compared", lexicon).empty());
    CHECK(entsumm::lexicon_tag("paxinsulin dose", lexicon).empty());
    const auto spans = entsumm::lexicon_tag("INSULIN was given", lexicon);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].start == 0);
    CHECK(spans[0].end == 7);
}

TEST_CASE("lexicon tagging covers the worked sentence") {
    const auto lexicon = entsumm::load_lexicon(testutil::repo_data_dir() / "pico_lexicon.tsv");
    const std::string text =
        "Magnesium sulfate does not have a major impact on disease progression in women with "
        "mild preeclampsia.";
    const auto spans = entsumm::lexicon_tag(text, lexicon);
    REQUIRE(spans.size() == 2);
    CHECK(text.substr(spans[0].start, spans[0].end - spans[0].start) == "Magnesium sulfate");
    CHECK(text.substr(spans[1].start, spans[1].end - spans[1].start) ==
          "women with mild preeclampsia");
}

TEST_CASE("span annotations roundtrip and index by review and document") {
    const auto annotations =
        entsumm::load_span_annotations(testutil::test_data_dir() / "spans.jsonl");
    REQUIRE(annotations.size() == 3);

    testutil::TempDir tmp;
    entsumm::save_span_annotations(tmp.file("spans.jsonl"), annotations);
    const auto again = entsumm::load_span_annotations(tmp.file("spans.jsonl"));
    REQUIRE(again.size() == annotations.size());
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        CHECK(again[i].review_id == annotations[i].review_id);
        CHECK(again[i].doc_index == annotations[i].doc_index);
        CHECK(again[i].spans.size() == annotations[i].spans.size());
    }

    const entsumm::SpanIndex index(annotations);
    CHECK(index.lookup("CR0001", 0).size() == 2);
    CHECK(index.lookup("CR0001", 1).size() == 1);
    CHECK(index.lookup("CR0001", -1).size() == 1);
    CHECK(index.lookup("CR0001", 7).empty());
    CHECK(index.lookup("CRXXXX", 0).empty());
}

TEST_CASE("gold span fixture addresses the cleaned fixture text") {
    const auto reviews = entsumm::load_reviews(testutil::test_data_dir() / "reviews.jsonl");
    const auto annotations =
        entsumm::load_span_annotations(testutil::test_data_dir() / "spans.jsonl");
    const entsumm::SpanIndex index(annotations);
    const auto& rules = entsumm::CleaningRules::defaults();

    const auto& review = reviews[0];
    REQUIRE(review.review_id == "CR0001");
    const auto doc0 = entsumm::clean_document(review.abstracts[0], rules);
    const auto doc1 = entsumm::clean_document(review.abstracts[1], rules);
    const auto& s0 = index.lookup("CR0001", 0);
    CHECK(doc0.substr(s0[0].start, s0[0].end - s0[0].start) == "Insulin");
    CHECK(doc0.substr(s0[1].start, s0[1].end - s0[1].start) == "glycaemic control");
    const auto& s1 = index.lookup("CR0001", 1);
    CHECK(doc1.substr(s1[0].start, s1[0].end - s1[0].start) == "adults with diabetes");
}
