// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace entsumm {

// Comparators are folded into interventions, so three classes only.
enum class PicoClass : char { P = 'P', I = 'I', O = 'O' };

PicoClass pico_class_from_char(char c);

// Character-offset span over a host text; end is exclusive.
struct PicoSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    PicoClass klass = PicoClass::I;

    bool operator==(const PicoSpan&) const = default;
};

// Sorts by start and merges overlapping or touching spans into one span
// covering their union; the merged span keeps the class of the earliest
// constituent. Throws on inverted offsets or spans past text_length.
std::vector<PicoSpan> normalize_spans(std::vector<PicoSpan> spans, std::size_t text_length);

// Text with balanced, non-nested <ent> ... </ent> pairs.
struct MarkedText {
    std::string text;
};

// Wraps every span in <ent> / </ent>, with single surrounding spaces so the
// markers tokenize as standalone tokens. Spans must be normalized.
MarkedText insert_entity_markers(std::string_view text, const std::vector<PicoSpan>& spans);

struct StripResult {
    std::string text;
    std::vector<PicoSpan> spans;  // class-unlabelled, reported as I
};

// Inverse of insert_entity_markers: removes the markers (and the spaces the
// insertion added) and reports the covered offsets in the recovered text.
// Throws on unbalanced or nested markers, naming the first offending offset.
StripResult strip_entity_markers(const MarkedText& marked);

// Phrase -> class table for the fallback tagger. Phrases are matched
// case-insensitively and must align on word boundaries.
using Lexicon = std::vector<std::pair<std::string, PicoClass>>;

// Two-column file: phrase <TAB> P|I|O. Lines starting with '#' are skipped.
Lexicon load_lexicon(const std::filesystem::path& path);

// Longest-match left-to-right scan; output is sorted and non-overlapping, so
// it feeds insert_entity_markers directly. Stands in for a trained tagger.
std::vector<PicoSpan> lexicon_tag(std::string_view text, const Lexicon& lexicon);

// One annotation line: spans for one document of one review, with offsets
// into the cleaned text. doc_index -1 addresses the target summary.
struct SpanAnnotation {
    std::string review_id;
    int doc_index = 0;
    std::vector<PicoSpan> spans;
};

std::vector<SpanAnnotation> load_span_annotations(const std::filesystem::path& path);
void save_span_annotations(const std::filesystem::path& path,
                           const std::vector<SpanAnnotation>& annotations);

// Lookup helper over a span annotation file.
class SpanIndex {
public:
    SpanIndex() = default;
    explicit SpanIndex(const std::vector<SpanAnnotation>& annotations);

    // Empty list when the (review, doc) pair carries no annotation.
    const std::vector<PicoSpan>& lookup(const std::string& review_id, int doc_index) const;

private:
    std::map<std::string, std::map<int, std::vector<PicoSpan>>> m_by_review;
};

}  // namespace entsumm
