// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entsumm/spans.hpp"
#include "entsumm/tokenizer.hpp"

namespace entsumm {

// One systematic-review instance: a target summary plus its trial abstracts.
struct Review {
    std::string review_id;
    std::optional<std::string> target_summary;  // absent for the test split
    std::vector<std::string> abstracts;
    std::optional<std::string> objectives;
};

// One regex removal rule. The five category names are fixed; patterns are data.
struct CleaningRule {
    std::string name;
    std::string pattern;
    std::string replacement;  // must stay empty: rules only remove
};

// Ordered, versioned rule set covering the five metadata categories: hyperlink,
// trial_identifier, funding, copyright, publication_record.
struct CleaningRules {
    int version = 1;
    std::vector<CleaningRule> rules;

    // The built-in v1 rule set.
    static const CleaningRules& defaults();

    static CleaningRules load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // Every rule name must belong to the five categories, all five must be
    // present, and replacements must be empty.
    void validate() const;
};

// Removes every rule-matched substring, applying rules in declared order and
// iterating to a fixpoint so cleaning is idempotent. Nothing else is altered;
// whitespace normalization is left to the tokenizer.
std::string clean_document(std::string_view raw, const CleaningRules& rules);

// doc1 + sep + doc2 + sep + ... + docN + sep, single spaces around each
// separator. Errors on an empty document list.
std::string concat_with_separators(const std::vector<std::string>& docs,
                                   std::string_view separator);

// Review JSONL: {"review_id", "target"?, "abstracts", "objectives"?} per line.
std::vector<Review> load_reviews(const std::filesystem::path& path);
void save_reviews(const std::filesystem::path& path, const std::vector<Review>& reviews);

struct StatsReport {
    std::size_t sample_count = 0;
    double avg_input_length = 0.0;                  // tokens, cleaned + separators
    std::optional<double> avg_summary_length;       // absent when no review has a target
    double avg_pico_spans_input = 0.0;
    std::optional<double> avg_pico_spans_summary;

    // Token averages are reported rounded to the nearest integer.
    std::string to_json() const;
    std::string to_table() const;
};

// Corpus statistics over cleaned inputs. Span counts come from the annotation
// index (doc_index -1 holds target-summary spans).
StatsReport dataset_stats(const std::vector<Review>& reviews, const SpanIndex& spans,
                          Tokenizer& tokenizer, const CleaningRules& rules);

}  // namespace entsumm
