// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "entsumm/corpus.hpp"
#include "entsumm/spans.hpp"
#include "entsumm/tokenizer.hpp"

namespace entsumm {

enum class InputMode { Default, Last3 };

InputMode input_mode_from_string(std::string_view s);
std::string_view to_string(InputMode mode);

struct PackConfig {
    std::size_t budget = 4096;
    InputMode input_mode = InputMode::Default;
    std::size_t k = 3;          // sentence count for Last3
    bool marking = true;        // false reproduces the no-entity baseline
    bool redistribute_remainder = false;  // hand leftover budget to the longest docs
};

// Model-ready token sequence for one review.
struct PackedInput {
    std::string review_id;
    std::vector<TokenId> token_ids;
    std::vector<std::size_t> doc_boundaries;          // positions of <doc-sep>
    std::vector<std::size_t> entity_token_positions;  // markers plus the ids between each pair
    bool marked = false;
};

// Even split of the budget: every document gets
// floor((budget - global_overhead) / n) - per_doc_overhead tokens, remainder
// dropped. With redistribute_remainder the leftover goes one token apiece to
// the longest documents instead.
std::vector<std::size_t> distribute_budget(const std::vector<std::size_t>& doc_token_counts,
                                           std::size_t budget, std::size_t per_doc_overhead,
                                           std::size_t global_overhead = 0,
                                           bool redistribute_remainder = false);

// Rule-based splitter: a sentence ends at . ! ? followed by whitespace and an
// uppercase letter (or end of text); a short abbreviation list and
// single-letter initials are exempt. Chunks keep their trailing whitespace so
// concatenating them reproduces the input.
std::vector<std::string> split_sentences(std::string_view text);

// The suffix of text starting at the k-th sentence from the end; identity when
// the text has at most k sentences.
std::string last_k_sentences(std::string_view text, std::size_t k);

// Per-document text preparation shared by vocabulary warm-up and packing:
// clean, then Last-k selection, then entity marking. Span offsets address the
// cleaned text; under Last-k they are clipped to the kept suffix and re-based.
std::vector<std::string> prepare_documents(const Review& review,
                                           const std::vector<std::vector<PicoSpan>>& spans_per_doc,
                                           const PackConfig& config, const CleaningRules& rules);

// clean -> select -> mark -> tokenize -> truncate -> <doc-sep>, documents in
// order after a single start token. Truncation never leaves an unclosed
// entity: the closer takes the final slot of the allowance (or a bare opener
// is dropped). Documents that truncate to nothing are dropped entirely.
PackedInput pack_input(const Review& review,
                       const std::vector<std::vector<PicoSpan>>& spans_per_doc,
                       const PackConfig& config, Tokenizer& tokenizer,
                       const CleaningRules& rules);

// PackedInput JSONL: {"review_id", "token_ids", "doc_boundaries",
// "entity_token_positions", "marked"} per line.
void save_packed_inputs(const std::filesystem::path& path, const std::vector<PackedInput>& inputs);
std::vector<PackedInput> load_packed_inputs(const std::filesystem::path& path);

}  // namespace entsumm
