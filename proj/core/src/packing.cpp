// SPDX-License-Identifier: Apache-2.0

#include "entsumm/packing.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

// Dotted tokens that do not terminate a sentence. Single-letter initials are
// handled separately.
const std::set<std::string> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "ca.", "al.", "fig.", "figs.", "no.", "nos.",
    "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "approx.", "dept.", "univ.", "inc.", "ltd.",
};

bool is_sentence_punct(char c) {
    return c == '.' || c == '!' || c == '?';
}

std::string lower_copy(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

// The word ending right before the period at `dot`, including that period.
bool is_abbreviation_before(std::string_view text, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !std::isspace(static_cast<unsigned char>(text[b - 1]))) {
        --b;
    }
    const auto word = text.substr(b, dot - b + 1);
    if (word.size() == 2 && std::isalpha(static_cast<unsigned char>(word[0]))) {
        return true;  // initials such as "J."
    }
    return kAbbreviations.count(lower_copy(word)) > 0;
}

// Offsets where sentences begin; the first sentence begins at 0.
std::vector<std::size_t> sentence_starts(std::string_view text) {
    std::vector<std::size_t> starts;
    if (text.empty()) {
        return starts;
    }
    starts.push_back(0);
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_sentence_punct(text[i])) {
            ++i;
            continue;
        }
        // Treat a run of punctuation as one terminator.
        std::size_t run_end = i;
        while (run_end + 1 < n && is_sentence_punct(text[run_end + 1])) {
            ++run_end;
        }
        const bool lone_period = run_end == i && text[i] == '.';
        if (lone_period && is_abbreviation_before(text, i)) {
            i = run_end + 1;
            continue;
        }
        std::size_t next = run_end + 1;
        while (next < n && std::isspace(static_cast<unsigned char>(text[next]))) {
            ++next;
        }
        if (next >= n) {
            break;  // terminator at end of text closes the last sentence
        }
        if (next > run_end + 1 && std::isupper(static_cast<unsigned char>(text[next]))) {
            starts.push_back(next);
        }
        i = run_end + 1;
    }
    return starts;
}

// Truncates to the allowance and closes any entity pair the cut would split:
// the closer takes the final kept slot, or a bare trailing opener is dropped.
std::vector<TokenId> truncate_with_marker_repair(const std::vector<TokenId>& ids,
                                                 std::size_t allowance) {
    std::vector<TokenId> kept(ids.begin(),
                              ids.begin() + static_cast<std::ptrdiff_t>(
                                                std::min(allowance, ids.size())));
    if (kept.size() == ids.size()) {
        return kept;
    }
    bool open = false;
    std::size_t open_pos = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i] == special::kEntOpen) {
            open = true;
            open_pos = i;
        } else if (kept[i] == special::kEntClose) {
            open = false;
        }
    }
    if (open) {
        if (open_pos + 1 == kept.size()) {
            kept.pop_back();
        } else {
            kept.back() = special::kEntClose;
        }
    }
    return kept;
}

}  // namespace

InputMode input_mode_from_string(std::string_view s) {
    if (s == "default") {
        return InputMode::Default;
    }
    if (s == "last3") {
        return InputMode::Last3;
    }
    throw Error("unknown input mode '" + std::string(s) + "' (expected default or last3)");
}

std::string_view to_string(InputMode mode) {
    return mode == InputMode::Default ? "default" : "last3";
}

std::vector<std::size_t> distribute_budget(const std::vector<std::size_t>& doc_token_counts,
                                           std::size_t budget, std::size_t per_doc_overhead,
                                           std::size_t global_overhead,
                                           bool redistribute_remainder) {
    if (doc_token_counts.empty()) {
        throw Error("distribute_budget: no documents");
    }
    if (per_doc_overhead < 1) {
        throw Error("distribute_budget: per-document overhead must be at least 1");
    }
    if (budget < global_overhead) {
        throw Error("distribute_budget: budget " + std::to_string(budget) +
                    " cannot cover the global overhead");
    }
    const std::size_t n = doc_token_counts.size();
    const std::size_t available = budget - global_overhead;
    const std::size_t base = available / n;
    if (base < per_doc_overhead) {
        throw Error("distribute_budget: budget " + std::to_string(budget) +
                    " too small to grant every one of " + std::to_string(n) +
                    " documents its overhead");
    }
    std::vector<std::size_t> allowances(n, base - per_doc_overhead);
    if (redistribute_remainder) {
        std::size_t remainder = available - base * n;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return doc_token_counts[a] > doc_token_counts[b];
        });
        for (std::size_t i = 0; i < n && remainder > 0; ++i, --remainder) {
            ++allowances[order[i]];
        }
    }
    return allowances;
}

std::vector<std::string> split_sentences(std::string_view text) {
    const auto starts = sentence_starts(text);
    std::vector<std::string> sentences;
    sentences.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : text.size();
        sentences.emplace_back(text.substr(starts[i], end - starts[i]));
    }
    return sentences;
}

std::string last_k_sentences(std::string_view text, std::size_t k) {
    if (k < 1) {
        throw Error("last_k_sentences: k must be at least 1");
    }
    const auto starts = sentence_starts(text);
    if (starts.size() <= k) {
        return std::string(text);
    }
    return std::string(text.substr(starts[starts.size() - k]));
}

std::vector<std::string> prepare_documents(const Review& review,
                                           const std::vector<std::vector<PicoSpan>>& spans_per_doc,
                                           const PackConfig& config, const CleaningRules& rules) {
    if (review.abstracts.empty()) {
        throw Error("review " + review.review_id + " has no abstracts");
    }
    std::vector<std::string> docs;
    docs.reserve(review.abstracts.size());
    for (std::size_t d = 0; d < review.abstracts.size(); ++d) {
        std::string text = clean_document(review.abstracts[d], rules);
        std::size_t kept_from = 0;
        if (config.input_mode == InputMode::Last3) {
            const std::string suffix = last_k_sentences(text, config.k);
            kept_from = text.size() - suffix.size();
            text = suffix;
        }
        if (!config.marking) {
            docs.push_back(std::move(text));
            continue;
        }
        std::vector<PicoSpan> spans;
        if (d < spans_per_doc.size()) {
            spans = spans_per_doc[d];
        }
        // Re-base annotation offsets onto the kept suffix.
        std::vector<PicoSpan> clipped;
        for (auto s : spans) {
            s.start = std::max(s.start, kept_from);
            if (s.start >= s.end) {
                continue;
            }
            clipped.push_back({s.start - kept_from, s.end - kept_from, s.klass});
        }
        const auto normalized = normalize_spans(std::move(clipped), text.size());
        docs.push_back(insert_entity_markers(text, normalized).text);
    }
    return docs;
}

PackedInput pack_input(const Review& review,
                       const std::vector<std::vector<PicoSpan>>& spans_per_doc,
                       const PackConfig& config, Tokenizer& tokenizer,
                       const CleaningRules& rules) {
    const auto docs = prepare_documents(review, spans_per_doc, config, rules);

    std::vector<std::vector<TokenId>> doc_ids;
    std::vector<std::size_t> counts;
    doc_ids.reserve(docs.size());
    counts.reserve(docs.size());
    for (const auto& doc : docs) {
        doc_ids.push_back(tokenizer.tokenize(doc));
        counts.push_back(doc_ids.back().size());
    }

    // The start token is the global overhead, the <doc-sep> the per-doc one.
    const auto allowances =
        distribute_budget(counts, config.budget, 1, 1, config.redistribute_remainder);

    PackedInput packed;
    packed.review_id = review.review_id;
    packed.marked = config.marking;
    packed.token_ids.push_back(special::kStart);
    for (std::size_t d = 0; d < doc_ids.size(); ++d) {
        auto segment = truncate_with_marker_repair(doc_ids[d], allowances[d]);
        if (segment.empty()) {
            continue;  // nothing survived truncation: no segment, no separator
        }
        packed.token_ids.insert(packed.token_ids.end(), segment.begin(), segment.end());
        packed.doc_boundaries.push_back(packed.token_ids.size());
        packed.token_ids.push_back(special::kDocSep);
    }

    bool in_span = false;
    for (std::size_t i = 0; i < packed.token_ids.size(); ++i) {
        const auto id = packed.token_ids[i];
        if (id == special::kEntOpen) {
            in_span = true;
            packed.entity_token_positions.push_back(i);
        } else if (id == special::kEntClose) {
            in_span = false;
            packed.entity_token_positions.push_back(i);
        } else if (in_span) {
            packed.entity_token_positions.push_back(i);
        }
    }
    return packed;
}

void save_packed_inputs(const std::filesystem::path& path,
                        const std::vector<PackedInput>& inputs) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write packed input file: " + path.string());
    }
    for (const auto& p : inputs) {
        nlohmann::json j{{"review_id", p.review_id},
                         {"token_ids", p.token_ids},
                         {"doc_boundaries", p.doc_boundaries},
                         {"entity_token_positions", p.entity_token_positions},
                         {"marked", p.marked}};
        out << j.dump() << '\n';
    }
}

std::vector<PackedInput> load_packed_inputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read packed input file: " + path.string());
    }
    std::vector<PackedInput> inputs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            PackedInput p;
            p.review_id = j.at("review_id").get<std::string>();
            p.token_ids = j.at("token_ids").get<std::vector<TokenId>>();
            p.doc_boundaries = j.at("doc_boundaries").get<std::vector<std::size_t>>();
            p.entity_token_positions =
                j.at("entity_token_positions").get<std::vector<std::size_t>>();
            p.marked = j.value("marked", false);
            inputs.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw Error("packed inputs " + path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
    }
    return inputs;
}

}  // namespace entsumm
