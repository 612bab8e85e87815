// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entsumm/tokenizer.hpp"

namespace entsumm {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Clipped n-gram overlap. Tokens are lowercased; the optional stemmer strips
// common suffixes and is off by default. Empty texts score zero.
RougeScore rouge_n(std::string_view candidate, std::string_view reference, std::size_t n,
                   const Tokenizer& tokenizer, bool stem = false);

// Longest common subsequence over token sequences.
RougeScore rouge_l(std::string_view candidate, std::string_view reference,
                   const Tokenizer& tokenizer, bool stem = false);

struct ExtractivenessScore {
    RougeScore r1;
    RougeScore r2;
    RougeScore rl;
};

// Token overlap of the summary against the concatenated sources. Sources are
// expected already cleaned; they are joined with single spaces.
ExtractivenessScore extractiveness(std::string_view summary, const std::vector<std::string>& sources,
                                   const Tokenizer& tokenizer);

enum class DirectionLabel { Increases, Decreases, NoChange };

DirectionLabel direction_label_from_string(std::string_view s);
std::string_view to_string(DirectionLabel label);

struct DirectionDistribution {
    double increases = 0.0;
    double decreases = 0.0;
    double no_change = 0.0;

    // Entries nonnegative and summing to 1 within eps.
    void validate(double eps = 1e-9) const;
};

// Ties at the maximum resolve to NoChange.
DirectionLabel argmax_direction(const DirectionDistribution& dist);

double total_variation(const DirectionDistribution& a, const DirectionDistribution& b);

using DirectionDistance = double (*)(const DirectionDistribution&, const DirectionDistribution&);

// Distance between the target and generated direction distributions. The
// distance function is pluggable; total variation is the default.
double delta_ei(const DirectionDistribution& target, const DirectionDistribution& generated,
                DirectionDistance distance = &total_variation);

// Macro-F1 over the three directions; classes absent from both label lists
// are excluded from the average.
double delta_ei_f1(const std::vector<DirectionLabel>& target_labels,
                   const std::vector<DirectionLabel>& generated_labels);

// Cue-phrase direction classifier for end-to-end demos only; returns a
// distribution proportional to cue counts, or pure no_change without cues.
DirectionDistribution classify_direction_cues(std::string_view text);

struct DirectionScores {
    std::string review_id;
    DirectionDistribution target;
    DirectionDistribution generated;
    std::optional<double> bertscore;
};

// JSONL: {review_id, target_direction: [inc,dec,nc], generated_direction:
// [inc,dec,nc], bertscore?}.
std::vector<DirectionScores> load_direction_scores(const std::filesystem::path& path);
void save_direction_scores(const std::filesystem::path& path,
                           const std::vector<DirectionScores>& scores);

struct ReviewMetrics {
    std::string review_id;
    RougeScore r1;
    RougeScore r2;
    RougeScore rl;
    ExtractivenessScore extr;
    std::optional<double> bertscore;
    std::optional<double> delta_ei;
    std::optional<DirectionLabel> target_label;
    std::optional<DirectionLabel> generated_label;
};

struct MetricsReport {
    std::vector<ReviewMetrics> reviews;
    RougeScore mean_r1;
    RougeScore mean_r2;
    RougeScore mean_rl;
    ExtractivenessScore mean_extr;
    std::optional<double> mean_bertscore;
    std::optional<double> mean_delta_ei;
    std::optional<double> corpus_delta_ei_f1;
    // Which component the extractiveness CSV columns report; the JSON output
    // always retains all three.
    std::string extractiveness_column = "f1";

    // Means are arithmetic over per-review values; optional columns average
    // over the reviews that carry them and stay absent when none do.
    static MetricsReport aggregate(std::vector<ReviewMetrics> reviews);

    std::string to_csv() const;
    std::string to_json() const;
};

}  // namespace entsumm
