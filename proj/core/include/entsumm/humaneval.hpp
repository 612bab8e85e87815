// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace entsumm {

// Direction a summary claims for the intervention's effect.
enum class DirectionValue { Positive, Negative, NoEffect, NoEvidence, NoClaim };

DirectionValue direction_value_from_string(std::string_view s);
std::string_view to_string(DirectionValue value);

// One human judgment of one generated summary.
struct AnnotationRecord {
    std::string review_id;
    std::string model_id;
    bool pico_aligned = false;
    bool direction_correct = false;
    bool contradictory = false;
    bool malformed = false;
    DirectionValue target_direction = DirectionValue::NoClaim;
    DirectionValue generated_direction = DirectionValue::NoClaim;

    bool no_evidence() const { return generated_direction == DirectionValue::NoEvidence; }
};

// Factuality is derived, never stored: aligned PICO and correct direction.
bool factual(const AnnotationRecord& record);

// Case-folds and collapses runs of whitespace to single spaces, trimmed.
std::string normalize_pico_element(std::string_view element);

// True iff the generated set is nonempty and every element appears in the
// target set or the objectives set. Elements are normalized before comparing.
bool pico_alignment(const std::vector<std::string>& target_set,
                    const std::vector<std::string>& generated_set,
                    const std::vector<std::string>& objectives_set);

// 100 * count / total rounded half-up.
int percent_half_up(std::size_t count, std::size_t total);

struct EvalRow {
    std::string model_id;
    std::size_t records = 0;
    int pico = 0;
    int direction = 0;
    int factual = 0;
    int contradictory = 0;
    int malformed = 0;
    int no_evidence = 0;
};

struct EvalTable {
    std::vector<EvalRow> rows;  // sorted by model_id

    std::string to_csv() const;
    std::string to_text() const;
};

// Groups records by model_id and reports column percentages per model.
EvalTable aggregate_annotations(const std::vector<AnnotationRecord>& records);

// JSONL, one record per line. The stored no_evidence flag must agree with
// the generated direction.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      const std::vector<AnnotationRecord>& records);

}  // namespace entsumm
