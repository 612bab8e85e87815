// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entsumm/attention.hpp"
#include "entsumm/corpus.hpp"
#include "entsumm/humaneval.hpp"
#include "entsumm/metrics.hpp"
#include "entsumm/packing.hpp"

namespace entsumm {

// Declarative run description. Relative paths in the config file resolve
// against the file's own directory. Only `reviews` is required everywhere;
// `generated` is additionally required by evaluate().
struct RunConfig {
    std::filesystem::path reviews_path;
    std::filesystem::path spans_path;          // gold span annotations (cleaned-text offsets)
    std::filesystem::path lexicon_path;        // fallback tagger when no span file
    std::filesystem::path generated_path;      // JSONL {review_id, summary}
    std::filesystem::path directions_path;     // direction scores JSONL
    std::filesystem::path bertscore_path;      // JSONL {review_id, bertscore}
    std::filesystem::path annotations_path;    // human-eval records
    std::filesystem::path cleaning_rules_path; // defaults when empty
    PackConfig pack;
    AttentionConfig attention;
    std::filesystem::path output_dir = "out";
    std::vector<std::string> report_formats{"json", "csv"};
    bool clean_targets = false;
    bool replace_padded_ids = false;
    std::string extractiveness_metric = "f1";

    static RunConfig load(const std::filesystem::path& path);
    void validate() const;
};

struct RunResult {
    std::vector<std::string> packed_ids;
    std::vector<std::string> failed_ids;
    std::filesystem::path manifest_path;

    bool ok() const { return failed_ids.empty(); }
};

// clean -> tag -> pack -> mask over every review, artifacts plus a manifest
// of content hashes into output_dir. Per-review failures are logged to
// stderr and reported in the result instead of aborting the run.
RunResult run_pipeline(const RunConfig& config);

struct EvaluateResult {
    MetricsReport metrics;
    std::optional<EvalTable> eval_table;
    std::vector<std::string> warnings;
};

// Scores generated summaries against targets and writes the reports in the
// configured formats.
EvaluateResult evaluate(const RunConfig& config);

// JSONL {review_id, summary}; duplicate ids are an error.
std::map<std::string, std::string> load_generated_summaries(const std::filesystem::path& path);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Packing and masking workers, from ENTSUMM_WORKERS (default 1).
std::size_t worker_count();

}  // namespace entsumm
