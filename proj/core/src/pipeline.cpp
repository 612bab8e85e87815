// SPDX-License-Identifier: Apache-2.0

#include "entsumm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "entsumm/error.hpp"
#include "entsumm/spans.hpp"
#include "entsumm/tokenizer.hpp"

namespace entsumm {

namespace {

std::vector<Review> load_sorted_reviews(const std::filesystem::path& path) {
    auto reviews = load_reviews(path);
    std::sort(reviews.begin(), reviews.end(),
              [](const Review& a, const Review& b) { return a.review_id < b.review_id; });
    for (std::size_t i = 1; i < reviews.size(); ++i) {
        if (reviews[i].review_id == reviews[i - 1].review_id) {
            throw Error("duplicate review id " + reviews[i].review_id + " in " + path.string());
        }
    }
    return reviews;
}

CleaningRules load_rules(const RunConfig& config) {
    if (config.cleaning_rules_path.empty()) {
        return CleaningRules::defaults();
    }
    return CleaningRules::load(config.cleaning_rules_path);
}

void require_exists(const std::filesystem::path& path, const char* what) {
    if (!std::filesystem::exists(path)) {
        throw Error(std::string(what) + " file does not exist: " + path.string());
    }
}

std::string hex_digest(const unsigned char* digest, unsigned len) {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0x0f];
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write file: " + path.string());
    }
    out << text;
}

std::map<std::string, double> load_bertscores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read bertscore file: " + path.string());
    }
    std::map<std::string, double> scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            scores[j.at("review_id").get<std::string>()] = j.at("bertscore").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw Error("bertscore " + path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
    }
    return scores;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read config file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    const auto get_path = [&](const char* key) -> std::filesystem::path {
        const auto s = j.value(key, std::string());
        if (s.empty()) {
            return {};
        }
        const std::filesystem::path p(s);
        return p.is_absolute() ? p : base / p;
    };
    RunConfig c;
    try {
        c.reviews_path = get_path("reviews");
        c.spans_path = get_path("spans");
        c.lexicon_path = get_path("lexicon");
        c.generated_path = get_path("generated");
        c.directions_path = get_path("directions");
        c.bertscore_path = get_path("bertscore");
        c.annotations_path = get_path("annotations");
        c.cleaning_rules_path = get_path("cleaning_rules");
        if (j.contains("pack")) {
            const auto& p = j.at("pack");
            c.pack.budget = p.value("budget", c.pack.budget);
            c.pack.input_mode =
                input_mode_from_string(p.value("input_mode", std::string(to_string(c.pack.input_mode))));
            c.pack.k = p.value("k", c.pack.k);
            c.pack.marking = p.value("marking", c.pack.marking);
            c.pack.redistribute_remainder =
                p.value("redistribute_remainder", c.pack.redistribute_remainder);
        }
        if (j.contains("attention")) {
            const auto& a = j.at("attention");
            c.attention.setting = attention_setting_from_string(
                a.value("setting", std::string(to_string(c.attention.setting))));
            c.attention.window = a.value("window", c.attention.window);
        }
        c.output_dir = j.contains("output_dir") ? get_path("output_dir") : base / "out";
        c.report_formats = j.value("report_formats", c.report_formats);
        c.clean_targets = j.value("clean_targets", c.clean_targets);
        c.replace_padded_ids = j.value("replace_padded_ids", c.replace_padded_ids);
        c.extractiveness_metric = j.value("extractiveness_metric", c.extractiveness_metric);
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
    return c;
}

void RunConfig::validate() const {
    if (reviews_path.empty()) {
        throw Error("config does not name a reviews file");
    }
    require_exists(reviews_path, "reviews");
    const std::pair<const std::filesystem::path*, const char*> optional_inputs[] = {
        {&spans_path, "spans"},           {&lexicon_path, "lexicon"},
        {&generated_path, "generated"},   {&directions_path, "directions"},
        {&bertscore_path, "bertscore"},   {&annotations_path, "annotations"},
        {&cleaning_rules_path, "cleaning rules"},
    };
    for (const auto& [p, what] : optional_inputs) {
        if (!p->empty()) {
            require_exists(*p, what);
        }
    }
    if (pack.budget < 1) {
        throw Error("pack budget must be positive");
    }
    if (pack.k < 1) {
        throw Error("pack k must be at least 1");
    }
    attention.validate();
    if (extractiveness_metric != "f1" && extractiveness_metric != "precision" &&
        extractiveness_metric != "recall") {
        throw Error("extractiveness_metric must be f1, precision, or recall");
    }
    if (report_formats.empty()) {
        throw Error("report_formats must not be empty");
    }
    for (const auto& f : report_formats) {
        if (f != "json" && f != "csv" && f != "txt") {
            throw Error("unknown report format '" + f + "' (expected json, csv, or txt)");
        }
    }
    if (output_dir.empty()) {
        throw Error("output directory must be set");
    }
}

std::size_t worker_count() {
    const char* env = std::getenv("ENTSUMM_WORKERS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
        throw Error("ENTSUMM_WORKERS must be a positive integer, got '" + std::string(env) + "'");
    }
    return static_cast<std::size_t>(v);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot hash missing file: " + path.string());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("cannot initialize sha256");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        const auto got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw Error("sha256 update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 finalize failed");
    }
    EVP_MD_CTX_free(ctx);
    return hex_digest(digest, len);
}

std::map<std::string, std::string> load_generated_summaries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read generated summaries file: " + path.string());
    }
    std::map<std::string, std::string> summaries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            const auto id = j.at("review_id").get<std::string>();
            if (!summaries.emplace(id, j.at("summary").get<std::string>()).second) {
                throw Error("duplicate generated summary for review " + id);
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error("generated summaries " + path.string() + " line " +
                        std::to_string(line_no) + ": " + e.what());
        }
    }
    return summaries;
}

RunResult run_pipeline(const RunConfig& config) {
    config.validate();
    const auto reviews = load_sorted_reviews(config.reviews_path);
    const auto rules = load_rules(config);

    SpanIndex span_index;
    std::optional<Lexicon> lexicon;
    if (!config.spans_path.empty()) {
        span_index = SpanIndex(load_span_annotations(config.spans_path));
    } else if (!config.lexicon_path.empty()) {
        lexicon = load_lexicon(config.lexicon_path);
    }

    // Spans are resolved sequentially up front so worker scheduling cannot
    // influence any artifact byte.
    std::vector<std::vector<std::vector<PicoSpan>>> spans_per_review(reviews.size());
    std::vector<SpanAnnotation> tagged;
    for (std::size_t i = 0; i < reviews.size(); ++i) {
        const auto& review = reviews[i];
        auto& spans = spans_per_review[i];
        spans.resize(review.abstracts.size());
        for (std::size_t d = 0; d < review.abstracts.size(); ++d) {
            if (lexicon) {
                spans[d] = lexicon_tag(clean_document(review.abstracts[d], rules), *lexicon);
                tagged.push_back({review.review_id, static_cast<int>(d), spans[d]});
            } else {
                spans[d] = span_index.lookup(review.review_id, static_cast<int>(d));
            }
        }
        if (lexicon && review.target_summary) {
            tagged.push_back({review.review_id, -1,
                              lexicon_tag(clean_document(*review.target_summary, rules), *lexicon)});
        }
    }

    WordTokenizer tokenizer;
    struct PerReview {
        std::optional<PackedInput> packed;
        std::optional<AttentionMasks> masks;
        std::string error;
    };
    std::vector<PerReview> results(reviews.size());
    const std::size_t workers = worker_count();

    if (workers > 1) {
        // Sequential vocabulary warm-up: interning order, and therefore every
        // token id, stays independent of the worker count.
        for (std::size_t i = 0; i < reviews.size(); ++i) {
            try {
                const auto docs =
                    prepare_documents(reviews[i], spans_per_review[i], config.pack, rules);
                for (const auto& doc : docs) {
                    tokenizer.tokenize(doc);
                }
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    }

    const auto work = [&](std::size_t i) {
        if (!results[i].error.empty()) {
            return;
        }
        try {
            auto packed = pack_input(reviews[i], spans_per_review[i], config.pack, tokenizer, rules);
            auto masks = build_masks(packed, config.attention);
            results[i].packed = std::move(packed);
            results[i].masks = std::move(masks);
        } catch (const std::exception& e) {
            results[i].error = e.what();
        }
    };
    if (workers <= 1) {
        for (std::size_t i = 0; i < reviews.size(); ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const std::size_t spawn = std::min(workers, reviews.size());
        pool.reserve(spawn);
        for (std::size_t t = 0; t < spawn; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < results.size();
                     i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    std::filesystem::create_directories(config.output_dir);
    RunResult run;
    std::vector<PackedInput> packed;
    std::vector<ReviewMasks> masks;
    for (std::size_t i = 0; i < reviews.size(); ++i) {
        if (results[i].packed) {
            run.packed_ids.push_back(reviews[i].review_id);
            masks.push_back({reviews[i].review_id, std::move(*results[i].masks)});
            packed.push_back(std::move(*results[i].packed));
        } else {
            run.failed_ids.push_back(reviews[i].review_id);
            std::cerr << "review " << reviews[i].review_id << " failed: " << results[i].error
                      << '\n';
        }
    }

    std::vector<std::string> artifacts{"packed.jsonl", "masks.jsonl", "vocab.json"};
    save_packed_inputs(config.output_dir / "packed.jsonl", packed);
    save_masks(config.output_dir / "masks.jsonl", masks);
    tokenizer.save_vocab(config.output_dir / "vocab.json");
    if (config.replace_padded_ids) {
        auto padded = packed;
        for (std::size_t i = 0; i < padded.size(); ++i) {
            padded[i].token_ids = entsumm::replace_padded_ids(padded[i].token_ids, masks[i].masks);
        }
        save_packed_inputs(config.output_dir / "packed_padded.jsonl", padded);
        artifacts.push_back("packed_padded.jsonl");
    }
    if (lexicon) {
        save_span_annotations(config.output_dir / "tagged_spans.jsonl", tagged);
        artifacts.push_back("tagged_spans.jsonl");
    }

    std::sort(artifacts.begin(), artifacts.end());
    nlohmann::json manifest;
    manifest["artifacts"] = nlohmann::json::array();
    for (const auto& name : artifacts) {
        manifest["artifacts"].push_back(
            {{"path", name}, {"sha256", sha256_file(config.output_dir / name)}});
    }
    run.manifest_path = config.output_dir / "manifest.json";
    write_text(run.manifest_path, manifest.dump(2) + "\n");
    return run;
}

EvaluateResult evaluate(const RunConfig& config) {
    config.validate();
    if (config.generated_path.empty()) {
        throw Error("evaluate needs a generated summaries file");
    }
    const auto reviews = load_sorted_reviews(config.reviews_path);
    const auto rules = load_rules(config);
    const auto generated = load_generated_summaries(config.generated_path);

    std::set<std::string> known_ids;
    for (const auto& r : reviews) {
        known_ids.insert(r.review_id);
    }
    for (const auto& entry : generated) {
        if (known_ids.count(entry.first) == 0) {
            throw Error("generated summary for unknown review " + entry.first);
        }
    }

    std::map<std::string, DirectionScores> directions;
    if (!config.directions_path.empty()) {
        for (auto& s : load_direction_scores(config.directions_path)) {
            if (known_ids.count(s.review_id) == 0) {
                throw Error("direction scores for unknown review " + s.review_id);
            }
            directions[s.review_id] = std::move(s);
        }
    }
    std::map<std::string, double> bertscores;
    if (!config.bertscore_path.empty()) {
        bertscores = load_bertscores(config.bertscore_path);
        for (const auto& entry : bertscores) {
            if (known_ids.count(entry.first) == 0) {
                throw Error("bertscore for unknown review " + entry.first);
            }
        }
    }

    EvaluateResult result;
    if (config.directions_path.empty()) {
        result.warnings.push_back(
            "direction scores not provided; delta_ei and delta_ei_f1 columns are absent");
    }

    WordTokenizer tokenizer;
    std::vector<ReviewMetrics> rows;
    std::size_t without_target = 0;
    for (const auto& review : reviews) {
        if (!review.target_summary) {
            ++without_target;
            continue;
        }
        const auto it = generated.find(review.review_id);
        if (it == generated.end()) {
            throw Error("no generated summary for review " + review.review_id);
        }
        const std::string target = config.clean_targets
                                       ? clean_document(*review.target_summary, rules)
                                       : *review.target_summary;
        const std::string& cand = it->second;
        ReviewMetrics m;
        m.review_id = review.review_id;
        m.r1 = rouge_n(cand, target, 1, tokenizer);
        m.r2 = rouge_n(cand, target, 2, tokenizer);
        m.rl = rouge_l(cand, target, tokenizer);
        std::vector<std::string> sources;
        sources.reserve(review.abstracts.size());
        for (const auto& a : review.abstracts) {
            sources.push_back(clean_document(a, rules));
        }
        m.extr = extractiveness(cand, sources, tokenizer);
        const auto dir = directions.find(review.review_id);
        if (dir != directions.end()) {
            m.delta_ei = delta_ei(dir->second.target, dir->second.generated);
            m.target_label = argmax_direction(dir->second.target);
            m.generated_label = argmax_direction(dir->second.generated);
            m.bertscore = dir->second.bertscore;
        }
        const auto bert = bertscores.find(review.review_id);
        if (bert != bertscores.end()) {
            m.bertscore = bert->second;
        }
        rows.push_back(std::move(m));
    }
    if (rows.empty()) {
        throw Error("no reviews with target summaries to evaluate");
    }
    if (without_target > 0) {
        result.warnings.push_back(std::to_string(without_target) +
                                  " reviews without target summaries were skipped");
    }

    result.metrics = MetricsReport::aggregate(std::move(rows));
    result.metrics.extractiveness_column = config.extractiveness_metric;
    if (!config.annotations_path.empty()) {
        result.eval_table = aggregate_annotations(load_annotations(config.annotations_path));
    }

    std::filesystem::create_directories(config.output_dir);
    for (const auto& format : config.report_formats) {
        if (format == "json") {
            write_text(config.output_dir / "metrics_report.json", result.metrics.to_json());
        } else if (format == "csv") {
            write_text(config.output_dir / "metrics_report.csv", result.metrics.to_csv());
            if (result.eval_table) {
                write_text(config.output_dir / "eval_table.csv", result.eval_table->to_csv());
            }
        } else if (format == "txt") {
            if (result.eval_table) {
                write_text(config.output_dir / "eval_table.txt", result.eval_table->to_text());
            }
        }
    }
    return result;
}

}  // namespace entsumm
