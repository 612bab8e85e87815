// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entsumm/attention.hpp"
#include "entsumm/corpus.hpp"
#include "entsumm/error.hpp"
#include "entsumm/humaneval.hpp"
#include "entsumm/metrics.hpp"
#include "entsumm/packing.hpp"
#include "entsumm/pipeline.hpp"
#include "entsumm/spans.hpp"
#include "entsumm/tokenizer.hpp"

namespace {

using namespace entsumm;

CleaningRules rules_from(const std::string& path) {
    return path.empty() ? CleaningRules::defaults() : CleaningRules::load(path);
}

std::vector<Review> sorted_reviews(const std::string& path) {
    auto reviews = load_reviews(path);
    std::sort(reviews.begin(), reviews.end(),
              [](const Review& a, const Review& b) { return a.review_id < b.review_id; });
    return reviews;
}

// Per-document span lists for one review, from either source.
std::vector<std::vector<PicoSpan>> spans_for(const Review& review, const SpanIndex& index,
                                             const Lexicon* lexicon,
                                             const CleaningRules& rules) {
    std::vector<std::vector<PicoSpan>> spans(review.abstracts.size());
    for (std::size_t d = 0; d < review.abstracts.size(); ++d) {
        if (lexicon != nullptr) {
            spans[d] = lexicon_tag(clean_document(review.abstracts[d], rules), *lexicon);
        } else {
            spans[d] = index.lookup(review.review_id, static_cast<int>(d));
        }
    }
    return spans;
}

int cmd_clean(const std::string& reviews_path, const std::string& rules_path,
              const std::string& out_path, bool clean_targets) {
    const auto rules = rules_from(rules_path);
    auto reviews = sorted_reviews(reviews_path);
    for (auto& r : reviews) {
        for (auto& a : r.abstracts) {
            a = clean_document(a, rules);
        }
        if (clean_targets && r.target_summary) {
            r.target_summary = clean_document(*r.target_summary, rules);
        }
    }
    save_reviews(out_path, reviews);
    std::cout << "cleaned " << reviews.size() << " reviews -> " << out_path << '\n';
    return 0;
}

int cmd_tag(const std::string& reviews_path, const std::string& lexicon_path,
            const std::string& rules_path, const std::string& out_path) {
    const auto rules = rules_from(rules_path);
    const auto lexicon = load_lexicon(lexicon_path);
    const auto reviews = sorted_reviews(reviews_path);
    std::vector<SpanAnnotation> annotations;
    for (const auto& r : reviews) {
        for (std::size_t d = 0; d < r.abstracts.size(); ++d) {
            annotations.push_back({r.review_id, static_cast<int>(d),
                                   lexicon_tag(clean_document(r.abstracts[d], rules), lexicon)});
        }
        if (r.target_summary) {
            annotations.push_back(
                {r.review_id, -1, lexicon_tag(clean_document(*r.target_summary, rules), lexicon)});
        }
    }
    save_span_annotations(out_path, annotations);
    std::cout << "tagged " << reviews.size() << " reviews -> " << out_path << '\n';
    return 0;
}

int cmd_pack(const std::string& reviews_path, const std::string& spans_path,
             const std::string& lexicon_path, const std::string& rules_path,
             const PackConfig& pack, const std::string& out_dir) {
    const auto rules = rules_from(rules_path);
    const auto reviews = sorted_reviews(reviews_path);
    SpanIndex index;
    std::optional<Lexicon> lexicon;
    if (!spans_path.empty()) {
        index = SpanIndex(load_span_annotations(spans_path));
    } else if (!lexicon_path.empty()) {
        lexicon = load_lexicon(lexicon_path);
    }
    WordTokenizer tokenizer;
    std::vector<PackedInput> packed;
    packed.reserve(reviews.size());
    for (const auto& r : reviews) {
        packed.push_back(pack_input(r, spans_for(r, index, lexicon ? &*lexicon : nullptr, rules),
                                    pack, tokenizer, rules));
    }
    std::filesystem::create_directories(out_dir);
    const auto out = std::filesystem::path(out_dir);
    save_packed_inputs(out / "packed.jsonl", packed);
    tokenizer.save_vocab(out / "vocab.json");
    std::cout << "packed " << packed.size() << " reviews -> " << (out / "packed.jsonl").string()
              << '\n';
    return 0;
}

int cmd_mask(const std::string& packed_path, const AttentionConfig& config,
             const std::string& out_path) {
    const auto packed = load_packed_inputs(packed_path);
    std::vector<ReviewMasks> masks;
    masks.reserve(packed.size());
    for (const auto& p : packed) {
        masks.push_back({p.review_id, build_masks(p, config)});
    }
    save_masks(out_path, masks);
    std::cout << "masked " << masks.size() << " inputs -> " << out_path << '\n';
    return 0;
}

int cmd_attend(const std::string& packed_path, const std::string& review_id,
               const AttentionConfig& config, std::size_t head_dim, unsigned seed,
               const std::string& dump_dense) {
    const auto packed = load_packed_inputs(packed_path);
    if (packed.empty()) {
        throw Error("no packed inputs in " + packed_path);
    }
    const PackedInput* chosen = &packed.front();
    if (!review_id.empty()) {
        const auto it = std::find_if(packed.begin(), packed.end(), [&](const PackedInput& p) {
            return p.review_id == review_id;
        });
        if (it == packed.end()) {
            throw Error("review " + review_id + " not found in " + packed_path);
        }
        chosen = &*it;
    }
    const auto masks = build_masks(*chosen, config);
    const std::size_t n = chosen->token_ids.size();

    AttentionTensors t;
    t.seq_len = n;
    t.head_dim = head_dim;
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    t.q.resize(n * head_dim);
    t.k.resize(n * head_dim);
    t.v.resize(n * head_dim);
    for (auto* mat : {&t.q, &t.k, &t.v}) {
        for (auto& x : *mat) {
            x = dist(rng);
        }
    }

    const auto dense_mask = masks_to_dense(masks, config.window, n);
    const auto oracle = dense_attention_oracle(t, dense_mask);
    const auto sparse = local_global_attention(t, masks, config.window);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(oracle[i] - sparse[i]));
    }
    std::cout << "review " << chosen->review_id << ": n=" << n << " d=" << head_dim
              << " setting=" << to_string(config.setting) << " window=" << config.window
              << " max|sparse-dense|=" << max_diff << '\n';

    if (!dump_dense.empty()) {
        if (n > 64) {
            throw Error("dense dump limited to 64 tokens, input has " + std::to_string(n));
        }
        std::ofstream out(dump_dense);
        if (!out) {
            throw Error("cannot write dense dump: " + dump_dense);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                out << (dense_mask.at(i, j) ? 1 : 0) << (j + 1 < n ? ',' : '\n');
            }
        }
        std::cout << "dense attendance matrix -> " << dump_dense << '\n';
    }
    return 0;
}

int cmd_stats(const std::string& reviews_path, const std::string& spans_path,
              const std::string& rules_path, const std::string& format) {
    const auto rules = rules_from(rules_path);
    const auto reviews = sorted_reviews(reviews_path);
    SpanIndex index;
    if (!spans_path.empty()) {
        index = SpanIndex(load_span_annotations(spans_path));
    }
    WordTokenizer tokenizer;
    const auto report = dataset_stats(reviews, index, tokenizer, rules);
    std::cout << (format == "json" ? report.to_json() : report.to_table());
    return 0;
}

int cmd_eval(const std::string& config_path) {
    const auto config = RunConfig::load(config_path);
    const auto result = evaluate(config);
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    std::cout << "evaluated " << result.metrics.reviews.size() << " reviews\n"
              << "mean r1=" << result.metrics.mean_r1.f1 << " r2=" << result.metrics.mean_r2.f1
              << " rl=" << result.metrics.mean_rl.f1;
    if (result.metrics.mean_delta_ei) {
        std::cout << " delta_ei=" << *result.metrics.mean_delta_ei;
    }
    if (result.metrics.corpus_delta_ei_f1) {
        std::cout << " delta_ei_f1=" << *result.metrics.corpus_delta_ei_f1;
    }
    std::cout << "\nreports -> " << config.output_dir.string() << '\n';
    return 0;
}

int cmd_report(const std::string& annotations_path, const std::string& csv_path,
               const std::string& txt_path) {
    const auto table = aggregate_annotations(load_annotations(annotations_path));
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) {
            throw Error("cannot write " + csv_path);
        }
        out << table.to_csv();
    }
    if (!txt_path.empty()) {
        std::ofstream out(txt_path);
        if (!out) {
            throw Error("cannot write " + txt_path);
        }
        out << table.to_text();
    }
    std::cout << table.to_text();
    return 0;
}

int cmd_run(const std::string& config_path) {
    const auto config = RunConfig::load(config_path);
    const auto result = run_pipeline(config);
    std::cout << "packed " << result.packed_ids.size() << " reviews, manifest -> "
              << result.manifest_path.string() << '\n';
    if (!result.ok()) {
        std::cerr << result.failed_ids.size() << " reviews failed\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entity-aware multi-document summarization toolkit"};
    app.require_subcommand(1);

    std::string reviews_path;
    std::string spans_path;
    std::string lexicon_path;
    std::string rules_path;
    std::string out_path;
    std::string config_path;
    std::string packed_path;
    std::string review_id;
    std::string format = "table";
    std::string csv_path;
    std::string txt_path;
    std::string dump_dense;
    bool clean_targets = false;
    PackConfig pack;
    std::string input_mode = "default";
    AttentionConfig attention;
    std::string setting = "doc_sep";
    std::size_t head_dim = 8;
    unsigned seed = 42;

    auto* clean = app.add_subcommand("clean", "apply the metadata removal rules to a reviews file");
    clean->add_option("--reviews", reviews_path, "reviews JSONL")->required();
    clean->add_option("--rules", rules_path, "cleaning rules JSON (built-in defaults when omitted)");
    clean->add_option("--out", out_path, "output reviews JSONL")->required();
    clean->add_flag("--clean-targets", clean_targets, "also clean target summaries");

    auto* tag = app.add_subcommand("tag", "tag PICO spans with a phrase lexicon");
    tag->add_option("--reviews", reviews_path, "reviews JSONL")->required();
    tag->add_option("--lexicon", lexicon_path, "phrase<TAB>class lexicon")->required();
    tag->add_option("--rules", rules_path, "cleaning rules JSON");
    tag->add_option("--out", out_path, "output span annotations JSONL")->required();

    auto* pack_cmd = app.add_subcommand("pack", "pack reviews into budgeted token sequences");
    pack_cmd->add_option("--reviews", reviews_path, "reviews JSONL")->required();
    pack_cmd->add_option("--spans", spans_path, "span annotations JSONL");
    pack_cmd->add_option("--lexicon", lexicon_path, "lexicon fallback when no span file");
    pack_cmd->add_option("--rules", rules_path, "cleaning rules JSON");
    pack_cmd->add_option("--budget", pack.budget, "token budget");
    pack_cmd->add_option("--mode", input_mode, "default|last3");
    pack_cmd->add_option("--k", pack.k, "sentence count for last3");
    pack_cmd->add_flag("--marking,!--no-marking", pack.marking, "entity markers (on by default)");
    pack_cmd->add_flag("--redistribute", pack.redistribute_remainder,
                       "hand remainder tokens to the longest documents");
    pack_cmd->add_option("--out", out_path, "output directory")->required();

    auto* mask = app.add_subcommand("mask", "build attention masks for packed inputs");
    mask->add_option("--packed", packed_path, "packed inputs JSONL")->required();
    mask->add_option("--setting", setting,
                     "doc_sep|ent_markers|ent_markers_spans|ent_spans|ent_only");
    mask->add_option("--window", attention.window, "local window size (even)");
    mask->add_option("--out", out_path, "output masks JSONL")->required();

    auto* attend = app.add_subcommand("attend", "run the sparse kernel against the dense oracle");
    attend->add_option("--packed", packed_path, "packed inputs JSONL")->required();
    attend->add_option("--review", review_id, "review id (default: first input)");
    attend->add_option("--setting", setting,
                       "doc_sep|ent_markers|ent_markers_spans|ent_spans|ent_only");
    attend->add_option("--window", attention.window, "local window size (even)");
    attend->add_option("--head-dim", head_dim, "head dimension");
    attend->add_option("--seed", seed, "rng seed for the random tensors");
    attend->add_option("--dump-dense", dump_dense, "write the dense attendance matrix CSV (n <= 64)");

    auto* stats = app.add_subcommand("stats", "dataset statistics");
    stats->add_option("--reviews", reviews_path, "reviews JSONL")->required();
    stats->add_option("--spans", spans_path, "span annotations JSONL");
    stats->add_option("--rules", rules_path, "cleaning rules JSON");
    stats->add_option("--format", format, "table|json");

    auto* eval = app.add_subcommand("eval", "score generated summaries per the run config");
    eval->add_option("--config", config_path, "run config JSON")->required();

    std::string annotations_path;
    auto* report = app.add_subcommand("report", "aggregate human-eval annotations");
    report->add_option("--annotations", annotations_path, "annotation records JSONL")->required();
    report->add_option("--csv", csv_path, "also write the table as CSV");
    report->add_option("--txt", txt_path, "also write the aligned text table");

    auto* run = app.add_subcommand("run", "full pipeline: clean, tag, pack, mask, manifest");
    run->add_option("--config", config_path, "run config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*clean) {
            return cmd_clean(reviews_path, rules_path, out_path, clean_targets);
        }
        if (*tag) {
            return cmd_tag(reviews_path, lexicon_path, rules_path, out_path);
        }
        if (*pack_cmd) {
            pack.input_mode = entsumm::input_mode_from_string(input_mode);
            return cmd_pack(reviews_path, spans_path, lexicon_path, rules_path, pack, out_path);
        }
        if (*mask) {
            attention.setting = entsumm::attention_setting_from_string(setting);
            return cmd_mask(packed_path, attention, out_path);
        }
        if (*attend) {
            attention.setting = entsumm::attention_setting_from_string(setting);
            return cmd_attend(packed_path, review_id, attention, head_dim, seed, dump_dense);
        }
        if (*stats) {
            return cmd_stats(reviews_path, spans_path, rules_path, format);
        }
        if (*eval) {
            return cmd_eval(config_path);
        }
        if (*report) {
            return cmd_report(annotations_path, csv_path, txt_path);
        }
        if (*run) {
            return cmd_run(config_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
