// SPDX-License-Identifier: Apache-2.0

#include "entsumm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

const std::set<std::string> kRuleNames = {"hyperlink", "trial_identifier", "funding", "copyright",
                                          "publication_record"};

// Removal can juxtapose text that forms a fresh match, so cleaning iterates
// until nothing changes.
constexpr int kMaxCleanPasses = 8;

long long round_half_up(double v) {
    return static_cast<long long>(std::floor(v + 0.5));
}

}  // namespace

const CleaningRules& CleaningRules::defaults() {
    static const CleaningRules rules = [] {
        CleaningRules r;
        r.version = 1;
        r.rules = {
            {"hyperlink", R"((?:https?://|www\.)[^\s]+)", ""},
            {"trial_identifier",
             R"((?:(?:trial|study|clinical\s+trials?)\s+registration(?:\s+(?:number|no\.?))?s?\s*:?[^.]*(?:\.|$))|(?:\b(?:NCT|ISRCTN|ACTRN|EUCTR|UMIN|ChiCTR|DRKS)[-\s]?\d[\d-]*\b))",
             ""},
            {"funding",
             R"((?:\b(?:funded|supported|sponsored)\s+by\b|\bfunding(?:\s+sources?)?\s*:)[^.]*(?:\.|$))",
             ""},
            {"copyright", R"((?:©|\(c\)\s|\bcopyright\b)[^.]*(?:\.|$))", ""},
            {"publication_record",
             R"((?:\bpublished\s+in\b[^.]*(?:\.|$))|(?:\bdoi\s*:?\s*10\.\S+))", ""},
        };
        r.validate();
        return r;
    }();
    return rules;
}

void CleaningRules::validate() const {
    std::set<std::string> seen;
    for (const auto& rule : rules) {
        if (kRuleNames.find(rule.name) == kRuleNames.end()) {
            throw Error("cleaning rule '" + rule.name + "' is not one of the five metadata categories");
        }
        if (!rule.replacement.empty()) {
            throw Error("cleaning rule '" + rule.name + "' must have an empty replacement");
        }
        try {
            std::regex probe(rule.pattern, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            throw Error("cleaning rule '" + rule.name + "' has a malformed pattern: " + e.what());
        }
        seen.insert(rule.name);
    }
    if (seen != kRuleNames) {
        throw Error("cleaning rules must cover all five metadata categories");
    }
}

CleaningRules CleaningRules::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read cleaning rules file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed cleaning rules file " + path.string() + ": " + e.what());
    }
    CleaningRules rules;
    rules.version = j.value("version", 1);
    for (const auto& entry : j.at("rules")) {
        rules.rules.push_back({entry.at("name").get<std::string>(),
                               entry.at("pattern").get<std::string>(),
                               entry.value("replacement", "")});
    }
    rules.validate();
    return rules;
}

void CleaningRules::save(const std::filesystem::path& path) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rule : rules) {
        arr.push_back({{"name", rule.name}, {"pattern", rule.pattern}, {"replacement", rule.replacement}});
    }
    nlohmann::json j{{"version", version}, {"rules", arr}};
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write cleaning rules file: " + path.string());
    }
    out << j.dump(2) << '\n';
}

std::string clean_document(std::string_view raw, const CleaningRules& rules) {
    std::vector<std::regex> compiled;
    compiled.reserve(rules.rules.size());
    for (const auto& rule : rules.rules) {
        compiled.emplace_back(rule.pattern, std::regex::ECMAScript | std::regex::icase);
    }
    std::string current(raw);
    for (int pass = 0; pass < kMaxCleanPasses; ++pass) {
        std::string next = current;
        for (std::size_t i = 0; i < compiled.size(); ++i) {
            next = std::regex_replace(next, compiled[i], rules.rules[i].replacement);
        }
        if (next == current) {
            break;
        }
        current = std::move(next);
    }
    return current;
}

std::string concat_with_separators(const std::vector<std::string>& docs,
                                   std::string_view separator) {
    if (docs.empty()) {
        throw Error("concat_with_separators: review has no abstracts");
    }
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out += docs[i];
        out += ' ';
        out += separator;
        if (i + 1 < docs.size()) {
            out += ' ';
        }
    }
    return out;
}

std::vector<Review> load_reviews(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read review file: " + path.string());
    }
    std::vector<Review> reviews;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            Review r;
            r.review_id = j.at("review_id").get<std::string>();
            if (r.review_id.empty()) {
                throw Error("review_id must be nonempty");
            }
            if (j.contains("target") && !j.at("target").is_null()) {
                r.target_summary = j.at("target").get<std::string>();
            }
            r.abstracts = j.at("abstracts").get<std::vector<std::string>>();
            if (j.contains("objectives") && !j.at("objectives").is_null()) {
                r.objectives = j.at("objectives").get<std::string>();
            }
            reviews.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error("reviews " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
        }
    }
    return reviews;
}

void save_reviews(const std::filesystem::path& path, const std::vector<Review>& reviews) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write review file: " + path.string());
    }
    for (const auto& r : reviews) {
        nlohmann::json j;
        j["review_id"] = r.review_id;
        if (r.target_summary) {
            j["target"] = *r.target_summary;
        }
        j["abstracts"] = r.abstracts;
        if (r.objectives) {
            j["objectives"] = *r.objectives;
        }
        out << j.dump() << '\n';
    }
}

StatsReport dataset_stats(const std::vector<Review>& reviews, const SpanIndex& spans,
                          Tokenizer& tokenizer, const CleaningRules& rules) {
    if (reviews.empty()) {
        throw Error("dataset_stats: empty review list");
    }
    StatsReport report;
    report.sample_count = reviews.size();

    double input_tokens = 0.0;
    double summary_tokens = 0.0;
    double input_spans = 0.0;
    double summary_spans = 0.0;
    std::size_t with_summary = 0;

    for (const auto& review : reviews) {
        std::vector<std::string> cleaned;
        cleaned.reserve(review.abstracts.size());
        for (const auto& doc : review.abstracts) {
            cleaned.push_back(clean_document(doc, rules));
        }
        if (!cleaned.empty()) {
            const auto joined = concat_with_separators(cleaned, special::kDocSepText);
            input_tokens += static_cast<double>(tokenizer.tokenize(joined).size());
        }
        if (review.target_summary) {
            summary_tokens += static_cast<double>(tokenizer.tokenize(*review.target_summary).size());
            summary_spans += static_cast<double>(spans.lookup(review.review_id, -1).size());
            ++with_summary;
        }
        for (std::size_t d = 0; d < review.abstracts.size(); ++d) {
            input_spans += static_cast<double>(spans.lookup(review.review_id, static_cast<int>(d)).size());
        }
    }

    const auto n = static_cast<double>(reviews.size());
    report.avg_input_length = input_tokens / n;
    report.avg_pico_spans_input = input_spans / n;
    if (with_summary > 0) {
        report.avg_summary_length = summary_tokens / static_cast<double>(with_summary);
        report.avg_pico_spans_summary = summary_spans / static_cast<double>(with_summary);
    }
    return report;
}

std::string StatsReport::to_json() const {
    nlohmann::json j;
    j["sample_count"] = sample_count;
    j["avg_input_length"] = round_half_up(avg_input_length);
    j["avg_pico_spans_input"] = round_half_up(avg_pico_spans_input);
    if (avg_summary_length) {
        j["avg_summary_length"] = round_half_up(*avg_summary_length);
    }
    if (avg_pico_spans_summary) {
        j["avg_pico_spans_summary"] = round_half_up(*avg_pico_spans_summary);
    }
    return j.dump(2);
}

std::string StatsReport::to_table() const {
    std::ostringstream out;
    const auto row = [&out](std::string_view label, const std::string& value) {
        out << label;
        for (std::size_t i = label.size(); i < 30; ++i) {
            out << ' ';
        }
        out << value << '\n';
    };
    row("# samples", std::to_string(sample_count));
    row("Avg. input length", std::to_string(round_half_up(avg_input_length)));
    row("Avg. summary length",
        avg_summary_length ? std::to_string(round_half_up(*avg_summary_length)) : "n/a");
    row("Avg. # PICO spans in input", std::to_string(round_half_up(avg_pico_spans_input)));
    row("Avg. # PICO spans in summary",
        avg_pico_spans_summary ? std::to_string(round_half_up(*avg_pico_spans_summary)) : "n/a");
    return out.str();
}

}  // namespace entsumm
