// SPDX-License-Identifier: Apache-2.0

#include "entsumm/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

double f1_of(double p, double r) {
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::string stem_token(std::string t) {
    const auto ends_with = [&](std::string_view suffix) {
        return t.size() > suffix.size() + 2 &&
               t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with("ing")) {
        t.erase(t.size() - 3);
    } else if (ends_with("ed") || ends_with("es")) {
        t.erase(t.size() - 2);
    } else if (ends_with("s")) {
        t.erase(t.size() - 1);
    }
    return t;
}

std::vector<std::string> score_tokens(std::string_view text, const Tokenizer& tokenizer,
                                      bool stem) {
    auto tokens = tokenizer.split(text);
    for (auto& t : tokens) {
        for (auto& c : t) {
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (stem) {
            t = stem_token(std::move(t));
        }
    }
    return tokens;
}

// N-gram key: tokens joined on a separator that split() never emits.
std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                          std::size_t n) {
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            key += '\x1f';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) {
        return 0;
    }
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::array<double, 3> to_array(const DirectionDistribution& d) {
    return {d.increases, d.decreases, d.no_change};
}

std::size_t count_cues(std::string_view text, const std::vector<std::string_view>& cues) {
    std::string lower(text);
    for (auto& c : lower) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    std::size_t total = 0;
    for (auto cue : cues) {
        std::size_t pos = 0;
        while ((pos = lower.find(cue, pos)) != std::string::npos) {
            ++total;
            pos += cue.size();
        }
    }
    return total;
}

DirectionDistribution parse_distribution(const nlohmann::json& j) {
    const auto arr = j.get<std::vector<double>>();
    if (arr.size() != 3) {
        throw Error("direction distribution must have exactly 3 entries");
    }
    DirectionDistribution d{arr[0], arr[1], arr[2]};
    d.validate();
    return d;
}

std::string format_cell(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

std::string format_cell(const std::optional<double>& v) {
    return v ? format_cell(*v) : std::string();
}

}  // namespace

RougeScore rouge_n(std::string_view candidate, std::string_view reference, std::size_t n,
                   const Tokenizer& tokenizer, bool stem) {
    if (n < 1) {
        throw Error("rouge_n: n must be at least 1");
    }
    const auto cand = score_tokens(candidate, tokenizer, stem);
    const auto ref = score_tokens(reference, tokenizer, stem);
    const auto cand_counts = ngram_counts(cand, n);
    const auto ref_counts = ngram_counts(ref, n);
    const std::size_t cand_total = cand.size() >= n ? cand.size() - n + 1 : 0;
    const std::size_t ref_total = ref.size() >= n ? ref.size() - n + 1 : 0;
    std::size_t overlap = 0;
    for (const auto& [gram, count] : cand_counts) {
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
            overlap += std::min(count, it->second);
        }
    }
    RougeScore score;
    score.precision = cand_total > 0 ? static_cast<double>(overlap) / cand_total : 0.0;
    score.recall = ref_total > 0 ? static_cast<double>(overlap) / ref_total : 0.0;
    score.f1 = f1_of(score.precision, score.recall);
    return score;
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference,
                   const Tokenizer& tokenizer, bool stem) {
    const auto cand = score_tokens(candidate, tokenizer, stem);
    const auto ref = score_tokens(reference, tokenizer, stem);
    const auto lcs = static_cast<double>(lcs_length(cand, ref));
    RougeScore score;
    score.precision = cand.empty() ? 0.0 : lcs / static_cast<double>(cand.size());
    score.recall = ref.empty() ? 0.0 : lcs / static_cast<double>(ref.size());
    score.f1 = f1_of(score.precision, score.recall);
    return score;
}

ExtractivenessScore extractiveness(std::string_view summary, const std::vector<std::string>& sources,
                                   const Tokenizer& tokenizer) {
    if (sources.empty()) {
        throw Error("extractiveness: no source documents");
    }
    std::string joined;
    for (const auto& s : sources) {
        if (!joined.empty()) {
            joined += ' ';
        }
        joined += s;
    }
    ExtractivenessScore score;
    score.r1 = rouge_n(summary, joined, 1, tokenizer);
    score.r2 = rouge_n(summary, joined, 2, tokenizer);
    score.rl = rouge_l(summary, joined, tokenizer);
    return score;
}

DirectionLabel direction_label_from_string(std::string_view s) {
    if (s == "increases") {
        return DirectionLabel::Increases;
    }
    if (s == "decreases") {
        return DirectionLabel::Decreases;
    }
    if (s == "no_change") {
        return DirectionLabel::NoChange;
    }
    throw Error("unknown direction label '" + std::string(s) +
                "' (expected increases, decreases, or no_change)");
}

std::string_view to_string(DirectionLabel label) {
    switch (label) {
    case DirectionLabel::Increases:
        return "increases";
    case DirectionLabel::Decreases:
        return "decreases";
    case DirectionLabel::NoChange:
        return "no_change";
    }
    throw Error("invalid direction label value");
}

void DirectionDistribution::validate(double eps) const {
    for (double p : to_array(*this)) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw Error("direction distribution entries must be nonnegative");
        }
    }
    const double sum = increases + decreases + no_change;
    if (std::abs(sum - 1.0) > eps) {
        throw Error("direction distribution sums to " + std::to_string(sum) + ", expected 1");
    }
}

DirectionLabel argmax_direction(const DirectionDistribution& dist) {
    const auto p = to_array(dist);
    const double best = std::max({p[0], p[1], p[2]});
    const int hits = (p[0] == best) + (p[1] == best) + (p[2] == best);
    if (hits > 1) {
        return DirectionLabel::NoChange;
    }
    if (p[0] == best) {
        return DirectionLabel::Increases;
    }
    return p[1] == best ? DirectionLabel::Decreases : DirectionLabel::NoChange;
}

double total_variation(const DirectionDistribution& a, const DirectionDistribution& b) {
    const auto pa = to_array(a);
    const auto pb = to_array(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        sum += std::abs(pa[i] - pb[i]);
    }
    return 0.5 * sum;
}

double delta_ei(const DirectionDistribution& target, const DirectionDistribution& generated,
                DirectionDistance distance) {
    target.validate();
    generated.validate();
    return distance(target, generated);
}

double delta_ei_f1(const std::vector<DirectionLabel>& target_labels,
                   const std::vector<DirectionLabel>& generated_labels) {
    if (target_labels.empty()) {
        throw Error("delta_ei_f1: no labels");
    }
    if (target_labels.size() != generated_labels.size()) {
        throw Error("delta_ei_f1: label list lengths differ");
    }
    const std::array<DirectionLabel, 3> classes{DirectionLabel::Increases,
                                                DirectionLabel::Decreases,
                                                DirectionLabel::NoChange};
    double sum = 0.0;
    std::size_t included = 0;
    for (auto cls : classes) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < target_labels.size(); ++i) {
            const bool gold = target_labels[i] == cls;
            const bool pred = generated_labels[i] == cls;
            tp += gold && pred;
            fp += !gold && pred;
            fn += gold && !pred;
        }
        if (tp + fp + fn == 0) {
            continue;  // class absent from both sides
        }
        const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        sum += f1_of(p, r);
        ++included;
    }
    return included > 0 ? sum / static_cast<double>(included) : 0.0;
}

DirectionDistribution classify_direction_cues(std::string_view text) {
    static const std::vector<std::string_view> kIncrease{
        "increase", "improve", "higher", "greater", "benefit", "more effective"};
    static const std::vector<std::string_view> kDecrease{
        "decrease", "reduce", "lower", "fewer", "worsen", "less effective"};
    static const std::vector<std::string_view> kNoChange{
        "no difference", "no effect", "no evidence", "no significant", "little or no",
        "uncertain", "unclear", "no major impact"};
    const double inc = static_cast<double>(count_cues(text, kIncrease));
    const double dec = static_cast<double>(count_cues(text, kDecrease));
    const double non = static_cast<double>(count_cues(text, kNoChange));
    const double total = inc + dec + non;
    if (total == 0.0) {
        return {0.0, 0.0, 1.0};
    }
    return {inc / total, dec / total, non / total};
}

std::vector<DirectionScores> load_direction_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read direction scores file: " + path.string());
    }
    std::vector<DirectionScores> scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            DirectionScores s;
            s.review_id = j.at("review_id").get<std::string>();
            s.target = parse_distribution(j.at("target_direction"));
            s.generated = parse_distribution(j.at("generated_direction"));
            if (j.contains("bertscore")) {
                s.bertscore = j.at("bertscore").get<double>();
            }
            scores.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw Error("direction scores " + path.string() + " line " +
                        std::to_string(line_no) + ": " + e.what());
        }
    }
    return scores;
}

void save_direction_scores(const std::filesystem::path& path,
                           const std::vector<DirectionScores>& scores) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write direction scores file: " + path.string());
    }
    for (const auto& s : scores) {
        nlohmann::json j{
            {"review_id", s.review_id},
            {"target_direction", {s.target.increases, s.target.decreases, s.target.no_change}},
            {"generated_direction",
             {s.generated.increases, s.generated.decreases, s.generated.no_change}}};
        if (s.bertscore) {
            j["bertscore"] = *s.bertscore;
        }
        out << j.dump() << '\n';
    }
}

MetricsReport MetricsReport::aggregate(std::vector<ReviewMetrics> reviews) {
    if (reviews.empty()) {
        throw Error("metrics aggregation needs at least one review");
    }
    MetricsReport report;
    report.reviews = std::move(reviews);
    const double n = static_cast<double>(report.reviews.size());
    double bert_sum = 0.0;
    std::size_t bert_count = 0;
    double dei_sum = 0.0;
    std::size_t dei_count = 0;
    std::vector<DirectionLabel> gold;
    std::vector<DirectionLabel> pred;
    const auto add = [](RougeScore& acc, const RougeScore& s) {
        acc.precision += s.precision;
        acc.recall += s.recall;
        acc.f1 += s.f1;
    };
    for (const auto& r : report.reviews) {
        add(report.mean_r1, r.r1);
        add(report.mean_r2, r.r2);
        add(report.mean_rl, r.rl);
        add(report.mean_extr.r1, r.extr.r1);
        add(report.mean_extr.r2, r.extr.r2);
        add(report.mean_extr.rl, r.extr.rl);
        if (r.bertscore) {
            bert_sum += *r.bertscore;
            ++bert_count;
        }
        if (r.delta_ei) {
            dei_sum += *r.delta_ei;
            ++dei_count;
        }
        if (r.target_label && r.generated_label) {
            gold.push_back(*r.target_label);
            pred.push_back(*r.generated_label);
        }
    }
    const auto scale = [n](RougeScore& s) {
        s.precision /= n;
        s.recall /= n;
        s.f1 /= n;
    };
    scale(report.mean_r1);
    scale(report.mean_r2);
    scale(report.mean_rl);
    scale(report.mean_extr.r1);
    scale(report.mean_extr.r2);
    scale(report.mean_extr.rl);
    if (bert_count > 0) {
        report.mean_bertscore = bert_sum / static_cast<double>(bert_count);
    }
    if (dei_count > 0) {
        report.mean_delta_ei = dei_sum / static_cast<double>(dei_count);
    }
    if (!gold.empty()) {
        report.corpus_delta_ei_f1 = delta_ei_f1(gold, pred);
    }
    return report;
}

std::string MetricsReport::to_csv() const {
    const auto pick = [this](const RougeScore& s) {
        if (extractiveness_column == "f1") {
            return s.f1;
        }
        if (extractiveness_column == "precision") {
            return s.precision;
        }
        if (extractiveness_column == "recall") {
            return s.recall;
        }
        throw Error("unknown extractiveness column '" + extractiveness_column +
                    "' (expected f1, precision, or recall)");
    };
    std::ostringstream out;
    out << "review_id,r1,r2,rl,bertscore,delta_ei,delta_ei_f1,"
           "extractive_r1,extractive_r2,extractive_rl\n";
    for (const auto& r : reviews) {
        out << r.review_id << ',' << format_cell(r.r1.f1) << ',' << format_cell(r.r2.f1) << ','
            << format_cell(r.rl.f1) << ',' << format_cell(r.bertscore) << ','
            << format_cell(r.delta_ei) << ",," << format_cell(pick(r.extr.r1)) << ','
            << format_cell(pick(r.extr.r2)) << ',' << format_cell(pick(r.extr.rl)) << '\n';
    }
    out << "mean," << format_cell(mean_r1.f1) << ',' << format_cell(mean_r2.f1) << ','
        << format_cell(mean_rl.f1) << ',' << format_cell(mean_bertscore) << ','
        << format_cell(mean_delta_ei) << ',' << format_cell(corpus_delta_ei_f1) << ','
        << format_cell(pick(mean_extr.r1)) << ',' << format_cell(pick(mean_extr.r2)) << ','
        << format_cell(pick(mean_extr.rl)) << '\n';
    return out.str();
}

std::string MetricsReport::to_json() const {
    const auto rouge_json = [](const RougeScore& s) {
        return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
    };
    nlohmann::json j;
    j["reviews"] = nlohmann::json::array();
    for (const auto& r : reviews) {
        nlohmann::json row{{"review_id", r.review_id},
                           {"r1", rouge_json(r.r1)},
                           {"r2", rouge_json(r.r2)},
                           {"rl", rouge_json(r.rl)},
                           {"extractiveness",
                            {{"r1", rouge_json(r.extr.r1)},
                             {"r2", rouge_json(r.extr.r2)},
                             {"rl", rouge_json(r.extr.rl)}}}};
        if (r.bertscore) {
            row["bertscore"] = *r.bertscore;
        }
        if (r.delta_ei) {
            row["delta_ei"] = *r.delta_ei;
        }
        j["reviews"].push_back(std::move(row));
    }
    nlohmann::json mean{{"r1", rouge_json(mean_r1)},
                        {"r2", rouge_json(mean_r2)},
                        {"rl", rouge_json(mean_rl)},
                        {"extractiveness",
                         {{"r1", rouge_json(mean_extr.r1)},
                          {"r2", rouge_json(mean_extr.r2)},
                          {"rl", rouge_json(mean_extr.rl)}}}};
    if (mean_bertscore) {
        mean["bertscore"] = *mean_bertscore;
    }
    if (mean_delta_ei) {
        mean["delta_ei"] = *mean_delta_ei;
    }
    if (corpus_delta_ei_f1) {
        mean["delta_ei_f1"] = *corpus_delta_ei_f1;
    }
    j["mean"] = std::move(mean);
    return j.dump(2) + "\n";
}

}  // namespace entsumm
