// SPDX-License-Identifier: Apache-2.0

#include "entsumm/humaneval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

struct ColumnCounts {
    std::size_t records = 0;
    std::size_t pico = 0;
    std::size_t direction = 0;
    std::size_t factual = 0;
    std::size_t contradictory = 0;
    std::size_t malformed = 0;
    std::size_t no_evidence = 0;
};

}  // namespace

DirectionValue direction_value_from_string(std::string_view s) {
    if (s == "positive") {
        return DirectionValue::Positive;
    }
    if (s == "negative") {
        return DirectionValue::Negative;
    }
    if (s == "no_effect") {
        return DirectionValue::NoEffect;
    }
    if (s == "no_evidence") {
        return DirectionValue::NoEvidence;
    }
    if (s == "no_claim") {
        return DirectionValue::NoClaim;
    }
    throw Error("unknown direction value '" + std::string(s) +
                "' (expected positive, negative, no_effect, no_evidence, or no_claim)");
}

std::string_view to_string(DirectionValue value) {
    switch (value) {
    case DirectionValue::Positive:
        return "positive";
    case DirectionValue::Negative:
        return "negative";
    case DirectionValue::NoEffect:
        return "no_effect";
    case DirectionValue::NoEvidence:
        return "no_evidence";
    case DirectionValue::NoClaim:
        return "no_claim";
    }
    throw Error("invalid direction value");
}

bool factual(const AnnotationRecord& record) {
    return record.pico_aligned && record.direction_correct;
}

std::string normalize_pico_element(std::string_view element) {
    std::string out;
    out.reserve(element.size());
    bool pending_space = false;
    for (char c : element) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool pico_alignment(const std::vector<std::string>& target_set,
                    const std::vector<std::string>& generated_set,
                    const std::vector<std::string>& objectives_set) {
    std::set<std::string> allowed;
    for (const auto& e : target_set) {
        allowed.insert(normalize_pico_element(e));
    }
    for (const auto& e : objectives_set) {
        allowed.insert(normalize_pico_element(e));
    }
    std::set<std::string> generated;
    for (const auto& e : generated_set) {
        const auto norm = normalize_pico_element(e);
        if (!norm.empty()) {
            generated.insert(norm);
        }
    }
    if (generated.empty()) {
        return false;
    }
    return std::all_of(generated.begin(), generated.end(),
                       [&](const std::string& e) { return allowed.count(e) > 0; });
}

int percent_half_up(std::size_t count, std::size_t total) {
    if (total == 0) {
        throw Error("percent of an empty record set");
    }
    return static_cast<int>((200 * count + total) / (2 * total));
}

EvalTable aggregate_annotations(const std::vector<AnnotationRecord>& records) {
    if (records.empty()) {
        throw Error("no annotation records to aggregate");
    }
    std::map<std::string, ColumnCounts> by_model;
    for (const auto& r : records) {
        auto& c = by_model[r.model_id];
        ++c.records;
        c.pico += r.pico_aligned;
        c.direction += r.direction_correct;
        c.factual += factual(r);
        c.contradictory += r.contradictory;
        c.malformed += r.malformed;
        c.no_evidence += r.no_evidence();
    }
    EvalTable table;
    for (const auto& [model, c] : by_model) {
        EvalRow row;
        row.model_id = model;
        row.records = c.records;
        row.pico = percent_half_up(c.pico, c.records);
        row.direction = percent_half_up(c.direction, c.records);
        row.factual = percent_half_up(c.factual, c.records);
        row.contradictory = percent_half_up(c.contradictory, c.records);
        row.malformed = percent_half_up(c.malformed, c.records);
        row.no_evidence = percent_half_up(c.no_evidence, c.records);
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string EvalTable::to_csv() const {
    std::ostringstream out;
    out << "model_id,pico,direction,factual,contradictory,malformed,no_evidence,records\n";
    for (const auto& r : rows) {
        out << r.model_id << ',' << r.pico << ',' << r.direction << ',' << r.factual << ','
            << r.contradictory << ',' << r.malformed << ',' << r.no_evidence << ',' << r.records
            << '\n';
    }
    return out.str();
}

std::string EvalTable::to_text() const {
    const std::vector<std::string> headers{"Model",      "PICO",        "Direction",
                                           "Factual",    "Contradictory", "Malformed",
                                           "No-evidence", "Records"};
    std::size_t model_width = headers[0].size();
    for (const auto& r : rows) {
        model_width = std::max(model_width, r.model_id.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(model_width)) << headers[0];
    for (std::size_t i = 1; i < headers.size(); ++i) {
        out << "  " << std::right << std::setw(static_cast<int>(headers[i].size()))
            << headers[i];
    }
    out << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(model_width)) << r.model_id;
        const std::array<long long, 7> cells{r.pico,       r.direction, r.factual,
                                             r.contradictory, r.malformed, r.no_evidence,
                                             static_cast<long long>(r.records)};
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << "  " << std::right << std::setw(static_cast<int>(headers[i + 1].size()))
                << cells[i];
        }
        out << '\n';
    }
    return out.str();
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read annotations file: " + path.string());
    }
    std::vector<AnnotationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            AnnotationRecord r;
            r.review_id = j.at("review_id").get<std::string>();
            r.model_id = j.at("model_id").get<std::string>();
            r.pico_aligned = j.at("pico_aligned").get<bool>();
            r.direction_correct = j.at("direction_correct").get<bool>();
            r.contradictory = j.at("contradictory").get<bool>();
            r.malformed = j.at("malformed").get<bool>();
            r.target_direction =
                direction_value_from_string(j.at("target_direction").get<std::string>());
            r.generated_direction =
                direction_value_from_string(j.at("generated_direction").get<std::string>());
            if (j.contains("no_evidence") &&
                j.at("no_evidence").get<bool>() != r.no_evidence()) {
                throw Error("no_evidence flag contradicts generated_direction");
            }
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error("annotations " + path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
        } catch (const Error& e) {
            throw Error("annotations " + path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
    }
    return records;
}

void save_annotations(const std::filesystem::path& path,
                      const std::vector<AnnotationRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write annotations file: " + path.string());
    }
    for (const auto& r : records) {
        nlohmann::json j{{"review_id", r.review_id},
                         {"model_id", r.model_id},
                         {"pico_aligned", r.pico_aligned},
                         {"direction_correct", r.direction_correct},
                         {"contradictory", r.contradictory},
                         {"malformed", r.malformed},
                         {"no_evidence", r.no_evidence()},
                         {"target_direction", std::string(to_string(r.target_direction))},
                         {"generated_direction", std::string(to_string(r.generated_direction))}};
        out << j.dump() << '\n';
    }
}

}  // namespace entsumm
