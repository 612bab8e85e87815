// SPDX-License-Identifier: Apache-2.0

#include "entsumm/spans.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

constexpr std::string_view kOpen = "<ent>";
constexpr std::string_view kClose = "</ent>";

bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

char ascii_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool iequal_at(std::string_view text, std::size_t pos, std::string_view phrase) {
    if (pos + phrase.size() > text.size()) {
        return false;
    }
    for (std::size_t i = 0; i < phrase.size(); ++i) {
        if (ascii_lower(text[pos + i]) != ascii_lower(phrase[i])) {
            return false;
        }
    }
    return true;
}

}  // namespace

PicoClass pico_class_from_char(char c) {
    switch (c) {
        case 'P': return PicoClass::P;
        case 'I': return PicoClass::I;
        case 'O': return PicoClass::O;
        default: throw Error(std::string("unknown PICO class '") + c + "'");
    }
}

std::vector<PicoSpan> normalize_spans(std::vector<PicoSpan> spans, std::size_t text_length) {
    for (const auto& s : spans) {
        if (s.start >= s.end) {
            throw Error("invalid span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                        "): start must precede end");
        }
        if (s.end > text_length) {
            throw Error("span end " + std::to_string(s.end) + " exceeds text length " +
                        std::to_string(text_length));
        }
    }
    std::sort(spans.begin(), spans.end(), [](const PicoSpan& a, const PicoSpan& b) {
        return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    std::vector<PicoSpan> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.start <= merged.back().end) {
            merged.back().end = std::max(merged.back().end, s.end);
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

MarkedText insert_entity_markers(std::string_view text, const std::vector<PicoSpan>& spans) {
    std::size_t prev_end = 0;
    bool first = true;
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > text.size()) {
            throw Error("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                        ") is not valid for a text of length " + std::to_string(text.size()));
        }
        if (!first && s.start <= prev_end) {
            throw Error("spans overlap or touch at offset " + std::to_string(s.start) +
                        "; normalize_spans first");
        }
        prev_end = s.end;
        first = false;
    }

    std::string out;
    out.reserve(text.size() + spans.size() * (kOpen.size() + kClose.size() + 2));
    std::size_t cursor = 0;
    for (const auto& s : spans) {
        out.append(text.substr(cursor, s.start - cursor));
        out.append(kOpen);
        out.push_back(' ');
        out.append(text.substr(s.start, s.end - s.start));
        out.push_back(' ');
        out.append(kClose);
        cursor = s.end;
    }
    out.append(text.substr(cursor));
    return MarkedText{std::move(out)};
}

StripResult strip_entity_markers(const MarkedText& marked) {
    const std::string& s = marked.text;
    StripResult result;
    result.text.reserve(s.size());
    bool open = false;
    std::size_t open_offset = 0;   // offset of the pending opener in the marked text
    std::size_t span_start = 0;    // offset of the pending span in the recovered text
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::string_view(s).substr(i, kOpen.size()) == kOpen) {
            if (open) {
                throw Error("nested <ent> marker at offset " + std::to_string(i));
            }
            open = true;
            open_offset = i;
            i += kOpen.size();
            if (i < s.size() && s[i] == ' ') {
                ++i;  // the space insert_entity_markers added after the opener
            }
            span_start = result.text.size();
        } else if (std::string_view(s).substr(i, kClose.size()) == kClose) {
            if (!open) {
                throw Error("unbalanced </ent> marker at offset " + std::to_string(i));
            }
            if (result.text.size() > span_start && result.text.back() == ' ') {
                result.text.pop_back();  // the space added before the closer
            }
            if (result.text.size() > span_start) {
                result.spans.push_back({span_start, result.text.size(), PicoClass::I});
            }
            open = false;
            i += kClose.size();
        } else {
            result.text.push_back(s[i]);
            ++i;
        }
    }
    if (open) {
        throw Error("unclosed <ent> marker at offset " + std::to_string(open_offset));
    }
    return result;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read lexicon file: " + path.string());
    }
    Lexicon lexicon;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw Error("lexicon " + path.string() + " line " + std::to_string(line_no) +
                        ": expected 'phrase<TAB>P|I|O'");
        }
        std::string phrase = line.substr(0, tab);
        std::string klass = line.substr(tab + 1);
        while (!klass.empty() && (klass.back() == '\r' || klass.back() == ' ')) {
            klass.pop_back();
        }
        if (klass.size() != 1) {
            throw Error("lexicon " + path.string() + " line " + std::to_string(line_no) +
                        ": class must be a single letter");
        }
        lexicon.emplace_back(std::move(phrase), pico_class_from_char(klass[0]));
    }
    return lexicon;
}

std::vector<PicoSpan> lexicon_tag(std::string_view text, const Lexicon& lexicon) {
    for (const auto& [phrase, klass] : lexicon) {
        (void)klass;
        if (phrase.empty()) {
            throw Error("lexicon phrases must be nonempty");
        }
    }
    // Longest phrase wins at each word start.
    std::vector<std::size_t> order(lexicon.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lexicon[a].first.size() > lexicon[b].first.size();
    });

    std::vector<PicoSpan> spans;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!is_word_char(c) || (i > 0 && is_word_char(static_cast<unsigned char>(text[i - 1])))) {
            ++i;
            continue;
        }
        bool matched = false;
        for (const auto idx : order) {
            const auto& [phrase, klass] = lexicon[idx];
            if (!iequal_at(text, i, phrase)) {
                continue;
            }
            const std::size_t end = i + phrase.size();
            if (end < n && is_word_char(static_cast<unsigned char>(text[end])) &&
                is_word_char(static_cast<unsigned char>(phrase.back()))) {
                continue;  // phrase would end mid-word
            }
            spans.push_back({i, end, klass});
            i = end;
            matched = true;
            break;
        }
        if (!matched) {
            while (i < n && is_word_char(static_cast<unsigned char>(text[i]))) {
                ++i;
            }
        }
    }
    return spans;
}

std::vector<SpanAnnotation> load_span_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read span annotation file: " + path.string());
    }
    std::vector<SpanAnnotation> annotations;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            SpanAnnotation a;
            a.review_id = j.at("review_id").get<std::string>();
            a.doc_index = j.at("doc_index").get<int>();
            for (const auto& triple : j.at("spans")) {
                const auto klass = triple.at(2).get<std::string>();
                if (klass.size() != 1) {
                    throw Error("span class must be P, I or O");
                }
                a.spans.push_back({triple.at(0).get<std::size_t>(),
                                   triple.at(1).get<std::size_t>(),
                                   pico_class_from_char(klass[0])});
            }
            annotations.push_back(std::move(a));
        } catch (const nlohmann::json::exception& e) {
            throw Error("span annotations " + path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
    }
    return annotations;
}

void save_span_annotations(const std::filesystem::path& path,
                           const std::vector<SpanAnnotation>& annotations) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write span annotation file: " + path.string());
    }
    for (const auto& a : annotations) {
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& s : a.spans) {
            spans.push_back({s.start, s.end, std::string(1, static_cast<char>(s.klass))});
        }
        nlohmann::json j{{"review_id", a.review_id}, {"doc_index", a.doc_index}, {"spans", spans}};
        out << j.dump() << '\n';
    }
}

SpanIndex::SpanIndex(const std::vector<SpanAnnotation>& annotations) {
    for (const auto& a : annotations) {
        auto& slot = m_by_review[a.review_id][a.doc_index];
        slot.insert(slot.end(), a.spans.begin(), a.spans.end());
    }
}

const std::vector<PicoSpan>& SpanIndex::lookup(const std::string& review_id, int doc_index) const {
    static const std::vector<PicoSpan> kEmpty;
    const auto rit = m_by_review.find(review_id);
    if (rit == m_by_review.end()) {
        return kEmpty;
    }
    const auto dit = rit->second.find(doc_index);
    return dit == rit->second.end() ? kEmpty : dit->second;
}

}  // namespace entsumm
