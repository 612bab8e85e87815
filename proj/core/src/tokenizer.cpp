// SPDX-License-Identifier: Apache-2.0

#include "entsumm/tokenizer.hpp"

#include <array>
#include <fstream>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

// Word characters: ASCII alphanumerics, underscore, and any non-ASCII byte so
// UTF-8 sequences stay glued together. Everything else that is not whitespace
// is a single-character punctuation token.
bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

bool is_space_char(unsigned char c) {
    return std::isspace(c) != 0;
}

// Longest first, so prefix collisions cannot shadow a longer special token.
constexpr std::array<std::string_view, 5> kSpecialTexts = {
    special::kDocSepText,
    special::kEntCloseText,
    special::kEntOpenText,
    special::kPadText,
    special::kStartText,
};

}  // namespace

WordTokenizer::WordTokenizer() {
    m_texts = {std::string(special::kPadText), std::string(special::kStartText),
               std::string(special::kDocSepText), std::string(special::kEntOpenText),
               std::string(special::kEntCloseText)};
    for (std::size_t i = 0; i < m_texts.size(); ++i) {
        m_ids.emplace(m_texts[i], static_cast<TokenId>(i));
    }
}

std::vector<std::string> WordTokenizer::split(std::string_view text) const {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space_char(c)) {
            ++i;
            continue;
        }
        bool matched_special = false;
        for (const auto sp : kSpecialTexts) {
            if (text.substr(i, sp.size()) == sp) {
                tokens.emplace_back(sp);
                i += sp.size();
                matched_special = true;
                break;
            }
        }
        if (matched_special) {
            continue;
        }
        if (is_word_char(c)) {
            std::size_t j = i + 1;
            while (j < n && is_word_char(static_cast<unsigned char>(text[j]))) {
                ++j;
            }
            tokens.emplace_back(text.substr(i, j - i));
            i = j;
        } else {
            tokens.emplace_back(text.substr(i, 1));
            ++i;
        }
    }
    return tokens;
}

TokenId WordTokenizer::intern(const std::string& token) {
    std::lock_guard lock(m_mutex);
    auto it = m_ids.find(token);
    if (it != m_ids.end()) {
        return it->second;
    }
    const auto id = static_cast<TokenId>(m_texts.size());
    m_texts.push_back(token);
    m_ids.emplace(token, id);
    return id;
}

std::vector<TokenId> WordTokenizer::tokenize(std::string_view text) {
    std::vector<TokenId> ids;
    for (const auto& token : split(text)) {
        ids.push_back(intern(token));
    }
    return ids;
}

std::string WordTokenizer::detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += token_text(ids[i]);
    }
    return out;
}

std::string WordTokenizer::token_text(TokenId id) const {
    std::lock_guard lock(m_mutex);
    if (id < 0 || static_cast<std::size_t>(id) >= m_texts.size()) {
        throw Error("token id " + std::to_string(id) + " is not in the vocabulary");
    }
    return m_texts[static_cast<std::size_t>(id)];
}

std::size_t WordTokenizer::vocab_size() const {
    std::lock_guard lock(m_mutex);
    return m_texts.size();
}

void WordTokenizer::save_vocab(const std::filesystem::path& path) const {
    nlohmann::json arr = nlohmann::json::array();
    {
        std::lock_guard lock(m_mutex);
        for (const auto& t : m_texts) {
            arr.push_back(t);
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write vocabulary file: " + path.string());
    }
    out << arr.dump() << '\n';
}

void WordTokenizer::load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read vocabulary file: " + path.string());
    }
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed vocabulary file " + path.string() + ": " + e.what());
    }
    if (!arr.is_array() || arr.size() < static_cast<std::size_t>(special::kFirstWord)) {
        throw Error("vocabulary file " + path.string() + " does not reserve the special tokens");
    }
    WordTokenizer fresh;
    for (std::size_t i = 0; i < static_cast<std::size_t>(special::kFirstWord); ++i) {
        if (arr[i].get<std::string>() != fresh.m_texts[i]) {
            throw Error("vocabulary file " + path.string() + " has wrong special token at id " +
                        std::to_string(i));
        }
    }
    for (std::size_t i = special::kFirstWord; i < arr.size(); ++i) {
        fresh.intern(arr[i].get<std::string>());
    }
    std::lock_guard lock(m_mutex);
    m_ids = std::move(fresh.m_ids);
    m_texts = std::move(fresh.m_texts);
}

}  // namespace entsumm
