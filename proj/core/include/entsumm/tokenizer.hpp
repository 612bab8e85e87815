// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace entsumm {

using TokenId = std::int32_t;

// Reserved ids shared by every tokenizer in the kit. Implementations must keep
// these five ids for the special tokens; ordinary vocabulary starts above them.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kStart = 1;
inline constexpr TokenId kDocSep = 2;
inline constexpr TokenId kEntOpen = 3;
inline constexpr TokenId kEntClose = 4;
inline constexpr TokenId kFirstWord = 5;

inline constexpr std::string_view kPadText = "<pad>";
inline constexpr std::string_view kStartText = "<s>";
inline constexpr std::string_view kDocSepText = "<doc-sep>";
inline constexpr std::string_view kEntOpenText = "<ent>";
inline constexpr std::string_view kEntCloseText = "</ent>";
}  // namespace special

// Pluggable tokenization contract. Special tokens always map to exactly one id
// and never fall out of ordinary-text tokenization; detokenize(tokenize(x))
// preserves the word sequence of x.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    // Surface segmentation only; never touches the vocabulary.
    virtual std::vector<std::string> split(std::string_view text) const = 0;

    // May extend the vocabulary on first sight of a word.
    virtual std::vector<TokenId> tokenize(std::string_view text) = 0;

    virtual std::string detokenize(std::span<const TokenId> ids) const = 0;

    virtual std::string token_text(TokenId id) const = 0;
    virtual std::size_t vocab_size() const = 0;

    TokenId pad_id() const { return special::kPad; }
    TokenId start_id() const { return special::kStart; }
    TokenId doc_sep_id() const { return special::kDocSep; }
    TokenId ent_open_id() const { return special::kEntOpen; }
    TokenId ent_close_id() const { return special::kEntClose; }
};

// Deterministic whitespace-and-punctuation tokenizer with a corpus-built
// vocabulary. Word ids are assigned in first-appearance order, so feeding the
// same texts in the same order always yields the same ids. Thread-safe; for
// bit-identical parallel runs, warm the vocabulary sequentially first.
class WordTokenizer final : public Tokenizer {
public:
    WordTokenizer();

    std::vector<std::string> split(std::string_view text) const override;
    std::vector<TokenId> tokenize(std::string_view text) override;
    std::string detokenize(std::span<const TokenId> ids) const override;
    std::string token_text(TokenId id) const override;
    std::size_t vocab_size() const override;

    // Sidecar vocabulary file: a JSON array of token texts indexed by id.
    void save_vocab(const std::filesystem::path& path) const;

    // Replaces the current vocabulary with the file's contents.
    void load_vocab(const std::filesystem::path& path);

private:
    TokenId intern(const std::string& token);

    mutable std::mutex m_mutex;
    std::unordered_map<std::string, TokenId> m_ids;
    std::vector<std::string> m_texts;
};

}  // namespace entsumm
