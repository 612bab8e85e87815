// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "entsumm/packing.hpp"

namespace entsumm {

// Global-attention settings. <doc-sep> positions are global in every one.
enum class AttentionSetting {
    DocSep,           // separators only
    EntMarkers,       // plus <ent>/</ent> ids
    EntMarkersSpans,  // plus the ids between each marker pair
    EntSpans,         // span interiors global, marker ids pad-masked
    EntOnly,          // span interiors global, everything else pad-masked
};

AttentionSetting attention_setting_from_string(std::string_view s);
std::string_view to_string(AttentionSetting setting);

struct AttentionConfig {
    AttentionSetting setting = AttentionSetting::DocSep;
    std::size_t window = 512;  // even, >= 2; each position sees window/2 per side

    void validate() const;
};

// Per-position masks. No position is ever both global and padded.
struct AttentionMasks {
    std::vector<std::uint8_t> global_mask;
    std::vector<std::uint8_t> pad_mask;

    std::size_t size() const { return global_mask.size(); }
};

// Entity settings require an input packed with marking on.
AttentionMasks build_masks(const PackedInput& packed, const AttentionConfig& config);

// Row-major n x n attendance matrix.
struct DenseMask {
    std::size_t n = 0;
    std::vector<std::uint8_t> allowed;

    bool at(std::size_t i, std::size_t j) const { return allowed[i * n + j] != 0; }
};

// allowed(i,j) = !pad(i) && !pad(j) && (global(i) || global(j) || |i-j| <= window/2).
DenseMask masks_to_dense(const AttentionMasks& masks, std::size_t window, std::size_t n);

// Single-head operands, row-major seq_len x head_dim.
struct AttentionTensors {
    std::size_t seq_len = 0;
    std::size_t head_dim = 0;
    std::vector<double> q;
    std::vector<double> k;
    std::vector<double> v;

    void validate() const;
};

// Masked scaled dot-product attention over the full matrix. Rows with no
// allowed partner yield zero vectors. Returns row-major seq_len x head_dim.
std::vector<double> dense_attention_oracle(const AttentionTensors& t, const DenseMask& allowed);

// Banded + global kernel; never materializes the n x n score matrix. Output
// matches the dense oracle within 1e-6 per element.
std::vector<double> local_global_attention(const AttentionTensors& t, const AttentionMasks& masks,
                                           std::size_t window);

// Debug path exposing each row's attended columns and softmax weights.
struct AttentionRowWeights {
    std::vector<std::size_t> cols;
    std::vector<double> weights;
};

std::vector<AttentionRowWeights> local_global_attention_weights(const AttentionTensors& t,
                                                                const AttentionMasks& masks,
                                                                std::size_t window);

// Substitutes the pad id at pad-masked positions.
std::vector<TokenId> replace_padded_ids(const std::vector<TokenId>& ids,
                                        const AttentionMasks& masks);

struct ReviewMasks {
    std::string review_id;
    AttentionMasks masks;
};

// JSONL, one review per line with 0/1 arrays.
void save_masks(const std::filesystem::path& path, const std::vector<ReviewMasks>& records);
std::vector<ReviewMasks> load_masks(const std::filesystem::path& path);

}  // namespace entsumm
