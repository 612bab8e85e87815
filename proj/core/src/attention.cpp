// SPDX-License-Identifier: Apache-2.0

#include "entsumm/attention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "entsumm/error.hpp"

namespace entsumm {

namespace {

void validate_window(std::size_t window) {
    if (window < 2 || window % 2 != 0) {
        throw Error("attention window must be even and at least 2, got " +
                    std::to_string(window));
    }
}

double dot(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// Ascending candidate columns for row i: the local band plus every global
// column, padded positions excluded. Global rows see all non-padded columns.
std::vector<std::size_t> row_candidates(const AttentionMasks& masks, std::size_t i,
                                        std::size_t half,
                                        const std::vector<std::size_t>& global_cols) {
    const std::size_t n = masks.size();
    std::vector<std::size_t> cols;
    if (masks.global_mask[i] != 0) {
        cols.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (masks.pad_mask[j] == 0) {
                cols.push_back(j);
            }
        }
        return cols;
    }
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    std::size_t g = 0;
    for (; g < global_cols.size() && global_cols[g] < lo; ++g) {
        cols.push_back(global_cols[g]);
    }
    for (std::size_t j = lo; j <= hi; ++j) {
        if (masks.pad_mask[j] == 0) {
            cols.push_back(j);
        }
    }
    while (g < global_cols.size() && global_cols[g] <= hi) {
        ++g;
    }
    for (; g < global_cols.size(); ++g) {
        cols.push_back(global_cols[g]);
    }
    return cols;
}

// Softmax weights for row i over the candidate columns, max-subtracted.
std::vector<double> row_weights(const AttentionTensors& t, std::size_t i,
                                const std::vector<std::size_t>& cols) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(t.head_dim));
    const double* qi = t.q.data() + i * t.head_dim;
    std::vector<double> weights(cols.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        weights[c] = dot(qi, t.k.data() + cols[c] * t.head_dim, t.head_dim) * scale;
        best = std::max(best, weights[c]);
    }
    double z = 0.0;
    for (auto& w : weights) {
        w = std::exp(w - best);
        z += w;
    }
    for (auto& w : weights) {
        w /= z;
    }
    return weights;
}

void check_masks_against(const AttentionMasks& masks, std::size_t n) {
    if (masks.global_mask.size() != n || masks.pad_mask.size() != n) {
        throw Error("attention masks length " + std::to_string(masks.size()) +
                    " does not match sequence length " + std::to_string(n));
    }
}

}  // namespace

AttentionSetting attention_setting_from_string(std::string_view s) {
    if (s == "doc_sep") {
        return AttentionSetting::DocSep;
    }
    if (s == "ent_markers") {
        return AttentionSetting::EntMarkers;
    }
    if (s == "ent_markers_spans") {
        return AttentionSetting::EntMarkersSpans;
    }
    if (s == "ent_spans") {
        return AttentionSetting::EntSpans;
    }
    if (s == "ent_only") {
        return AttentionSetting::EntOnly;
    }
    throw Error("unknown attention setting '" + std::string(s) +
                "' (expected doc_sep, ent_markers, ent_markers_spans, ent_spans, or ent_only)");
}

std::string_view to_string(AttentionSetting setting) {
    switch (setting) {
    case AttentionSetting::DocSep:
        return "doc_sep";
    case AttentionSetting::EntMarkers:
        return "ent_markers";
    case AttentionSetting::EntMarkersSpans:
        return "ent_markers_spans";
    case AttentionSetting::EntSpans:
        return "ent_spans";
    case AttentionSetting::EntOnly:
        return "ent_only";
    }
    throw Error("invalid attention setting value");
}

void AttentionConfig::validate() const {
    validate_window(window);
}

AttentionMasks build_masks(const PackedInput& packed, const AttentionConfig& config) {
    config.validate();
    if (config.setting != AttentionSetting::DocSep && !packed.marked) {
        throw Error("attention setting '" + std::string(to_string(config.setting)) +
                    "' needs entity markers, but review " + packed.review_id +
                    " was packed with marking off");
    }
    const std::size_t n = packed.token_ids.size();
    std::vector<std::uint8_t> marker(n, 0);
    std::vector<std::uint8_t> in_span(n, 0);
    for (auto pos : packed.entity_token_positions) {
        if (pos >= n) {
            throw Error("entity token position " + std::to_string(pos) +
                        " out of range for review " + packed.review_id);
        }
        const auto id = packed.token_ids[pos];
        if (id == special::kEntOpen || id == special::kEntClose) {
            marker[pos] = 1;
        } else {
            in_span[pos] = 1;
        }
    }

    AttentionMasks masks;
    masks.global_mask.assign(n, 0);
    masks.pad_mask.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (packed.token_ids[i] == special::kDocSep) {
            masks.global_mask[i] = 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        switch (config.setting) {
        case AttentionSetting::DocSep:
            break;
        case AttentionSetting::EntMarkers:
            if (marker[i] != 0) {
                masks.global_mask[i] = 1;
            }
            break;
        case AttentionSetting::EntMarkersSpans:
            if (marker[i] != 0 || in_span[i] != 0) {
                masks.global_mask[i] = 1;
            }
            break;
        case AttentionSetting::EntSpans:
            if (in_span[i] != 0) {
                masks.global_mask[i] = 1;
            } else if (marker[i] != 0) {
                masks.pad_mask[i] = 1;
            }
            break;
        case AttentionSetting::EntOnly:
            if (in_span[i] != 0) {
                masks.global_mask[i] = 1;
            } else if (packed.token_ids[i] != special::kDocSep) {
                masks.pad_mask[i] = 1;
            }
            break;
        }
    }
    return masks;
}

DenseMask masks_to_dense(const AttentionMasks& masks, std::size_t window, std::size_t n) {
    validate_window(window);
    check_masks_against(masks, n);
    const std::size_t half = window / 2;
    DenseMask dense;
    dense.n = n;
    dense.allowed.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (masks.pad_mask[i] != 0) {
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (masks.pad_mask[j] != 0) {
                continue;
            }
            const std::size_t dist = i > j ? i - j : j - i;
            if (masks.global_mask[i] != 0 || masks.global_mask[j] != 0 || dist <= half) {
                dense.allowed[i * n + j] = 1;
            }
        }
    }
    return dense;
}

void AttentionTensors::validate() const {
    if (head_dim == 0) {
        throw Error("attention head dimension must be positive");
    }
    const std::size_t expect = seq_len * head_dim;
    if (q.size() != expect || k.size() != expect || v.size() != expect) {
        throw Error("attention tensor shapes do not match seq_len x head_dim");
    }
    for (const auto* mat : {&q, &k, &v}) {
        for (double x : *mat) {
            if (!std::isfinite(x)) {
                throw Error("attention tensors must be finite");
            }
        }
    }
}

std::vector<double> dense_attention_oracle(const AttentionTensors& t, const DenseMask& allowed) {
    t.validate();
    if (allowed.n != t.seq_len) {
        throw Error("dense mask size does not match sequence length");
    }
    const std::size_t n = t.seq_len;
    const std::size_t d = t.head_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> out(n * d, 0.0);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* qi = t.q.data() + i * d;
        double best = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (!allowed.at(i, j)) {
                continue;
            }
            scores[j] = dot(qi, t.k.data() + j * d, d) * scale;
            best = std::max(best, scores[j]);
            any = true;
        }
        if (!any) {
            continue;
        }
        double z = 0.0;
        double* oi = out.data() + i * d;
        for (std::size_t j = 0; j < n; ++j) {
            if (!allowed.at(i, j)) {
                continue;
            }
            const double w = std::exp(scores[j] - best);
            z += w;
            const double* vj = t.v.data() + j * d;
            for (std::size_t c = 0; c < d; ++c) {
                oi[c] += w * vj[c];
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            oi[c] /= z;
        }
    }
    return out;
}

std::vector<double> local_global_attention(const AttentionTensors& t, const AttentionMasks& masks,
                                           std::size_t window) {
    t.validate();
    validate_window(window);
    check_masks_against(masks, t.seq_len);
    const std::size_t n = t.seq_len;
    const std::size_t d = t.head_dim;
    const std::size_t half = window / 2;
    std::vector<std::size_t> global_cols;
    for (std::size_t j = 0; j < n; ++j) {
        if (masks.global_mask[j] != 0 && masks.pad_mask[j] == 0) {
            global_cols.push_back(j);
        }
    }
    std::vector<double> out(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (masks.pad_mask[i] != 0) {
            continue;
        }
        const auto cols = row_candidates(masks, i, half, global_cols);
        if (cols.empty()) {
            continue;
        }
        const auto weights = row_weights(t, i, cols);
        double* oi = out.data() + i * d;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double* vj = t.v.data() + cols[c] * d;
            for (std::size_t k2 = 0; k2 < d; ++k2) {
                oi[k2] += weights[c] * vj[k2];
            }
        }
    }
    return out;
}

std::vector<AttentionRowWeights> local_global_attention_weights(const AttentionTensors& t,
                                                                const AttentionMasks& masks,
                                                                std::size_t window) {
    t.validate();
    validate_window(window);
    check_masks_against(masks, t.seq_len);
    const std::size_t n = t.seq_len;
    const std::size_t half = window / 2;
    std::vector<std::size_t> global_cols;
    for (std::size_t j = 0; j < n; ++j) {
        if (masks.global_mask[j] != 0 && masks.pad_mask[j] == 0) {
            global_cols.push_back(j);
        }
    }
    std::vector<AttentionRowWeights> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (masks.pad_mask[i] != 0) {
            continue;
        }
        rows[i].cols = row_candidates(masks, i, half, global_cols);
        if (!rows[i].cols.empty()) {
            rows[i].weights = row_weights(t, i, rows[i].cols);
        }
    }
    return rows;
}

std::vector<TokenId> replace_padded_ids(const std::vector<TokenId>& ids,
                                        const AttentionMasks& masks) {
    check_masks_against(masks, ids.size());
    auto out = ids;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (masks.pad_mask[i] != 0) {
            out[i] = special::kPad;
        }
    }
    return out;
}

void save_masks(const std::filesystem::path& path, const std::vector<ReviewMasks>& records) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write masks file: " + path.string());
    }
    for (const auto& r : records) {
        nlohmann::json j{{"review_id", r.review_id},
                         {"global_mask", r.masks.global_mask},
                         {"pad_mask", r.masks.pad_mask}};
        out << j.dump() << '\n';
    }
}

std::vector<ReviewMasks> load_masks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read masks file: " + path.string());
    }
    std::vector<ReviewMasks> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            ReviewMasks r;
            r.review_id = j.at("review_id").get<std::string>();
            r.masks.global_mask = j.at("global_mask").get<std::vector<std::uint8_t>>();
            r.masks.pad_mask = j.at("pad_mask").get<std::vector<std::uint8_t>>();
            if (r.masks.global_mask.size() != r.masks.pad_mask.size()) {
                throw Error("global_mask and pad_mask lengths differ");
            }
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error("masks " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
        }
    }
    return records;
}

}  // namespace entsumm
