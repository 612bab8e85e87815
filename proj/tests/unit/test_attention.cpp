// SPDX-License-Identifier: Apache-2.0

#include <doctest/doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "entsumm/attention.hpp"
#include "entsumm/error.hpp"
#include "entsumm/packing.hpp"
#include "entsumm/tokenizer.hpp"

#include "test_util.hpp"

using entsumm::AttentionConfig;
using entsumm::AttentionMasks;
using entsumm::AttentionSetting;
using entsumm::AttentionTensors;
using entsumm::build_masks;
using entsumm::dense_attention_oracle;
using entsumm::DenseMask;
using entsumm::local_global_attention;
using entsumm::masks_to_dense;
using entsumm::PackedInput;
using entsumm::TokenId;
namespace special = entsumm::special;

namespace {

// Positions 0-6 = [w, <ent>, e1, e2, </ent>, w, <doc-sep>].
PackedInput seven_token_fixture() {
    PackedInput p;
    p.review_id = "FIX";
    p.token_ids = {5, special::kEntOpen, 6, 7, special::kEntClose, 8, special::kDocSep};
    p.doc_boundaries = {6};
    p.entity_token_positions = {1, 2, 3, 4};
    p.marked = true;
    return p;
}

std::set<std::size_t> mask_set(const std::vector<std::uint8_t>& mask) {
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            s.insert(i);
        }
    }
    return s;
}

AttentionMasks masks_for(AttentionSetting setting) {
    AttentionConfig config;
    config.setting = setting;
    config.window = 2;
    return build_masks(seven_token_fixture(), config);
}

AttentionTensors random_tensors(std::size_t n, std::size_t d, std::uint32_t seed) {
    AttentionTensors t;
    t.seq_len = n;
    t.head_dim = d;
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    t.q.resize(n * d);
    t.k.resize(n * d);
    t.v.resize(n * d);
    for (auto& x : t.q) x = dist(rng);
    for (auto& x : t.k) x = dist(rng);
    for (auto& x : t.v) x = dist(rng);
    return t;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(a[i] - b[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("attention setting strings roundtrip") {
    CHECK(entsumm::attention_setting_from_string("doc_sep") == AttentionSetting::DocSep);
    CHECK(entsumm::attention_setting_from_string("ent_markers") == AttentionSetting::EntMarkers);
    CHECK(entsumm::attention_setting_from_string("ent_markers_spans") ==
          AttentionSetting::EntMarkersSpans);
    CHECK(entsumm::attention_setting_from_string("ent_spans") == AttentionSetting::EntSpans);
    CHECK(entsumm::attention_setting_from_string("ent_only") == AttentionSetting::EntOnly);
    CHECK(entsumm::to_string(AttentionSetting::EntMarkersSpans) == "ent_markers_spans");
    CHECK_THROWS_AS((void)entsumm::attention_setting_from_string("everything"), entsumm::Error);
}

TEST_CASE("window must be even and at least 2") {
    AttentionConfig config;
    config.window = 2;
    config.validate();
    config.window = 3;
    CHECK_THROWS_AS(config.validate(), entsumm::Error);
    config.window = 0;
    CHECK_THROWS_AS(config.validate(), entsumm::Error);
}

TEST_CASE("mask construction matches the hand-derived sets for all settings") {
    using Set = std::set<std::size_t>;

    auto m = masks_for(AttentionSetting::DocSep);
    CHECK(mask_set(m.global_mask) == Set{6});
    CHECK(mask_set(m.pad_mask) == Set{});

    m = masks_for(AttentionSetting::EntMarkers);
    CHECK(mask_set(m.global_mask) == Set{1, 4, 6});
    CHECK(mask_set(m.pad_mask) == Set{});

    m = masks_for(AttentionSetting::EntMarkersSpans);
    CHECK(mask_set(m.global_mask) == Set{1, 2, 3, 4, 6});
    CHECK(mask_set(m.pad_mask) == Set{});

    m = masks_for(AttentionSetting::EntSpans);
    CHECK(mask_set(m.global_mask) == Set{2, 3, 6});
    CHECK(mask_set(m.pad_mask) == Set{1, 4});

    m = masks_for(AttentionSetting::EntOnly);
    CHECK(mask_set(m.global_mask) == Set{2, 3, 6});
    CHECK(mask_set(m.pad_mask) == Set{0, 1, 4, 5});
}

TEST_CASE("no position is both global and padded") {
    for (const auto setting :
         {AttentionSetting::DocSep, AttentionSetting::EntMarkers, AttentionSetting::EntMarkersSpans,
          AttentionSetting::EntSpans, AttentionSetting::EntOnly}) {
        const auto m = masks_for(setting);
        REQUIRE(m.global_mask.size() == m.pad_mask.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            CHECK(!(m.global_mask[i] && m.pad_mask[i]));
        }
    }
}

TEST_CASE("entity settings reject inputs packed without marking") {
    auto packed = seven_token_fixture();
    packed.marked = false;
    AttentionConfig config;
    config.setting = AttentionSetting::EntMarkers;
    CHECK_THROWS_AS((void)build_masks(packed, config), entsumm::Error);
    config.setting = AttentionSetting::DocSep;
    CHECK_NOTHROW((void)build_masks(packed, config));
}

TEST_CASE("dense mask expansion follows the allowed-pair rule") {
    AttentionMasks plain;
    plain.global_mask.assign(3, 0);
    plain.pad_mask.assign(3, 0);
    const auto tri = masks_to_dense(plain, 2, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(tri.at(i, j) == (std::max(i, j) - std::min(i, j) <= 1));
        }
    }

    AttentionMasks mixed;
    mixed.global_mask = {0, 0, 0, 1, 0};
    mixed.pad_mask = {0, 1, 0, 0, 0};
    const auto dense = masks_to_dense(mixed, 2, 5);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(dense.at(3, j) == (j != 1));
        CHECK(dense.at(j, 3) == (j != 1));
        CHECK(!dense.at(1, j));
        CHECK(!dense.at(j, 1));
    }
    CHECK(!dense.at(0, 4));
}

TEST_CASE("oracle handles singleton, uniform, and fully masked rows") {
    AttentionTensors t;
    t.seq_len = 1;
    t.head_dim = 2;
    t.q = {0.3, -0.7};
    t.k = {1.0, 2.0};
    t.v = {5.0, -4.0};
    DenseMask one;
    one.n = 1;
    one.allowed = {1};
    const auto out = dense_attention_oracle(t, one);
    CHECK(out[0] == doctest::Approx(5.0));
    CHECK(out[1] == doctest::Approx(-4.0));

    AttentionTensors zero_qk;
    zero_qk.seq_len = 3;
    zero_qk.head_dim = 1;
    zero_qk.q = {0, 0, 0};
    zero_qk.k = {0, 0, 0};
    zero_qk.v = {3.0, 5.0, 9.0};
    DenseMask mask;
    mask.n = 3;
    // Row 0 attends {0, 2}; row 1 attends nothing; row 2 attends {1}.
    mask.allowed = {1, 0, 1, 0, 0, 0, 0, 1, 0};
    const auto mixed = dense_attention_oracle(zero_qk, mask);
    CHECK(mixed[0] == doctest::Approx(6.0));
    CHECK(mixed[1] == doctest::Approx(0.0));
    CHECK(mixed[2] == doctest::Approx(5.0));
}

TEST_CASE("oracle rejects non-finite and misshapen tensors") {
    AttentionTensors t;
    t.seq_len = 1;
    t.head_dim = 1;
    t.q = {std::nan("")};
    t.k = {0.0};
    t.v = {0.0};
    DenseMask one;
    one.n = 1;
    one.allowed = {1};
    CHECK_THROWS_AS((void)dense_attention_oracle(t, one), entsumm::Error);
    t.q = {0.0, 0.0};
    CHECK_THROWS_AS((void)dense_attention_oracle(t, one), entsumm::Error);
}

TEST_CASE("sparse kernel equals the dense oracle on the extended fixture") {
    // Fixture pattern tiled over n=12 with a window of 4.
    AttentionMasks m;
    m.global_mask = {0, 1, 0, 0, 1, 0, 1, 0, 1, 1, 0, 1};
    m.pad_mask = {0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0};
    const auto t = random_tensors(12, 5, 42);
    const auto sparse = local_global_attention(t, m, 4);
    const auto dense = dense_attention_oracle(t, masks_to_dense(m, 4, 12));
    CHECK(max_abs_diff(sparse, dense) <= 1e-6);
}

TEST_CASE("wide windows and all-global masks equal unmasked attention") {
    const std::size_t n = 9;
    const auto t = random_tensors(n, 4, 7);
    DenseMask full;
    full.n = n;
    full.allowed.assign(n * n, 1);
    const auto unmasked = dense_attention_oracle(t, full);

    AttentionMasks plain;
    plain.global_mask.assign(n, 0);
    plain.pad_mask.assign(n, 0);
    CHECK(max_abs_diff(local_global_attention(t, plain, 2 * n), unmasked) <= 1e-6);

    AttentionMasks all_global;
    all_global.global_mask.assign(n, 1);
    all_global.pad_mask.assign(n, 0);
    CHECK(max_abs_diff(local_global_attention(t, all_global, 2), unmasked) <= 1e-6);
}

TEST_CASE("attention weights of live rows sum to one") {
    const auto packed = seven_token_fixture();
    AttentionConfig config;
    config.setting = AttentionSetting::EntOnly;
    config.window = 2;
    const auto masks = build_masks(packed, config);
    const auto t = random_tensors(packed.token_ids.size(), 3, 11);
    const auto rows = entsumm::local_global_attention_weights(t, masks, config.window);
    REQUIRE(rows.size() == packed.token_ids.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (masks.pad_mask[i]) {
            CHECK(rows[i].cols.empty());
            continue;
        }
        double sum = 0.0;
        for (const auto w : rows[i].weights) {
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("padded positions are isolated from every output") {
    AttentionMasks m;
    m.global_mask = {0, 1, 0, 0, 0, 0};
    m.pad_mask = {0, 0, 0, 1, 0, 0};
    auto t = random_tensors(6, 4, 3);
    const auto base = local_global_attention(t, m, 2);

    auto poked_v = t;
    for (std::size_t c = 0; c < 4; ++c) {
        poked_v.v[3 * 4 + c] = 99.0 + static_cast<double>(c);
    }
    CHECK(max_abs_diff(local_global_attention(poked_v, m, 2), base) == 0.0);

    auto poked_q = t;
    for (std::size_t c = 0; c < 4; ++c) {
        poked_q.q[3 * 4 + c] = -55.0;
    }
    const auto out = local_global_attention(poked_q, m, 2);
    for (std::size_t i = 0; i < 6; ++i) {
        if (i == 3) {
            continue;
        }
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(out[i * 4 + c] == base[i * 4 + c]);
        }
    }
}

TEST_CASE("global rows attend symmetrically") {
    std::mt19937 rng(17);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 10;
        AttentionMasks m;
        m.global_mask.resize(n);
        m.pad_mask.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            m.global_mask[i] = coin(rng);
            m.pad_mask[i] = m.global_mask[i] ? 0 : coin(rng);
        }
        const auto dense = masks_to_dense(m, 4, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (m.global_mask[i] && !m.pad_mask[i] && !m.pad_mask[j]) {
                    CHECK(dense.at(i, j) == dense.at(j, i));
                }
            }
        }
    }
}

TEST_CASE("allowed pairs grow monotonically across settings") {
    const std::size_t n = seven_token_fixture().token_ids.size();
    const auto doc_sep = masks_to_dense(masks_for(AttentionSetting::DocSep), 2, n);
    const auto markers = masks_to_dense(masks_for(AttentionSetting::EntMarkers), 2, n);
    const auto spans = masks_to_dense(masks_for(AttentionSetting::EntMarkersSpans), 2, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (doc_sep.at(i, j)) {
                CHECK(markers.at(i, j));
            }
            if (markers.at(i, j)) {
                CHECK(spans.at(i, j));
            }
        }
    }
}

TEST_CASE("replace_padded_ids substitutes the pad id") {
    const auto packed = seven_token_fixture();
    AttentionConfig config;
    config.setting = AttentionSetting::EntOnly;
    config.window = 2;
    const auto masks = build_masks(packed, config);
    const auto replaced = entsumm::replace_padded_ids(packed.token_ids, masks);
    REQUIRE(replaced.size() == packed.token_ids.size());
    for (std::size_t i = 0; i < replaced.size(); ++i) {
        if (masks.pad_mask[i]) {
            CHECK(replaced[i] == special::kPad);
        } else {
            CHECK(replaced[i] == packed.token_ids[i]);
        }
    }
}

TEST_CASE("masks roundtrip through jsonl") {
    std::vector<entsumm::ReviewMasks> records(2);
    records[0].review_id = "CR0001";
    records[0].masks = masks_for(AttentionSetting::EntSpans);
    records[1].review_id = "CR0002";
    records[1].masks = masks_for(AttentionSetting::DocSep);
    testutil::TempDir tmp;
    entsumm::save_masks(tmp.file("masks.jsonl"), records);
    const auto loaded = entsumm::load_masks(tmp.file("masks.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].review_id == "CR0001");
    CHECK(loaded[0].masks.global_mask == records[0].masks.global_mask);
    CHECK(loaded[0].masks.pad_mask == records[0].masks.pad_mask);
    CHECK(loaded[1].masks.global_mask == records[1].masks.global_mask);
}
