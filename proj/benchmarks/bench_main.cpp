// SPDX-License-Identifier: Apache-2.0

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "entsumm/attention.hpp"
#include "entsumm/corpus.hpp"
#include "entsumm/metrics.hpp"
#include "entsumm/packing.hpp"
#include "entsumm/tokenizer.hpp"

namespace {

entsumm::AttentionTensors make_tensors(std::size_t n, std::size_t d, std::uint32_t seed) {
    entsumm::AttentionTensors t;
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

entsumm::AttentionMasks make_masks(std::size_t n) {
    entsumm::AttentionMasks m;
    m.global_mask.assign(n, 0);
    m.pad_mask.assign(n, 0);
    for (std::size_t i = 0; i < n; i += 64) {
        m.global_mask[i] = 1;
    }
    return m;
}

std::string make_text(std::size_t words, std::uint32_t seed) {
    static const std::vector<std::string> kWords = {
        "the",     "trial",    "reported", "outcomes", "in",      "patients",
        "with",    "diabetes", "insulin",  "improved", "control", "evidence",
        "showed",  "no",       "effect",   "on",       "pain",    "relief",
        "groups",  "compared"};
    std::mt19937 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, kWords.size() - 1);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += kWords[pick(rng)];
    }
    return out;
}

void BM_SparseAttention(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto t = make_tensors(n, 64, 7);
    const auto masks = make_masks(n);
    for (auto _ : state) {
        auto out = entsumm::local_global_attention(t, masks, 64);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_SparseAttention)->Arg(64)->Arg(256)->Arg(1024);

void BM_DenseAttentionOracle(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto t = make_tensors(n, 64, 7);
    const auto dense = entsumm::masks_to_dense(make_masks(n), 64, n);
    for (auto _ : state) {
        auto out = entsumm::dense_attention_oracle(t, dense);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_DenseAttentionOracle)->Arg(64)->Arg(256)->Arg(1024);

void BM_RougeL(benchmark::State& state) {
    entsumm::WordTokenizer tokenizer;
    const auto cand = make_text(300, 11);
    const auto ref = make_text(300, 13);
    for (auto _ : state) {
        auto score = entsumm::rouge_l(cand, ref, tokenizer);
        benchmark::DoNotOptimize(score);
    }
}
BENCHMARK(BM_RougeL);

void BM_PackInput(benchmark::State& state) {
    entsumm::Review review;
    review.review_id = "BENCH";
    for (std::uint32_t i = 0; i < 8; ++i) {
        review.abstracts.push_back(make_text(400, 100 + i) + ".");
    }
    const std::vector<std::vector<entsumm::PicoSpan>> spans(review.abstracts.size());
    entsumm::PackConfig config;
    config.budget = 1024;
    config.marking = false;
    entsumm::WordTokenizer tokenizer;
    const auto& rules = entsumm::CleaningRules::defaults();
    for (auto _ : state) {
        auto packed = entsumm::pack_input(review, spans, config, tokenizer, rules);
        benchmark::DoNotOptimize(packed);
    }
}
BENCHMARK(BM_PackInput);

}  // namespace
