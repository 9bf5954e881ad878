// Parallel kernels against their serial references on identical inputs.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "ctxengine/kernels.hpp"

using namespace ctxengine;

namespace {

std::vector<float> random_matrix(std::size_t rows, std::size_t dim) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    std::vector<float> m(rows * dim);
    for (auto& v : m) v = d(rng);
    return m;
}

std::vector<std::string> random_texts(std::size_t n) {
    static const char* words[] = {"parse", "config", "(", ")", "buffer_size", "index", ";", "retry", "{", "}"};
    std::mt19937_64 rng(2);
    std::vector<std::string> texts(n);
    for (auto& t : texts) {
        for (int w = 0; w < 200; ++w) t += std::string(words[rng() % 10]) + " ";
    }
    return texts;
}

struct Bm25Input {
    std::vector<Posting> postings;
    std::vector<std::uint32_t> lengths;
};

Bm25Input random_postings(std::size_t items) {
    std::mt19937_64 rng(3);
    Bm25Input in;
    in.lengths.resize(items);
    for (auto& l : in.lengths) l = 20 + static_cast<std::uint32_t>(rng() % 200);
    for (std::size_t i = 0; i < items; ++i) {
        if (rng() % 2 == 0) in.postings.push_back({static_cast<ItemId>(i), 1 + static_cast<std::uint32_t>(rng() % 5)});
    }
    return in;
}

template <bool Parallel>
void BM_Cosine(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const auto m = random_matrix(rows, kEmbeddingDim);
    const auto q = random_matrix(1, kEmbeddingDim);
    for (auto _ : state) {
        auto s = Parallel ? kernels::cosine_scores(m, kEmbeddingDim, q)
                          : kernels::serial::cosine_scores(m, kEmbeddingDim, q);
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}

template <bool Parallel>
void BM_Bm25(benchmark::State& state) {
    const auto items = static_cast<std::size_t>(state.range(0));
    const auto in = random_postings(items);
    std::vector<double> scores(items);
    for (auto _ : state) {
        if (Parallel) {
            kernels::accumulate_bm25(in.postings, 1.3, in.lengths, 110.0, {}, scores);
        } else {
            kernels::serial::accumulate_bm25(in.postings, 1.3, in.lengths, 110.0, {}, scores);
        }
        benchmark::DoNotOptimize(scores.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * in.postings.size()));
}

template <bool Parallel>
void BM_Embed(benchmark::State& state) {
    const auto texts = random_texts(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto m = Parallel ? kernels::embed_batch(texts) : kernels::serial::embed_batch(texts);
        benchmark::DoNotOptimize(m.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * texts.size()));
}

template <bool Parallel>
void BM_Logistic(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    std::vector<double> features(rows * 6);
    std::mt19937_64 rng(4);
    for (auto& f : features) f = static_cast<double>(rng() % 1000) / 1000.0;
    const std::vector<double> w = {2.0, 4.0, 1.5, 3.0, 0.5, 1.5};
    for (auto _ : state) {
        auto s = Parallel ? kernels::logistic_scores(features, w, -4.5)
                          : kernels::serial::logistic_scores(features, w, -4.5);
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}

}  // namespace

BENCHMARK(BM_Cosine<true>)->Arg(10000)->Arg(100000);
BENCHMARK(BM_Cosine<false>)->Arg(10000)->Arg(100000);
BENCHMARK(BM_Bm25<true>)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_Bm25<false>)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_Embed<true>)->Arg(1000);
BENCHMARK(BM_Embed<false>)->Arg(1000);
BENCHMARK(BM_Logistic<true>)->Arg(100000);
BENCHMARK(BM_Logistic<false>)->Arg(100000);

BENCHMARK_MAIN();
