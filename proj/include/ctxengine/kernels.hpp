#pragma once

// Data-parallel inner loops of the engine. Each kernel has an OpenMP
// implementation and a serial reference in `kernels::serial` with the same
// per-element arithmetic, so results are bit-identical for any thread count.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctxengine/embed.hpp"
#include "ctxengine/items.hpp"

namespace ctxengine::kernels {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Term weight of one posting: idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len)).
[[nodiscard]] inline double bm25_term_weight(double idf, double tf, double doc_len, double avg_len,
                                             const Bm25Params& p) noexcept {
    const double norm = avg_len > 0.0 ? doc_len / avg_len : 0.0;
    return idf * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

/// Dot product of a float row with a float query, accumulated in double in
/// index order.
[[nodiscard]] inline double dot(const float* a, const float* b, std::size_t dim) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

/// `matrix` is row-major with `dim` columns; returns one score per row.
[[nodiscard]] std::vector<double> cosine_scores(std::span<const float> matrix, std::size_t dim,
                                                std::span<const float> query);

/// scores[p.item] += bm25_term_weight(idf, p.tf, doc_lengths[p.item], ...)
/// for every posting. Item ids within one posting list are distinct.
void accumulate_bm25(std::span<const Posting> postings, double idf, std::span<const std::uint32_t> doc_lengths,
                     double avg_len, const Bm25Params& params, std::span<double> scores);

/// Row-major n x kEmbeddingDim matrix of embed(texts[i]).
[[nodiscard]] std::vector<float> embed_batch(std::span<const std::string> texts);

/// sigmoid(weights . row + bias) for each row of a row-major feature matrix.
[[nodiscard]] std::vector<double> logistic_scores(std::span<const double> features, std::span<const double> weights,
                                                  double bias);

[[nodiscard]] double sigmoid(double z) noexcept;

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
[[nodiscard]] int max_threads() noexcept;

namespace serial {

[[nodiscard]] std::vector<double> cosine_scores(std::span<const float> matrix, std::size_t dim,
                                                std::span<const float> query);
void accumulate_bm25(std::span<const Posting> postings, double idf, std::span<const std::uint32_t> doc_lengths,
                     double avg_len, const Bm25Params& params, std::span<double> scores);
[[nodiscard]] std::vector<float> embed_batch(std::span<const std::string> texts);
[[nodiscard]] std::vector<double> logistic_scores(std::span<const double> features, std::span<const double> weights,
                                                  double bias);

}  // namespace serial

}  // namespace ctxengine::kernels
