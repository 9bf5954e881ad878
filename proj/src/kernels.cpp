#include "ctxengine/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ctxengine::kernels {

namespace {

// Below these sizes the fork/join cost dominates.
constexpr std::size_t kMinParallelRows = 2048;
constexpr std::size_t kMinParallelPostings = 4096;

double row_logit(const double* row, std::span<const double> weights, double bias) noexcept {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * row[j];
    return z;
}

}  // namespace

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<double> cosine_scores(std::span<const float> matrix, std::size_t dim, std::span<const float> query) {
    const std::size_t rows = dim == 0 ? 0 : matrix.size() / dim;
    std::vector<double> scores(rows);
    const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows >= kMinParallelRows)
    for (std::int64_t r = 0; r < n; ++r) {
        scores[static_cast<std::size_t>(r)] = dot(matrix.data() + static_cast<std::size_t>(r) * dim, query.data(), dim);
    }
    return scores;
}

void accumulate_bm25(std::span<const Posting> postings, double idf, std::span<const std::uint32_t> doc_lengths,
                     double avg_len, const Bm25Params& params, std::span<double> scores) {
    const auto n = static_cast<std::int64_t>(postings.size());
#pragma omp parallel for schedule(static) if (postings.size() >= kMinParallelPostings)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& p = postings[static_cast<std::size_t>(i)];
        scores[p.item] += bm25_term_weight(idf, static_cast<double>(p.tf), static_cast<double>(doc_lengths[p.item]),
                                           avg_len, params);
    }
}

std::vector<float> embed_batch(std::span<const std::string> texts) {
    std::vector<float> out(texts.size() * kEmbeddingDim);
    const auto n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto e = embed(texts[static_cast<std::size_t>(i)]);
        std::copy(e.begin(), e.end(), out.begin() + i * static_cast<std::int64_t>(kEmbeddingDim));
    }
    return out;
}

std::vector<double> logistic_scores(std::span<const double> features, std::span<const double> weights, double bias) {
    const std::size_t dim = weights.size();
    const std::size_t rows = dim == 0 ? 0 : features.size() / dim;
    std::vector<double> out(rows);
    const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows >= kMinParallelRows)
    for (std::int64_t r = 0; r < n; ++r) {
        out[static_cast<std::size_t>(r)] = sigmoid(row_logit(features.data() + static_cast<std::size_t>(r) * dim, weights, bias));
    }
    return out;
}

namespace serial {

std::vector<double> cosine_scores(std::span<const float> matrix, std::size_t dim, std::span<const float> query) {
    const std::size_t rows = dim == 0 ? 0 : matrix.size() / dim;
    std::vector<double> scores(rows);
    for (std::size_t r = 0; r < rows; ++r) scores[r] = dot(matrix.data() + r * dim, query.data(), dim);
    return scores;
}

void accumulate_bm25(std::span<const Posting> postings, double idf, std::span<const std::uint32_t> doc_lengths,
                     double avg_len, const Bm25Params& params, std::span<double> scores) {
    for (const auto& p : postings) {
        scores[p.item] += bm25_term_weight(idf, static_cast<double>(p.tf), static_cast<double>(doc_lengths[p.item]),
                                           avg_len, params);
    }
}

std::vector<float> embed_batch(std::span<const std::string> texts) {
    std::vector<float> out;
    out.reserve(texts.size() * kEmbeddingDim);
    for (const auto& t : texts) {
        const auto e = embed(t);
        out.insert(out.end(), e.begin(), e.end());
    }
    return out;
}

std::vector<double> logistic_scores(std::span<const double> features, std::span<const double> weights, double bias) {
    const std::size_t dim = weights.size();
    const std::size_t rows = dim == 0 ? 0 : features.size() / dim;
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = sigmoid(row_logit(features.data() + r * dim, weights, bias));
    return out;
}

}  // namespace serial

}  // namespace ctxengine::kernels
