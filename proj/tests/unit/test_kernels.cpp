#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "ctxengine/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ctxengine;

namespace {

template <typename T>
bool bitwise_equal(const std::vector<T>& a, const std::vector<T>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

class Kernels : public ::testing::TestWithParam<int> {
protected:
    void SetUp() override {
#ifdef _OPENMP
        saved_ = omp_get_max_threads();
        omp_set_num_threads(GetParam());
#endif
    }
    void TearDown() override {
#ifdef _OPENMP
        omp_set_num_threads(saved_);
#endif
    }
    int saved_ = 1;
};

}  // namespace

TEST_P(Kernels, CosineMatchesSerial) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    const std::size_t dim = 64;
    for (const std::size_t rows : {0u, 1u, 7u, 5000u}) {
        std::vector<float> m(rows * dim);
        std::vector<float> q(dim);
        for (auto& x : m) x = u(rng);
        for (auto& x : q) x = u(rng);
        EXPECT_TRUE(bitwise_equal(kernels::cosine_scores(m, dim, q), kernels::serial::cosine_scores(m, dim, q)));
    }
}

TEST_P(Kernels, Bm25MatchesSerial) {
    std::mt19937_64 rng(2);
    const std::size_t n = 20000;
    std::vector<std::uint32_t> lens(n);
    for (auto& l : lens) l = static_cast<std::uint32_t>(1 + rng() % 300);
    std::vector<Posting> postings;
    for (ItemId i = 0; i < n; ++i) {
        if (rng() % 3 == 0) postings.push_back({i, static_cast<std::uint32_t>(1 + rng() % 5)});
    }
    std::vector<double> a(n, 0.25);
    std::vector<double> b(n, 0.25);
    kernels::accumulate_bm25(postings, 1.7, lens, 120.0, {}, a);
    kernels::serial::accumulate_bm25(postings, 1.7, lens, 120.0, {}, b);
    EXPECT_TRUE(bitwise_equal(a, b));
}

TEST_P(Kernels, EmbedBatchMatchesSerial) {
    std::vector<std::string> texts;
    for (int i = 0; i < 300; ++i) texts.push_back("item " + std::to_string(i) + " read_file(path) -> bytes");
    texts.emplace_back("");
    EXPECT_TRUE(bitwise_equal(kernels::embed_batch(texts), kernels::serial::embed_batch(texts)));
}

TEST_P(Kernels, LogisticMatchesSerial) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> feats(6 * 9000);
    for (auto& x : feats) x = u(rng);
    const std::vector<double> w = {0.5, -1.0, 2.0, 0.25, 3.0, -0.75};
    EXPECT_TRUE(bitwise_equal(kernels::logistic_scores(feats, w, -0.3), kernels::serial::logistic_scores(feats, w, -0.3)));
}

INSTANTIATE_TEST_SUITE_P(Threads, Kernels, ::testing::Values(1, 2, 4));

TEST(Sigmoid, Values) {
    EXPECT_DOUBLE_EQ(kernels::sigmoid(0.0), 0.5);
    EXPECT_NEAR(kernels::sigmoid(2.0), 0.8807970779778823, 1e-15);
    EXPECT_GT(kernels::sigmoid(-800.0), -1e-300);
    EXPECT_LE(kernels::sigmoid(800.0), 1.0);
    EXPECT_NEAR(kernels::sigmoid(-2.0), 1.0 - 0.8807970779778823, 1e-15);
}

TEST(Bm25Weight, Formula) {
    // idf 1, tf 1, doc at average length: (k1 + 1) / (1 + k1)
    EXPECT_DOUBLE_EQ(kernels::bm25_term_weight(1.0, 1.0, 10.0, 10.0, {}), 1.0);
    EXPECT_NEAR(kernels::bm25_term_weight(2.0, 3.0, 20.0, 10.0, {}), 2.0 * 3.0 * 2.2 / (3.0 + 1.2 * 1.75), 1e-15);
}
