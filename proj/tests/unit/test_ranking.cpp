#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ctxengine/ranking.hpp"
#include "ctxengine/synthetic.hpp"
#include "helpers.hpp"

using namespace ctxengine;

namespace {

CandidatePool toy_pool(const CorpusIndex& index, std::optional<std::string> active = std::nullopt) {
    Query q;
    q.text = "binary search";
    q.top_n_per_retriever = 10;
    q.active_file = std::move(active);
    return retrieve(index, q);
}

std::vector<TrainingRow> rows_labeled_by_cosine(std::uint64_t seed, std::size_t n) {
    SeededRng rng(seed);
    std::vector<TrainingRow> rows;
    while (rows.size() < n) {
        FeatureVector fv;
        fv.bm25_norm = rng.unit();
        fv.cosine = rng.uniform(-1.0, 1.0);
        fv.graph_norm = rng.unit();
        fv.lexical_overlap = rng.unit();
        fv.path_affinity = rng.chance(0.5) ? 1.0 : 0.0;
        fv.retriever_hits = static_cast<double>(rng.below(4)) / 3.0;
        if (std::abs(fv.cosine - 0.5) < 0.05) continue;
        rows.push_back({fv, fv.cosine > 0.5 ? 1 : 0});
    }
    return rows;
}

std::vector<ItemId> ids_of(const RankedSelection& s) {
    std::vector<ItemId> out;
    for (const auto& it : s.items) out.push_back(it.item_id);
    return out;
}

std::vector<ScoredItem> random_pool(std::mt19937_64& rng) {
    std::vector<ScoredItem> pool(rng() % 30);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        pool[i].item_id = static_cast<ItemId>(i);
        // coarse scores so ties are common
        pool[i].score = static_cast<double>(rng() % 11) / 10.0;
        pool[i].token_count = static_cast<std::uint32_t>(rng() % 120);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    return pool;
}

}  // namespace

TEST(Featurize, ToyPoolHandNormalized) {
    const auto index = ingest_repo(ctxe_test::asset("toy_corpus"));
    const auto pool = toy_pool(index);
    // BM25 scores 0.89428 (a), 0.48234 (b), 0.65782 (c); min-max within pool
    const auto fc = featurize(pool.query, index.item(2), pool);
    EXPECT_NEAR(fc.bm25_norm, 0.4259883735561316, 1e-12);
    EXPECT_DOUBLE_EQ(featurize(pool.query, index.item(0), pool).bm25_norm, 1.0);
    EXPECT_DOUBLE_EQ(featurize(pool.query, index.item(1), pool).bm25_norm, 0.0);
    // plain text has no symbols, so graph contributes nothing
    EXPECT_DOUBLE_EQ(fc.graph_norm, 0.0);
    EXPECT_DOUBLE_EQ(fc.retriever_hits, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(fc.lexical_overlap, 0.5);
    EXPECT_DOUBLE_EQ(featurize(pool.query, index.item(0), pool).lexical_overlap, 1.0);
    EXPECT_EQ(fc.cosine, pool.find(RetrieverTag::semantic, 2)->raw_score);
    EXPECT_DOUBLE_EQ(fc.path_affinity, 0.0);
}

TEST(Featurize, AllThreeRetrieversGiveFullHits) {
    const auto index = ctxe_test::index_of({{"src/a.py", "def parse_config(path):\n    return path\n"},
                                            {"src/b.py", "def unrelated():\n    return 0\n"}});
    Query q;
    q.text = "parse_config";
    const auto pool = retrieve(index, q);
    const auto fv = featurize(q, index.item(0), pool);
    EXPECT_DOUBLE_EQ(fv.retriever_hits, 1.0);
    EXPECT_DOUBLE_EQ(fv.lexical_overlap, 1.0);
    // a single graph hit normalizes to 1
    EXPECT_DOUBLE_EQ(fv.graph_norm, 1.0);
}

TEST(Featurize, ItemOutsidePoolThrows) {
    const auto index = ctxe_test::index_of({{"a.txt", "alpha\n"}, {"b.txt", "(\n"}});
    Query q;
    q.text = "alpha";
    const auto pool = retrieve(index, q);
    // b.txt has only punctuation: no keyword hit and a zero embedding is still
    // returned by semantic search, so use a pool that excludes it explicitly
    CandidatePool narrow = pool;
    narrow.per_retriever[RetrieverTag::semantic].clear();
    EXPECT_THROW((void)featurize(q, index.item(1), narrow), std::invalid_argument);
}

TEST(Featurize, PathAffinity) {
    EXPECT_DOUBLE_EQ(path_affinity("src/a.py", "src/b.py"), 1.0);
    EXPECT_DOUBLE_EQ(path_affinity("src/a.py", "src/sub/b.py"), 0.0);
    EXPECT_DOUBLE_EQ(path_affinity("a.py", "b.py"), 1.0);
    EXPECT_DOUBLE_EQ(path_affinity("lib/a.py", "src/a.py"), 0.0);
    const auto index = ingest_repo(ctxe_test::asset("toy_corpus"));
    const auto pool = toy_pool(index, "x.txt");
    EXPECT_DOUBLE_EQ(featurize(pool.query, index.item(0), pool).path_affinity, 1.0);
}

TEST(Featurize, LexicalOverlap) {
    EXPECT_DOUBLE_EQ(lexical_overlap("Read FILE read", "read the file"), 1.0);
    EXPECT_DOUBLE_EQ(lexical_overlap("read file now", "read it"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(lexical_overlap("", "anything"), 0.0);
}

TEST(Featurize, RangesOnRandomPools) {
    const auto index = ingest_repo(ctxe_test::asset("fixture_repo"));
    for (const std::string text : {"stats_variance of samples", "circle area", "Polygon perimeter", "fixture"}) {
        Query q;
        q.text = text;
        q.active_file = "src/new.py";
        const auto pool = retrieve(index, q);
        for (const auto id : pool.union_ids()) {
            const auto fv = featurize(q, index.item(id), pool);
            for (const double v : fv.values()) EXPECT_TRUE(std::isfinite(v));
            EXPECT_GE(fv.bm25_norm, 0.0);
            EXPECT_LE(fv.bm25_norm, 1.0);
            EXPECT_GE(fv.graph_norm, 0.0);
            EXPECT_LE(fv.graph_norm, 1.0);
            EXPECT_GE(fv.cosine, -1.0 - 1e-9);
            EXPECT_LE(fv.cosine, 1.0 + 1e-9);
        }
    }
}

TEST(Score, Examples) {
    RankerModel zero;
    EXPECT_DOUBLE_EQ(score(zero, FeatureVector{}), 0.5);
    RankerModel m;
    m.weights = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    m.bias = 1.5;
    FeatureVector fv;
    fv.bm25_norm = 0.5;
    EXPECT_NEAR(score(m, fv), 0.8807970779778823, 1e-15);
}

TEST(Score, IncreasingInPositivelyWeightedFeature) {
    const auto m = RankerModel::builtin_default();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        ASSERT_GT(m.weights[f], 0.0);
        std::array<double, kFeatureCount> v{0.2, 0.1, 0.3, 0.4, 0.0, 1.0 / 3.0};
        const double before = score(m, FeatureVector::from_values(v));
        v[f] += 0.25;
        EXPECT_GT(score(m, FeatureVector::from_values(v)), before) << kFeatureNames[f];
    }
}

TEST(Model, JsonRoundTrip) {
    auto m = RankerModel::builtin_default();
    m.weights[1] = 0.1 + 0.2;  // not exactly representable in short decimal
    EXPECT_EQ(RankerModel::from_json(m.to_json()), m);
    EXPECT_NE(m.to_json().find("\"feature_names\""), std::string::npos);
    EXPECT_THROW((void)RankerModel::from_json("{}"), std::invalid_argument);
    EXPECT_THROW((void)RankerModel::from_json("not json"), std::invalid_argument);
    auto text = m.to_json();
    text.replace(text.find("cosine"), 6, "cosinf");
    EXPECT_THROW((void)RankerModel::from_json(text), std::invalid_argument);
}

TEST(Train, SeparableByCosine) {
    const auto all = rows_labeled_by_cosine(17, 2000);
    const std::vector<TrainingRow> train_rows(all.begin(), all.begin() + 1500);
    const std::vector<TrainingRow> test_rows(all.begin() + 1500, all.end());
    const auto result = train(train_rows, TrainParams{});
    EXPECT_GE(accuracy(test_rows, result.model), 0.95);
    EXPECT_EQ(result.loss_history.size(), 201u);
}

TEST(Train, LossNeverIncreasesAtDefaultRate) {
    const auto rows = generate_separable_rows(5, 800);
    const auto result = train(rows, TrainParams{});
    EXPECT_LE(result.loss_history[1], result.loss_history[0]);
    for (std::size_t i = 1; i < result.loss_history.size(); ++i) {
        EXPECT_LE(result.loss_history[i], result.loss_history[i - 1]) << "epoch " << i;
    }
    EXPECT_DOUBLE_EQ(result.loss_history.back(), training_loss(rows, result.model, TrainParams{}.l2));
}

TEST(Train, DuplicatingExamplesKeepsWeights) {
    const auto rows = generate_separable_rows(8, 300);
    std::vector<TrainingRow> doubled;
    for (const auto& r : rows) {
        doubled.push_back(r);
        doubled.push_back(r);
    }
    const auto a = train(rows, TrainParams{});
    const auto b = train(doubled, TrainParams{});
    for (std::size_t f = 0; f < kFeatureCount; ++f) EXPECT_NEAR(a.model.weights[f], b.model.weights[f], 1e-9);
    EXPECT_NEAR(a.model.bias, b.model.bias, 1e-9);
}

TEST(Train, SameSeedIsBitReproducible) {
    const auto rows = generate_separable_rows(2, 500);
    TrainParams p;
    p.seed = 99;
    const auto a = train(rows, p);
    const auto b = train(rows, p);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.model.to_json(), b.model.to_json());
    EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Train, SingleClassIsAnError) {
    std::vector<TrainingRow> rows(10);
    for (auto& r : rows) r.label = 1;
    EXPECT_THROW((void)train(rows, TrainParams{}), TrainingError);
    EXPECT_THROW((void)train(std::vector<TrainingRow>{}, TrainParams{}), TrainingError);
}

TEST(Select, BudgetZeroAndTauZero) {
    const std::vector<ScoredItem> pool = {{1, 0.9, 50}, {2, 0.1, 5}, {3, 0.0, 1}};
    EXPECT_TRUE(select(pool, TokenBudget{0}).items.empty());
    const auto all = select(pool, ScoreThreshold{0.0});
    EXPECT_EQ(ids_of(all), (std::vector<ItemId>{1, 2, 3}));
    EXPECT_EQ(all.total_tokens, 56u);
}

TEST(Select, GreedyWithSkipExample) {
    const std::vector<ScoredItem> pool = {{1, 0.9, 50}, {2, 0.8, 60}, {3, 0.7, 10}};
    const auto s = select(pool, TokenBudget{70});
    EXPECT_EQ(ids_of(s), (std::vector<ItemId>{1, 3}));
    EXPECT_EQ(s.total_tokens, 60u);
    EXPECT_TRUE(std::holds_alternative<TokenBudget>(s.policy_used));
}

TEST(Select, ThresholdIsInclusive) {
    const std::vector<ScoredItem> pool = {{4, 0.5, 1}, {2, 0.49, 1}, {7, 0.5, 1}, {1, 0.8, 1}};
    EXPECT_EQ(ids_of(select(pool, ScoreThreshold{0.5})), (std::vector<ItemId>{1, 4, 7}));
    EXPECT_THROW((void)select(pool, ScoreThreshold{1.5}), std::invalid_argument);
    EXPECT_THROW((void)select(pool, ScoreThreshold{-0.1}), std::invalid_argument);
    EXPECT_THROW((void)select(pool, ScoreThreshold{std::nan("")}), std::invalid_argument);
}

TEST(Select, BudgetGrowthCanEvictUnderGreedySkip) {
    // with a fixed score order, a larger budget lets an earlier item in and
    // the cheaper later item no longer fits
    const std::vector<ScoredItem> pool = {{1, 0.9, 50}, {2, 0.8, 60}, {3, 0.7, 10}};
    EXPECT_EQ(ids_of(select(pool, TokenBudget{60})), (std::vector<ItemId>{1, 3}));
    EXPECT_EQ(ids_of(select(pool, TokenBudget{110})), (std::vector<ItemId>{1, 2}));
}

TEST(Select, Properties) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto pool = random_pool(rng);
        const std::uint64_t budget = rng() % 400;
        const auto s = select(pool, TokenBudget{budget});
        ASSERT_LE(s.total_tokens, budget);
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < s.items.size(); ++i) {
            sum += s.items[i].token_count;
            if (i > 0) {
                const auto& a = s.items[i - 1];
                const auto& b = s.items[i];
                ASSERT_TRUE(a.score > b.score || (a.score == b.score && a.item_id < b.item_id));
            }
        }
        ASSERT_EQ(sum, s.total_tokens);

        // positive rescaling keeps the budget selection and its order
        auto scaled = pool;
        for (auto& it : scaled) it.score *= 0.37;
        ASSERT_EQ(ids_of(select(scaled, TokenBudget{budget})), ids_of(s));
        const double tau = static_cast<double>(rng() % 11) / 10.0;
        ASSERT_EQ(ids_of(select(scaled, ScoreThreshold{tau * 0.37})), ids_of(select(pool, ScoreThreshold{tau})));
    }
}

TEST(RankPool, OrderedAndScoredByModel) {
    const auto index = ingest_repo(ctxe_test::asset("fixture_repo"));
    Query q;
    q.text = "running variance of samples stats_push";
    const auto pool = retrieve(index, q);
    const auto model = RankerModel::builtin_default();
    const auto ranked = rank_pool(index, pool, model);
    ASSERT_EQ(ranked.size(), pool.union_ids().size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& r = ranked[i];
        EXPECT_DOUBLE_EQ(r.scored.score, score(model, featurize(q, index.item(r.scored.item_id), pool)));
        EXPECT_EQ(r.scored.token_count, index.item(r.scored.item_id).token_count);
        if (i > 0) {
            EXPECT_GE(ranked[i - 1].scored.score, r.scored.score);
        }
    }
}

TEST(FeaturizeExamples, UnretrievedItemsGetZeroRetrieverFeatures) {
    const auto index = ingest_repo(ctxe_test::asset("toy_corpus"));
    RetrievalConfig cfg;
    cfg.use_semantic = false;
    const std::vector<LabeledExample> ex = {{"binary search", 0, 1}, {"linear", 2, 0}};
    const auto rows = featurize_examples(index, ex, cfg);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].label, 1);
    EXPECT_DOUBLE_EQ(rows[0].features.bm25_norm, 1.0);
    EXPECT_DOUBLE_EQ(rows[1].features.bm25_norm, 0.0);
    EXPECT_DOUBLE_EQ(rows[1].features.retriever_hits, 0.0);
}
