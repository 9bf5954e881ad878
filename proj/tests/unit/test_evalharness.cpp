#include <gtest/gtest.h>

#include <json.hpp>

#include "ctxengine/error.hpp"
#include "ctxengine/evalharness.hpp"
#include "ctxengine/synthetic.hpp"
#include "helpers.hpp"

using namespace ctxengine;

namespace {

CorpusIndex six_files() {
    std::vector<std::pair<std::string, std::string>> files;
    for (int i = 0; i < 6; ++i) files.emplace_back("f" + std::to_string(i) + ".txt", "word" + std::to_string(i) + "\n");
    return ctxe_test::index_of(files);
}

ContextItem item_at(std::string path, std::uint32_t a, std::uint32_t b) {
    ContextItem it;
    it.path = std::move(path);
    it.span = {a, b};
    return it;
}

const std::vector<std::size_t> kRecall = {5, 10, 25, 50};
const std::vector<std::size_t> kPrecision = {5, 10};

}  // namespace

TEST(SpanMatch, Examples) {
    EXPECT_TRUE(span_match(item_at("a.py", 3, 9), {"a.py", 3, 9}));
    EXPECT_FALSE(span_match(item_at("a.py", 1, 10), {"a.py", 11, 20}));
    // overlap [35,40] = 6 lines, shorter span has 10 lines
    EXPECT_DOUBLE_EQ(span_overlap_ratio({1, 40}, {35, 44}), 0.6);
    EXPECT_TRUE(span_match(item_at("a.py", 1, 40), {"a.py", 35, 44}));
    EXPECT_FALSE(span_match(item_at("b.py", 1, 40), {"a.py", 35, 44}));
    // boundary: exactly half matches, just under does not
    EXPECT_TRUE(span_match(item_at("a.py", 1, 10), {"a.py", 6, 15}));
    EXPECT_FALSE(span_match(item_at("a.py", 1, 10), {"a.py", 7, 16}));
}

TEST(ListMetrics, HandComputed) {
    const auto index = six_files();
    const std::vector<LabeledSpan> labels = {{"f2.txt", 1, 1}, {"f5.txt", 1, 1}};
    const std::vector<ItemId> ranked = {0, 1, 2, 3, 4};
    const auto m = list_metrics(index, ranked, labels, kRecall, kPrecision);
    EXPECT_DOUBLE_EQ(m.recall_at.at(5), 0.5);
    EXPECT_DOUBLE_EQ(m.mrr, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.precision_at.at(5), 1.0 / 5.0);
    EXPECT_DOUBLE_EQ(m.precision_at.at(10), 1.0 / 10.0);
    EXPECT_DOUBLE_EQ(m.recall_full, 0.5);
}

TEST(ListMetrics, FullCoverageAndEmpty) {
    const auto index = six_files();
    const std::vector<LabeledSpan> labels = {{"f1.txt", 1, 1}, {"f4.txt", 1, 1}};
    const std::vector<ItemId> all = {4, 1};
    const auto full = list_metrics(index, all, labels, kRecall, kPrecision);
    for (const auto n : kRecall) EXPECT_DOUBLE_EQ(full.recall_at.at(n), 1.0);
    EXPECT_DOUBLE_EQ(full.mrr, 1.0);
    const auto none = list_metrics(index, std::vector<ItemId>{}, labels, kRecall, kPrecision);
    for (const auto n : kRecall) EXPECT_DOUBLE_EQ(none.recall_at.at(n), 0.0);
    for (const auto k : kPrecision) EXPECT_DOUBLE_EQ(none.precision_at.at(k), 0.0);
    EXPECT_DOUBLE_EQ(none.mrr, 0.0);
}

TEST(Dataset, RoundTripAndErrors) {
    const std::vector<EvalQuery> ds = {{"q1", "find \"it\"", {{"a.py", 1, 5}}, std::nullopt},
                                       {"q2", "other", {{"b.py", 2, 3}, {"a.py", 7, 9}}, "a.py"}};
    EXPECT_EQ(parse_dataset(dataset_to_jsonl(ds)), ds);
    try {
        (void)parse_dataset("{\"id\":\"ok\",\"text\":\"x\",\"relevant_spans\":[{\"path\":\"a\",\"start_line\":1,"
                            "\"end_line\":1}]}\n\nnot json\n{\"id\":\"q\"}\n");
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
    }
}

TEST(Dataset, ValidationAgainstCorpus) {
    const auto index = six_files();
    const std::vector<EvalQuery> ds = {{"good", "x", {{"f1.txt", 1, 1}}, std::nullopt},
                                       {"ghost", "x", {{"nope.txt", 1, 1}}, std::nullopt},
                                       {"empty", "x", {}, std::nullopt},
                                       {"good", "x", {{"f1.txt", 1, 1}}, std::nullopt},
                                       {"backwards", "x", {{"f1.txt", 5, 2}}, std::nullopt}};
    const auto problems = validate_dataset(index, ds);
    EXPECT_EQ(problems.size(), 4u);
    EXPECT_THROW((void)evaluate(index, ds), InputError);
}

TEST(Evaluate, PropertiesOnSyntheticSubset) {
    SyntheticConfig sc;
    sc.lexical_queries = 8;
    sc.paraphrase_queries = 8;
    sc.neutral_files = 20;
    sc.decoy_files = 30;
    const auto ds = generate_synthetic_dataset(3, sc);
    const auto index = build_index(ds.files, {});
    const auto report = evaluate(index, ds.queries);
    EXPECT_EQ(report.to_json(), evaluate(index, ds.queries).to_json());
    ASSERT_EQ(report.queries.size(), 16u);

    for (const auto& q : report.queries) {
        for (const auto& [name, m] : q.lists) {
            double prev = 0.0;
            for (const auto& [n, r] : m.recall_at) {
                EXPECT_GE(r, prev) << name;
                EXPECT_LE(r, 1.0);
                prev = r;
            }
            for (const auto& [k, p] : m.precision_at) {
                EXPECT_GE(p, 0.0);
                EXPECT_LE(p, 1.0);
            }
            EXPECT_GE(m.mrr, 0.0);
            EXPECT_LE(m.mrr, 1.0);
            EXPECT_LE(m.recall_full, q.union_recall + 1e-12) << name;
        }
    }
    // aggregate is the arithmetic mean
    double sum = 0.0;
    for (const auto& q : report.queries) sum += q.lists.at("fused").recall_at.at(50);
    EXPECT_NEAR(report.aggregate.at("fused").recall_at.at(50), sum / 16.0, 1e-12);

    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(report.complementarity[i][i], 0.0);
        for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(report.complementarity[i][j], report.complementarity[j][i]);
    }
    const auto j = nlohmann::json::parse(report.to_json());
    EXPECT_TRUE(j.contains("config"));
    EXPECT_TRUE(j.contains("aggregate"));
    EXPECT_NE(report.to_table().find("union recall"), std::string::npos);
}

TEST(Evaluate, EmptyRetrievalScoresZero) {
    const auto index = six_files();
    const std::vector<EvalQuery> ds = {{"q", "  ", {{"f1.txt", 1, 1}}, std::nullopt}};
    const auto report = evaluate(index, ds);
    for (const auto& [name, m] : report.aggregate) {
        EXPECT_DOUBLE_EQ(m.mrr, 0.0) << name;
        EXPECT_DOUBLE_EQ(m.recall_at.at(50), 0.0) << name;
        EXPECT_DOUBLE_EQ(m.precision_at.at(5), 0.0) << name;
    }
}
