#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/ranking.hpp"
#include "ctxengine/retrieval.hpp"

namespace ctxengine {

struct LabeledSpan {
    std::string path;
    std::uint32_t start_line = 1;
    std::uint32_t end_line = 1;

    bool operator==(const LabeledSpan&) const = default;
};

struct EvalQuery {
    std::string id;
    std::string text;
    std::vector<LabeledSpan> relevant_spans;
    std::optional<std::string> active_file;

    bool operator==(const EvalQuery&) const = default;
};

/// One EvalQuery per line. Blank lines are skipped. Throws InputError naming
/// every malformed line.
[[nodiscard]] std::vector<EvalQuery> parse_dataset(std::string_view jsonl);
[[nodiscard]] std::string dataset_to_jsonl(std::span<const EvalQuery> dataset);

/// Problems that make a dataset unusable against this index, one string per
/// offending query. Empty means valid.
[[nodiscard]] std::vector<std::string> validate_dataset(const CorpusIndex& index, std::span<const EvalQuery> dataset);

/// Same path and overlap / min(len(item), len(label)) >= 0.5.
[[nodiscard]] bool span_match(const ContextItem& item, const LabeledSpan& label);
[[nodiscard]] double span_overlap_ratio(const LineSpan& a, const LineSpan& b);

struct PipelineConfig {
    RetrievalConfig retrieval;
    RankerModel model = RankerModel::builtin_default();
    SelectionPolicy policy = ScoreThreshold{0.5};
    std::vector<std::size_t> recall_cutoffs{5, 10, 25, 50};
    std::vector<std::size_t> precision_cutoffs{5, 10};
    std::size_t complementarity_n = 50;
};

struct ListMetrics {
    std::map<std::size_t, double> recall_at;
    std::map<std::size_t, double> precision_at;
    double mrr = 0.0;
    double recall_full = 0.0;  // over the whole list

    bool operator==(const ListMetrics&) const = default;
};

/// Metrics of one ranked item list against a label set.
[[nodiscard]] ListMetrics list_metrics(const CorpusIndex& index, std::span<const ItemId> ranked,
                                       std::span<const LabeledSpan> labels, std::span<const std::size_t> recall_cutoffs,
                                       std::span<const std::size_t> precision_cutoffs);

/// Fraction of labels matched by at least one of the items.
[[nodiscard]] double label_recall(const CorpusIndex& index, std::span<const ItemId> items,
                                  std::span<const LabeledSpan> labels);

/// Fraction of items matching at least one label; 0 for no items.
[[nodiscard]] double item_precision(const CorpusIndex& index, std::span<const ItemId> items,
                                    std::span<const LabeledSpan> labels);

inline constexpr std::array<std::string_view, 5> kEvaluatedLists = {"keyword", "semantic", "graph", "fused", "pipeline"};

struct QueryReport {
    std::string id;
    std::map<std::string, ListMetrics> lists;
    double union_recall = 0.0;
    std::map<std::string, double> complementarity;  // "a|b" for retriever pairs a < b
    std::size_t selection_size = 0;
    double selection_precision = 0.0;
    double fused_precision_at_selection = 0.0;  // fused top-|selection|
};

struct EvalReport {
    std::string config_echo;  // JSON of the pipeline configuration
    std::vector<QueryReport> queries;
    std::map<std::string, ListMetrics> aggregate;
    double union_recall = 0.0;
    /// Mean over queries; symmetric with a zero diagonal, rows/cols in kRetrievers order.
    std::array<std::array<double, 3>, 3> complementarity{};
    std::size_t queries_with_selection = 0;
    double selection_precision = 0.0;             // mean over queries with a non-empty selection
    double fused_precision_at_selection = 0.0;    // same queries

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string to_table() const;
};

/// Throws InputError if the dataset does not validate.
[[nodiscard]] EvalReport evaluate(const CorpusIndex& index, std::span<const EvalQuery> dataset,
                                  const PipelineConfig& config = {});

[[nodiscard]] std::string pipeline_config_json(const PipelineConfig& config);

}  // namespace ctxengine
