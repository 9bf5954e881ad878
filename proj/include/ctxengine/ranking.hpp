#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/retrieval.hpp"

namespace ctxengine {

inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "bm25_norm", "cosine", "graph_norm", "lexical_overlap", "path_affinity", "retriever_hits"};

struct FeatureVector {
    double bm25_norm = 0.0;        // [0, 1], min-max within the pool
    double cosine = 0.0;           // [-1, 1]
    double graph_norm = 0.0;       // [0, 1], min-max within the pool
    double lexical_overlap = 0.0;  // [0, 1]
    double path_affinity = 0.0;    // 0 or 1
    double retriever_hits = 0.0;   // {0, 1/3, 2/3, 1}

    [[nodiscard]] std::array<double, kFeatureCount> values() const noexcept {
        return {bm25_norm, cosine, graph_norm, lexical_overlap, path_affinity, retriever_hits};
    }
    [[nodiscard]] static FeatureVector from_values(std::span<const double> v);
    bool operator==(const FeatureVector&) const = default;
};

/// |unique query terms present in the item| / |unique query terms|; 0 for a termless query.
[[nodiscard]] double lexical_overlap(std::string_view query, std::string_view item_text);

/// 1 when `item_path` lives in the same directory as `active_file`.
[[nodiscard]] double path_affinity(std::string_view item_path, std::string_view active_file);

/// Throws std::invalid_argument if `item` is not in the pool's candidate union.
[[nodiscard]] FeatureVector featurize(const Query& query, const ContextItem& item, const CandidatePool& pool);

struct RankerModel {
    static constexpr int kVersion = 1;
    std::array<double, kFeatureCount> weights{};
    double bias = 0.0;

    /// Hand-set weights used when no trained model is configured.
    [[nodiscard]] static RankerModel builtin_default();

    [[nodiscard]] std::string to_json() const;
    /// Throws std::invalid_argument on malformed input or a feature-name mismatch.
    [[nodiscard]] static RankerModel from_json(std::string_view text);

    bool operator==(const RankerModel&) const = default;
};

/// sigmoid(weights . fv + bias)
[[nodiscard]] double score(const RankerModel& model, const FeatureVector& fv);

struct LabeledExample {
    std::string query;
    ItemId item_id = 0;
    int label = 0;
};

struct TrainingRow {
    FeatureVector features;
    int label = 0;
};

struct TrainParams {
    double learning_rate = 2.0;
    std::uint32_t epochs = 200;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
};

struct TrainResult {
    RankerModel model;
    std::vector<double> loss_history;  // epochs + 1 entries; [0] is the loss at initialization
};

/// Raised for training data a model cannot be fit to (e.g. a single class).
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Objective: mean log loss + l2/2 * |w|^2 (bias unregularized), minimized by
/// full-batch gradient descent. Single-threaded and bit-reproducible.
[[nodiscard]] TrainResult train(std::span<const TrainingRow> rows, const TrainParams& params = {});

/// Objective value at the given model; the quantity reported in loss_history.
[[nodiscard]] double training_loss(std::span<const TrainingRow> rows, const RankerModel& model, double l2);

/// Retrieves each example's query against `index` and featurizes the item.
/// Items the retrievers did not return get 0 for every retriever feature.
[[nodiscard]] std::vector<TrainingRow> featurize_examples(const CorpusIndex& index,
                                                          std::span<const LabeledExample> examples,
                                                          const RetrievalConfig& config = {});

[[nodiscard]] double accuracy(std::span<const TrainingRow> rows, const RankerModel& model, double threshold = 0.5);

struct ScoredItem {
    ItemId item_id = 0;
    double score = 0.0;
    std::uint32_t token_count = 0;

    bool operator==(const ScoredItem&) const = default;
};

struct ScoreThreshold {
    double tau = 0.5;
};
struct TokenBudget {
    std::uint64_t budget = 0;
};
using SelectionPolicy = std::variant<ScoreThreshold, TokenBudget>;

[[nodiscard]] std::string describe(const SelectionPolicy& policy);

struct RankedSelection {
    std::vector<ScoredItem> items;  // descending score, ties by ascending item_id
    std::uint64_t total_tokens = 0;
    SelectionPolicy policy_used;
};

/// Threshold keeps every item with score >= tau. Budget walks items in
/// descending score order and skips any item that would overflow the budget.
/// Throws std::invalid_argument for tau outside [0, 1].
[[nodiscard]] RankedSelection select(std::span<const ScoredItem> scored, const SelectionPolicy& policy);

struct RankedCandidate {
    ScoredItem scored;
    FeatureVector features;
};

/// Featurizes and scores every item in the pool's candidate union; ordered by
/// descending score, ties by ascending item_id.
[[nodiscard]] std::vector<RankedCandidate> rank_pool(const CorpusIndex& index, const CandidatePool& pool,
                                                     const RankerModel& model);

}  // namespace ctxengine
