#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/kernels.hpp"

namespace ctxengine {

enum class RetrieverTag : std::uint8_t { keyword, semantic, graph, fused };

[[nodiscard]] std::string_view to_string(RetrieverTag tag);
[[nodiscard]] std::optional<RetrieverTag> parse_retriever_tag(std::string_view name);

inline constexpr RetrieverTag kRetrievers[] = {RetrieverTag::keyword, RetrieverTag::semantic, RetrieverTag::graph};

struct Query {
    std::string text;
    std::size_t top_n_per_retriever = 50;
    std::optional<std::string> active_file;  // repo-relative path of the file being edited
};

/// `rank` is 1-based within its list. Lists are ordered by descending
/// raw_score with ties broken by ascending item_id.
struct Candidate {
    ItemId item_id = 0;
    RetrieverTag retriever = RetrieverTag::keyword;
    double raw_score = 0.0;
    std::uint32_t rank = 0;

    bool operator==(const Candidate&) const = default;
};

using CandidateList = std::vector<Candidate>;

struct CandidatePool {
    Query query;
    std::map<RetrieverTag, CandidateList> per_retriever;
    CandidateList fused;

    /// Item ids returned by any retriever, ascending.
    [[nodiscard]] std::vector<ItemId> union_ids() const;
    [[nodiscard]] const Candidate* find(RetrieverTag tag, ItemId id) const;
    [[nodiscard]] const CandidateList& list(RetrieverTag tag) const;
};

struct RetrievalConfig {
    std::size_t top_n = 50;
    double rrf_k = 60.0;
    kernels::Bm25Params bm25{};
    bool use_keyword = true;
    bool use_semantic = true;
    bool use_graph = true;
};

/// Robertson-Sparck Jones idf with the +1 inside the log, so it is always positive.
[[nodiscard]] double bm25_idf(std::size_t item_count, std::size_t document_frequency);

[[nodiscard]] CandidateList keyword_search(const CorpusIndex& index, std::string_view query, std::size_t top_n,
                                           const kernels::Bm25Params& params = {});

/// Exact cosine ranking over every item embedding.
[[nodiscard]] CandidateList semantic_search(const CorpusIndex& index, std::string_view query, std::size_t top_n);

/// Symbol-table lookup of the query's identifiers: +2.0 per matched symbol
/// an item defines, +1.0 per matched symbol it references, and +0.5 per
/// symbol an item defines that a matched definition item references.
[[nodiscard]] CandidateList graph_search(const CorpusIndex& index, std::string_view query, std::size_t top_n);

/// Identifiers from a query that graph_search looks up (stopwords removed).
[[nodiscard]] std::vector<std::string> graph_query_identifiers(std::string_view query);

/// Reciprocal-rank fusion: score = sum over lists of 1 / (k + rank).
[[nodiscard]] CandidateList fuse(std::span<const CandidateList> lists, double k = 60.0);

/// Jaccard distance of the top-n item id sets. Requires n >= 1.
[[nodiscard]] double complementarity(const CandidateList& a, const CandidateList& b, std::size_t n);

[[nodiscard]] CandidatePool retrieve(const CorpusIndex& index, const Query& query, const RetrievalConfig& config = {});

/// One JSON object per line: {query_id, retriever, item_id, score, rank}.
[[nodiscard]] std::string candidates_to_jsonl(std::string_view query_id, const CandidatePool& pool);

/// Sort (item, score) pairs by descending score then ascending id, keep the
/// first top_n, and assign ranks.
[[nodiscard]] CandidateList rank_scores(std::vector<std::pair<ItemId, double>> scored, RetrieverTag tag,
                                        std::size_t top_n);

}  // namespace ctxengine
