#include "ctxengine/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "ctxengine/embed.hpp"
#include "ctxengine/text.hpp"

namespace ctxengine {

namespace {

const std::unordered_set<std::string_view>& query_stopwords() {
    static const std::unordered_set<std::string_view> words = {
        "a",     "an",   "and",   "are",   "as",    "at",    "be",   "by",   "can",  "code",  "defined",
        "do",    "does", "find",  "for",   "from",  "how",   "i",    "in",   "is",   "it",    "implemented",
        "me",    "of",   "on",    "or",    "show",  "that",  "the",  "this", "to",   "used",  "what",
        "when",  "where", "which", "who",  "why",   "with",  "we",   "you",  "there", "called", "implement",
        "implementation", "function", "method", "usage", "uses", "about", "into", "all", "any", "our"};
    return words;
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
    return a.item_id < b.item_id;
}

}  // namespace

std::string_view to_string(RetrieverTag tag) {
    switch (tag) {
        case RetrieverTag::keyword: return "keyword";
        case RetrieverTag::semantic: return "semantic";
        case RetrieverTag::graph: return "graph";
        case RetrieverTag::fused: return "fused";
    }
    return "fused";
}

std::optional<RetrieverTag> parse_retriever_tag(std::string_view name) {
    for (auto tag : {RetrieverTag::keyword, RetrieverTag::semantic, RetrieverTag::graph, RetrieverTag::fused}) {
        if (to_string(tag) == name) return tag;
    }
    return std::nullopt;
}

std::vector<ItemId> CandidatePool::union_ids() const {
    std::vector<ItemId> ids;
    for (const auto& [tag, list] : per_retriever) {
        for (const auto& c : list) ids.push_back(c.item_id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

const Candidate* CandidatePool::find(RetrieverTag tag, ItemId id) const {
    const auto& l = list(tag);
    const auto it = std::find_if(l.begin(), l.end(), [&](const Candidate& c) { return c.item_id == id; });
    return it == l.end() ? nullptr : &*it;
}

const CandidateList& CandidatePool::list(RetrieverTag tag) const {
    static const CandidateList empty;
    if (tag == RetrieverTag::fused) return fused;
    const auto it = per_retriever.find(tag);
    return it == per_retriever.end() ? empty : it->second;
}

CandidateList rank_scores(std::vector<std::pair<ItemId, double>> scored, RetrieverTag tag, std::size_t top_n) {
    CandidateList out;
    out.reserve(scored.size());
    for (const auto& [id, s] : scored) out.push_back({id, tag, s, 0});
    const auto keep = std::min(top_n, out.size());
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(), better);
    out.resize(keep);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<std::uint32_t>(i + 1);
    return out;
}

double bm25_idf(std::size_t item_count, std::size_t document_frequency) {
    const auto n = static_cast<double>(item_count);
    const auto df = static_cast<double>(document_frequency);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

CandidateList keyword_search(const CorpusIndex& index, std::string_view query, std::size_t top_n,
                             const kernels::Bm25Params& params) {
    const auto terms = unique_terms(query);
    if (terms.empty() || top_n == 0 || index.size() == 0) return {};
    std::vector<double> scores(index.size(), 0.0);
    std::vector<char> matched(index.size(), 0);
    const double avg = index.stats().average_item_tokens;
    for (const auto& term : terms) {
        const auto postings = index.postings(term);
        if (postings.empty()) continue;
        kernels::accumulate_bm25(postings, bm25_idf(index.size(), postings.size()), index.item_lengths(), avg, params,
                                 scores);
        for (const auto& p : postings) matched[p.item] = 1;
    }
    std::vector<std::pair<ItemId, double>> scored;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (matched[i]) scored.emplace_back(static_cast<ItemId>(i), scores[i]);
    }
    return rank_scores(std::move(scored), RetrieverTag::keyword, top_n);
}

CandidateList semantic_search(const CorpusIndex& index, std::string_view query, std::size_t top_n) {
    if (top_n == 0 || index.size() == 0) return {};
    const auto q = embed(query);
    if (is_zero(q)) return {};
    const auto scores = kernels::cosine_scores(index.embeddings(), kEmbeddingDim, q);
    std::vector<std::pair<ItemId, double>> scored;
    scored.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scored.emplace_back(static_cast<ItemId>(i), scores[i]);
    return rank_scores(std::move(scored), RetrieverTag::semantic, top_n);
}

std::vector<std::string> graph_query_identifiers(std::string_view query) {
    std::vector<std::string> out;
    std::set<std::string_view> seen;
    for_each_token(query, [&](std::string_view tok, bool word) {
        if (!word || tok.size() < 2) return;
        if (tok.front() >= '0' && tok.front() <= '9') return;
        if (query_stopwords().count(to_lower_ascii(tok)) != 0) return;
        if (seen.insert(tok).second) out.emplace_back(tok);
    });
    return out;
}

CandidateList graph_search(const CorpusIndex& index, std::string_view query, std::size_t top_n) {
    if (top_n == 0) return {};
    // every contribution is a multiple of 0.5, so accumulation order cannot change a score
    std::vector<double> scores(index.size(), 0.0);
    std::vector<ItemId> touched;
    auto add = [&](ItemId id, double w) {
        if (scores[id] == 0.0) touched.push_back(id);
        scores[id] += w;
    };
    auto unique_items = [](const std::vector<SymbolSite>& sites) {
        std::vector<ItemId> ids;
        ids.reserve(sites.size());
        for (const auto& s : sites) ids.push_back(s.item);
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    };
    std::set<std::string> matched;
    std::vector<ItemId> def_items;
    for (const auto& ident : graph_query_identifiers(query)) {
        const auto* entry = index.find_symbol(ident);
        if (entry == nullptr) continue;
        matched.insert(ident);
        const auto defs = unique_items(entry->defs);
        for (const auto id : defs) add(id, 2.0);
        for (const auto id : unique_items(entry->refs)) add(id, 1.0);
        def_items.insert(def_items.end(), defs.begin(), defs.end());
    }
    if (matched.empty()) return {};
    std::sort(def_items.begin(), def_items.end());
    def_items.erase(std::unique(def_items.begin(), def_items.end()), def_items.end());

    std::set<std::pair<std::uint32_t, ItemId>> expanded;
    for (const auto id : def_items) {
        for (const auto sym : index.referenced_symbols(id)) {
            if (matched.count(index.symbol_names()[sym]) != 0) continue;
            for (const auto& s : index.symbol_entries()[sym].defs) expanded.emplace(sym, s.item);
        }
    }
    for (const auto& [sym, item] : expanded) add(item, 0.5);

    std::vector<std::pair<ItemId, double>> scored;
    scored.reserve(touched.size());
    for (const auto id : touched) scored.emplace_back(id, scores[id]);
    return rank_scores(std::move(scored), RetrieverTag::graph, top_n);
}

CandidateList fuse(std::span<const CandidateList> lists, double k) {
    std::map<ItemId, std::vector<std::uint32_t>> ranks;
    for (const auto& list : lists) {
        for (const auto& c : list) ranks[c.item_id].push_back(c.rank);
    }
    std::vector<std::pair<ItemId, double>> scored;
    scored.reserve(ranks.size());
    for (auto& [id, r] : ranks) {
        // summing in rank order makes the result independent of list order
        std::sort(r.begin(), r.end());
        double s = 0.0;
        for (const auto rank : r) s += 1.0 / (k + static_cast<double>(rank));
        scored.emplace_back(id, s);
    }
    const auto n = scored.size();
    return rank_scores(std::move(scored), RetrieverTag::fused, n);
}

double complementarity(const CandidateList& a, const CandidateList& b, std::size_t n) {
    if (n < 1) throw std::invalid_argument("complementarity requires n >= 1");
    std::set<ItemId> sa;
    std::set<ItemId> sb;
    for (std::size_t i = 0; i < std::min(n, a.size()); ++i) sa.insert(a[i].item_id);
    for (std::size_t i = 0; i < std::min(n, b.size()); ++i) sb.insert(b[i].item_id);
    std::set<ItemId> uni = sa;
    uni.insert(sb.begin(), sb.end());
    if (uni.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto id : sa) inter += sb.count(id);
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni.size());
}

CandidatePool retrieve(const CorpusIndex& index, const Query& query, const RetrievalConfig& config) {
    CandidatePool pool;
    pool.query = query;
    const auto n = query.top_n_per_retriever;
    CandidateList kw;
    CandidateList sem;
    CandidateList gr;
#pragma omp parallel sections if (index.size() >= 4096)
    {
#pragma omp section
        {
            if (config.use_keyword) kw = keyword_search(index, query.text, n, config.bm25);
        }
#pragma omp section
        {
            if (config.use_semantic) sem = semantic_search(index, query.text, n);
        }
#pragma omp section
        {
            if (config.use_graph) gr = graph_search(index, query.text, n);
        }
    }
    std::vector<CandidateList> lists;
    if (config.use_keyword) {
        pool.per_retriever[RetrieverTag::keyword] = kw;
        lists.push_back(std::move(kw));
    }
    if (config.use_semantic) {
        pool.per_retriever[RetrieverTag::semantic] = sem;
        lists.push_back(std::move(sem));
    }
    if (config.use_graph) {
        pool.per_retriever[RetrieverTag::graph] = gr;
        lists.push_back(std::move(gr));
    }
    pool.fused = fuse(lists, config.rrf_k);
    return pool;
}

std::string candidates_to_jsonl(std::string_view query_id, const CandidatePool& pool) {
    std::string out;
    auto emit = [&](const Candidate& c) {
        nlohmann::json j;
        j["query_id"] = query_id;
        j["retriever"] = to_string(c.retriever);
        j["item_id"] = c.item_id;
        j["score"] = c.raw_score;
        j["rank"] = c.rank;
        out += j.dump();
        out += '\n';
    };
    for (const auto& [tag, list] : pool.per_retriever) {
        for (const auto& c : list) emit(c);
    }
    for (const auto& c : pool.fused) emit(c);
    return out;
}

}  // namespace ctxengine
