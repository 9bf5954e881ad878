#include "ctxengine/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ctxengine/kernels.hpp"
#include "ctxengine/text.hpp"

namespace ctxengine {

namespace {

struct MinMax {
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;

    void add(double v) {
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    // A pool where every present score is equal maps them all to 1.
    [[nodiscard]] double normalize(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 1.0; }
};

MinMax range_of(const CandidateList& list) {
    MinMax m;
    for (const auto& c : list) m.add(c.raw_score);
    return m;
}

/// Per-pool quantities shared by every featurize call on that pool.
struct PoolContext {
    const CandidatePool& pool;
    MinMax bm25;
    MinMax graph;
    std::vector<std::string> query_terms;

    explicit PoolContext(const CandidatePool& p)
        : pool(p),
          bm25(range_of(p.list(RetrieverTag::keyword))),
          graph(range_of(p.list(RetrieverTag::graph))),
          query_terms(unique_terms(p.query.text)) {}

    [[nodiscard]] FeatureVector features(const ContextItem& item) const {
        FeatureVector fv;
        int hits = 0;
        if (const auto* c = pool.find(RetrieverTag::keyword, item.id)) {
            fv.bm25_norm = bm25.normalize(c->raw_score);
            ++hits;
        }
        if (const auto* c = pool.find(RetrieverTag::semantic, item.id)) {
            fv.cosine = c->raw_score;
            ++hits;
        }
        if (const auto* c = pool.find(RetrieverTag::graph, item.id)) {
            fv.graph_norm = graph.normalize(c->raw_score);
            ++hits;
        }
        fv.retriever_hits = static_cast<double>(hits) / 3.0;
        fv.lexical_overlap = overlap(item.text);
        fv.path_affinity = pool.query.active_file ? path_affinity(item.path, *pool.query.active_file) : 0.0;
        return fv;
    }

    [[nodiscard]] double overlap(std::string_view text) const {
        if (query_terms.empty()) return 0.0;
        const auto item_terms = unique_terms(text);
        std::size_t shared = 0;
        for (const auto& t : query_terms) {
            shared += std::binary_search(item_terms.begin(), item_terms.end(), t) ? 1 : 0;
        }
        return static_cast<double>(shared) / static_cast<double>(query_terms.size());
    }
};

double logit(const RankerModel& model, const FeatureVector& fv) {
    const auto x = fv.values();
    double z = model.bias;
    for (std::size_t j = 0; j < kFeatureCount; ++j) z += model.weights[j] * x[j];
    return z;
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool better(const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
}

}  // namespace

FeatureVector FeatureVector::from_values(std::span<const double> v) {
    if (v.size() != kFeatureCount) throw std::invalid_argument("feature vector needs 6 values");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

double lexical_overlap(std::string_view query, std::string_view item_text) {
    CandidatePool pool;
    pool.query.text = std::string(query);
    return PoolContext(pool).overlap(item_text);
}

double path_affinity(std::string_view item_path, std::string_view active_file) {
    auto dir = [](std::string_view p) {
        const auto slash = p.rfind('/');
        return slash == std::string_view::npos ? std::string_view{} : p.substr(0, slash);
    };
    return dir(item_path) == dir(active_file) ? 1.0 : 0.0;
}

FeatureVector featurize(const Query& query, const ContextItem& item, const CandidatePool& pool) {
    const auto ids = pool.union_ids();
    if (!std::binary_search(ids.begin(), ids.end(), item.id)) {
        throw std::invalid_argument("item " + std::to_string(item.id) + " is not in the candidate pool");
    }
    CandidatePool scoped = pool;
    scoped.query = query;
    return PoolContext(scoped).features(item);
}

RankerModel RankerModel::builtin_default() {
    RankerModel m;
    m.weights = {2.0, 4.0, 1.5, 3.0, 0.5, 1.5};
    m.bias = -4.5;
    return m;
}

std::string RankerModel::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["feature_names"] = nlohmann::json::array();
    for (const auto name : kFeatureNames) j["feature_names"].push_back(name);
    j["weights"] = weights;
    j["bias"] = bias;
    return j.dump(2) + "\n";
}

RankerModel RankerModel::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != kVersion) throw std::invalid_argument("unsupported model version");
        const auto names = j.at("feature_names").get<std::vector<std::string>>();
        if (names.size() != kFeatureCount || !std::equal(names.begin(), names.end(), kFeatureNames.begin())) {
            throw std::invalid_argument("model feature_names do not match this build");
        }
        const auto w = j.at("weights").get<std::vector<double>>();
        if (w.size() != kFeatureCount) throw std::invalid_argument("model needs 6 weights");
        RankerModel m;
        std::copy(w.begin(), w.end(), m.weights.begin());
        m.bias = j.at("bias").get<double>();
        for (const auto v : m.weights) {
            if (!std::isfinite(v)) throw std::invalid_argument("model weights must be finite");
        }
        if (!std::isfinite(m.bias)) throw std::invalid_argument("model bias must be finite");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed model: ") + e.what());
    }
}

double score(const RankerModel& model, const FeatureVector& fv) { return kernels::sigmoid(logit(model, fv)); }

double training_loss(std::span<const TrainingRow> rows, const RankerModel& model, double l2) {
    if (rows.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : rows) {
        const double z = logit(model, r.features);
        sum += softplus(z) - (r.label != 0 ? z : 0.0);
    }
    double norm = 0.0;
    for (const auto w : model.weights) norm += w * w;
    return sum / static_cast<double>(rows.size()) + 0.5 * l2 * norm;
}

TrainResult train(std::span<const TrainingRow> rows, const TrainParams& params) {
    if (!(params.learning_rate > 0.0) || !std::isfinite(params.learning_rate)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (!(params.l2 >= 0.0) || !std::isfinite(params.l2)) throw std::invalid_argument("l2 must be >= 0");
    std::size_t positives = 0;
    for (const auto& r : rows) {
        if (r.label != 0 && r.label != 1) throw std::invalid_argument("labels must be 0 or 1");
        positives += static_cast<std::size_t>(r.label);
    }
    if (positives == 0 || positives == rows.size()) {
        throw TrainingError("training data needs at least one positive and one negative example");
    }

    TrainResult result;
    std::mt19937_64 rng(params.seed);
    for (auto& w : result.model.weights) w = (unit_double(rng) * 2.0 - 1.0) * 0.01;
    result.model.bias = 0.0;
    result.loss_history.reserve(params.epochs + 1);
    result.loss_history.push_back(training_loss(rows, result.model, params.l2));

    const auto n = static_cast<double>(rows.size());
    for (std::uint32_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::array<double, kFeatureCount> grad{};
        double grad_bias = 0.0;
        for (const auto& r : rows) {
            const auto x = r.features.values();
            const double g = kernels::sigmoid(logit(result.model, r.features)) - static_cast<double>(r.label);
            for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] += g * x[j];
            grad_bias += g;
        }
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            result.model.weights[j] -= params.learning_rate * (grad[j] / n + params.l2 * result.model.weights[j]);
        }
        result.model.bias -= params.learning_rate * (grad_bias / n);
        result.loss_history.push_back(training_loss(rows, result.model, params.l2));
    }
    return result;
}

std::vector<TrainingRow> featurize_examples(const CorpusIndex& index, std::span<const LabeledExample> examples,
                                            const RetrievalConfig& config) {
    std::map<std::string, CandidatePool> pools;
    std::vector<TrainingRow> rows;
    rows.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.item_id >= index.size()) {
            throw std::invalid_argument("labeled example references unknown item " + std::to_string(ex.item_id));
        }
        auto it = pools.find(ex.query);
        if (it == pools.end()) {
            Query q;
            q.text = ex.query;
            q.top_n_per_retriever = config.top_n;
            it = pools.emplace(ex.query, retrieve(index, q, config)).first;
        }
        rows.push_back({PoolContext(it->second).features(index.item(ex.item_id)), ex.label});
    }
    return rows;
}

double accuracy(std::span<const TrainingRow> rows, const RankerModel& model, double threshold) {
    if (rows.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& r : rows) {
        const int predicted = score(model, r.features) >= threshold ? 1 : 0;
        correct += predicted == r.label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

std::string describe(const SelectionPolicy& policy) {
    std::ostringstream out;
    if (const auto* t = std::get_if<ScoreThreshold>(&policy)) {
        out << "score_threshold(" << t->tau << ")";
    } else {
        out << "token_budget(" << std::get<TokenBudget>(policy).budget << ")";
    }
    return out.str();
}

RankedSelection select(std::span<const ScoredItem> scored, const SelectionPolicy& policy) {
    std::vector<ScoredItem> order(scored.begin(), scored.end());
    std::sort(order.begin(), order.end(), better);
    RankedSelection out;
    out.policy_used = policy;
    if (const auto* t = std::get_if<ScoreThreshold>(&policy)) {
        if (!(t->tau >= 0.0 && t->tau <= 1.0)) throw std::invalid_argument("threshold must be in [0, 1]");
        for (const auto& s : order) {
            if (s.score < t->tau) break;
            out.items.push_back(s);
            out.total_tokens += s.token_count;
        }
        return out;
    }
    const auto budget = std::get<TokenBudget>(policy).budget;
    for (const auto& s : order) {
        if (out.total_tokens + s.token_count > budget) continue;
        out.items.push_back(s);
        out.total_tokens += s.token_count;
    }
    return out;
}

std::vector<RankedCandidate> rank_pool(const CorpusIndex& index, const CandidatePool& pool, const RankerModel& model) {
    const PoolContext ctx(pool);
    const auto ids = pool.union_ids();
    std::vector<RankedCandidate> out(ids.size());
    std::vector<double> matrix(ids.size() * kFeatureCount);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& item = index.item(ids[i]);
        out[i].features = ctx.features(item);
        out[i].scored.item_id = item.id;
        out[i].scored.token_count = item.token_count;
        const auto v = out[i].features.values();
        std::copy(v.begin(), v.end(), matrix.begin() + static_cast<std::ptrdiff_t>(i * kFeatureCount));
    }
    const auto scores = kernels::logistic_scores(matrix, model.weights, model.bias);
    for (std::size_t i = 0; i < ids.size(); ++i) out[i].scored.score = scores[i];
    std::sort(out.begin(), out.end(),
              [](const RankedCandidate& a, const RankedCandidate& b) { return better(a.scored, b.scored); });
    return out;
}

}  // namespace ctxengine
