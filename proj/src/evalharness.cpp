#include "ctxengine/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxengine/error.hpp"

namespace ctxengine {

namespace {

using ojson = nlohmann::ordered_json;

std::vector<ItemId> ids_of(const CandidateList& list) {
    std::vector<ItemId> ids;
    ids.reserve(list.size());
    for (const auto& c : list) ids.push_back(c.item_id);
    return ids;
}

bool matches_any(const ContextItem& item, std::span<const LabeledSpan> labels) {
    return std::any_of(labels.begin(), labels.end(), [&](const LabeledSpan& l) { return span_match(item, l); });
}

ojson metrics_json(const ListMetrics& m) {
    ojson j;
    for (const auto& [n, v] : m.recall_at) j["recall@" + std::to_string(n)] = v;
    for (const auto& [k, v] : m.precision_at) j["precision@" + std::to_string(k)] = v;
    j["mrr"] = m.mrr;
    j["recall_full"] = m.recall_full;
    return j;
}

std::string pair_key(std::string_view a, std::string_view b) { return std::string(a) + "|" + std::string(b); }

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::vector<EvalQuery> parse_dataset(std::string_view jsonl) {
    std::vector<EvalQuery> out;
    std::vector<std::string> errors;
    std::size_t line_no = 0;
    for (const auto line : split_lines(jsonl)) {
        ++line_no;
        if (is_blank(line)) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            EvalQuery q;
            q.id = j.at("id").get<std::string>();
            q.text = j.at("text").get<std::string>();
            for (const auto& s : j.at("relevant_spans")) {
                LabeledSpan span;
                span.path = s.at("path").get<std::string>();
                span.start_line = s.at("start_line").get<std::uint32_t>();
                span.end_line = s.at("end_line").get<std::uint32_t>();
                q.relevant_spans.push_back(std::move(span));
            }
            if (j.contains("active_file") && !j["active_file"].is_null()) {
                q.active_file = j["active_file"].get<std::string>();
            }
            out.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "malformed dataset:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw InputError(msg);
    }
    return out;
}

std::string dataset_to_jsonl(std::span<const EvalQuery> dataset) {
    std::string out;
    for (const auto& q : dataset) {
        ojson j;
        j["id"] = q.id;
        j["text"] = q.text;
        j["relevant_spans"] = ojson::array();
        for (const auto& s : q.relevant_spans) {
            ojson sj;
            sj["path"] = s.path;
            sj["start_line"] = s.start_line;
            sj["end_line"] = s.end_line;
            j["relevant_spans"].push_back(std::move(sj));
        }
        if (q.active_file) j["active_file"] = *q.active_file;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<std::string> validate_dataset(const CorpusIndex& index, std::span<const EvalQuery> dataset) {
    std::vector<std::string> problems;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& q = dataset[i];
        std::vector<std::string> issues;
        if (q.id.empty()) issues.emplace_back("empty id");
        if (!q.id.empty() && !seen.insert(q.id).second) issues.emplace_back("duplicate id");
        if (q.relevant_spans.empty()) issues.emplace_back("no relevant spans");
        for (const auto& s : q.relevant_spans) {
            if (!index.has_file(s.path)) issues.push_back("unknown path '" + s.path + "'");
            if (s.start_line < 1 || s.end_line < s.start_line) {
                issues.push_back("bad span [" + std::to_string(s.start_line) + "," + std::to_string(s.end_line) + "]");
            }
        }
        if (issues.empty()) continue;
        std::string msg = "query " + std::to_string(i + 1) + " ('" + q.id + "'):";
        for (const auto& s : issues) msg += " " + s + ";";
        msg.pop_back();
        problems.push_back(std::move(msg));
    }
    return problems;
}

double span_overlap_ratio(const LineSpan& a, const LineSpan& b) {
    const auto lo = std::max(a.start_line, b.start_line);
    const auto hi = std::min(a.end_line, b.end_line);
    if (hi < lo) return 0.0;
    const double overlap = hi - lo + 1;
    return overlap / static_cast<double>(std::min(a.length(), b.length()));
}

bool span_match(const ContextItem& item, const LabeledSpan& label) {
    if (item.path != label.path || label.end_line < label.start_line) return false;
    return span_overlap_ratio(item.span, LineSpan{label.start_line, label.end_line}) >= 0.5;
}

double label_recall(const CorpusIndex& index, std::span<const ItemId> items, std::span<const LabeledSpan> labels) {
    if (labels.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& l : labels) {
        hit += std::any_of(items.begin(), items.end(), [&](ItemId id) { return span_match(index.item(id), l); }) ? 1
                                                                                                                : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double item_precision(const CorpusIndex& index, std::span<const ItemId> items, std::span<const LabeledSpan> labels) {
    if (items.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto id : items) hit += matches_any(index.item(id), labels) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(items.size());
}

ListMetrics list_metrics(const CorpusIndex& index, std::span<const ItemId> ranked, std::span<const LabeledSpan> labels,
                         std::span<const std::size_t> recall_cutoffs, std::span<const std::size_t> precision_cutoffs) {
    ListMetrics m;
    for (const auto n : recall_cutoffs) {
        m.recall_at[n] = label_recall(index, ranked.first(std::min(n, ranked.size())), labels);
    }
    for (const auto k : precision_cutoffs) {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hit += matches_any(index.item(ranked[i]), labels);
        m.precision_at[k] = k == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(k);
    }
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (matches_any(index.item(ranked[i]), labels)) {
            m.mrr = 1.0 / static_cast<double>(i + 1);
            break;
        }
    }
    m.recall_full = label_recall(index, ranked, labels);
    return m;
}

std::string pipeline_config_json(const PipelineConfig& config) {
    ojson j;
    j["top_n_per_retriever"] = config.retrieval.top_n;
    j["rrf_k"] = config.retrieval.rrf_k;
    j["bm25"] = {{"k1", config.retrieval.bm25.k1}, {"b", config.retrieval.bm25.b}};
    j["retrievers"] = ojson::array();
    if (config.retrieval.use_keyword) j["retrievers"].push_back("keyword");
    if (config.retrieval.use_semantic) j["retrievers"].push_back("semantic");
    if (config.retrieval.use_graph) j["retrievers"].push_back("graph");
    j["model"] = {{"weights", config.model.weights}, {"bias", config.model.bias}};
    j["policy"] = describe(config.policy);
    j["recall_cutoffs"] = config.recall_cutoffs;
    j["precision_cutoffs"] = config.precision_cutoffs;
    j["complementarity_n"] = config.complementarity_n;
    return j.dump();
}

EvalReport evaluate(const CorpusIndex& index, std::span<const EvalQuery> dataset, const PipelineConfig& config) {
    if (const auto problems = validate_dataset(index, dataset); !problems.empty()) {
        std::string msg = "dataset does not match the index:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw InputError(msg);
    }
    EvalReport report;
    report.config_echo = pipeline_config_json(config);
    report.queries.resize(dataset.size());

    const auto n = static_cast<std::int64_t>(dataset.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t qi = 0; qi < n; ++qi) {
        const auto& eq = dataset[static_cast<std::size_t>(qi)];
        auto& qr = report.queries[static_cast<std::size_t>(qi)];
        qr.id = eq.id;
        Query q;
        q.text = eq.text;
        q.top_n_per_retriever = config.retrieval.top_n;
        q.active_file = eq.active_file;
        const auto pool = retrieve(index, q, config.retrieval);
        const auto ranked = rank_pool(index, pool, config.model);
        std::vector<ScoredItem> scored;
        scored.reserve(ranked.size());
        for (const auto& r : ranked) scored.push_back(r.scored);
        const auto selection = select(scored, config.policy);

        std::map<std::string, std::vector<ItemId>> lists;
        for (const auto tag : kRetrievers) lists[std::string(to_string(tag))] = ids_of(pool.list(tag));
        lists["fused"] = ids_of(pool.fused);
        auto& pipe = lists["pipeline"];
        for (const auto& s : selection.items) pipe.push_back(s.item_id);

        for (const auto& [name, ids] : lists) {
            qr.lists[name] = list_metrics(index, ids, eq.relevant_spans, config.recall_cutoffs, config.precision_cutoffs);
        }
        qr.union_recall = label_recall(index, pool.union_ids(), eq.relevant_spans);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = a + 1; b < 3; ++b) {
                qr.complementarity[pair_key(to_string(kRetrievers[a]), to_string(kRetrievers[b]))] =
                    complementarity(pool.list(kRetrievers[a]), pool.list(kRetrievers[b]), config.complementarity_n);
            }
        }
        qr.selection_size = pipe.size();
        qr.selection_precision = item_precision(index, pipe, eq.relevant_spans);
        const auto fused_ids = lists["fused"];
        qr.fused_precision_at_selection = item_precision(
            index, std::span<const ItemId>(fused_ids).first(std::min(pipe.size(), fused_ids.size())), eq.relevant_spans);
    }

    const double count = static_cast<double>(report.queries.size());
    for (const auto name : kEvaluatedLists) {
        ListMetrics agg;
        for (const auto c : config.recall_cutoffs) agg.recall_at[c] = 0.0;
        for (const auto c : config.precision_cutoffs) agg.precision_at[c] = 0.0;
        for (const auto& qr : report.queries) {
            const auto& m = qr.lists.at(std::string(name));
            for (const auto& [c, v] : m.recall_at) agg.recall_at[c] += v;
            for (const auto& [c, v] : m.precision_at) agg.precision_at[c] += v;
            agg.mrr += m.mrr;
            agg.recall_full += m.recall_full;
        }
        if (count > 0) {
            for (auto& [c, v] : agg.recall_at) v /= count;
            for (auto& [c, v] : agg.precision_at) v /= count;
            agg.mrr /= count;
            agg.recall_full /= count;
        }
        report.aggregate[std::string(name)] = agg;
    }
    for (const auto& qr : report.queries) {
        report.union_recall += qr.union_recall;
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = a + 1; b < 3; ++b) {
                report.complementarity[a][b] +=
                    qr.complementarity.at(pair_key(to_string(kRetrievers[a]), to_string(kRetrievers[b])));
            }
        }
        if (qr.selection_size > 0) {
            ++report.queries_with_selection;
            report.selection_precision += qr.selection_precision;
            report.fused_precision_at_selection += qr.fused_precision_at_selection;
        }
    }
    if (count > 0) {
        report.union_recall /= count;
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = a + 1; b < 3; ++b) {
                report.complementarity[a][b] /= count;
                report.complementarity[b][a] = report.complementarity[a][b];
            }
        }
    }
    if (report.queries_with_selection > 0) {
        report.selection_precision /= static_cast<double>(report.queries_with_selection);
        report.fused_precision_at_selection /= static_cast<double>(report.queries_with_selection);
    }
    return report;
}

std::string EvalReport::to_json() const {
    ojson j;
    j["config"] = ojson::parse(config_echo);
    j["query_count"] = queries.size();
    ojson agg;
    for (const auto name : kEvaluatedLists) agg[std::string(name)] = metrics_json(aggregate.at(std::string(name)));
    j["aggregate"] = agg;
    j["union_recall"] = union_recall;
    ojson comp;
    comp["retrievers"] = {"keyword", "semantic", "graph"};
    comp["matrix"] = ojson::array();
    for (const auto& row : complementarity) comp["matrix"].push_back(row);
    j["complementarity_at_n"] = comp;
    j["selection"] = {{"queries_with_selection", queries_with_selection},
                      {"precision", selection_precision},
                      {"fused_precision_at_same_size", fused_precision_at_selection}};
    j["queries"] = ojson::array();
    for (const auto& q : queries) {
        ojson qj;
        qj["id"] = q.id;
        for (const auto name : kEvaluatedLists) qj[std::string(name)] = metrics_json(q.lists.at(std::string(name)));
        qj["union_recall"] = q.union_recall;
        ojson cj;
        for (const auto& [k, v] : q.complementarity) cj[k] = v;
        qj["complementarity"] = cj;
        qj["selection_size"] = q.selection_size;
        qj["selection_precision"] = q.selection_precision;
        qj["fused_precision_at_selection"] = q.fused_precision_at_selection;
        j["queries"].push_back(std::move(qj));
    }
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "queries: " << queries.size() << "\n\n";
    std::vector<std::string> cols;
    if (!aggregate.empty()) {
        const auto& any = aggregate.begin()->second;
        for (const auto& [n, v] : any.recall_at) cols.push_back("R@" + std::to_string(n));
        for (const auto& [k, v] : any.precision_at) cols.push_back("P@" + std::to_string(k));
    }
    cols.emplace_back("MRR");
    out << "list      ";
    for (const auto& c : cols) out << "  " << std::string(8 - std::min<std::size_t>(8, c.size()), ' ') << c;
    out << "\n";
    for (const auto name : kEvaluatedLists) {
        const auto it = aggregate.find(std::string(name));
        if (it == aggregate.end()) continue;
        std::string label(name);
        label.resize(10, ' ');
        out << label;
        for (const auto& [n, v] : it->second.recall_at) out << "    " << fixed(v);
        for (const auto& [k, v] : it->second.precision_at) out << "    " << fixed(v);
        out << "    " << fixed(it->second.mrr) << "\n";
    }
    out << "\nunion recall: " << fixed(union_recall) << "\n";
    out << "\ncomplementarity (Jaccard distance of top-n sets)\n";
    out << "              keyword  semantic     graph\n";
    const char* names[] = {"keyword   ", "semantic  ", "graph     "};
    for (std::size_t a = 0; a < 3; ++a) {
        out << names[a];
        for (std::size_t b = 0; b < 3; ++b) out << "    " << fixed(complementarity[a][b]);
        out << "\n";
    }
    out << "\nselection: " << queries_with_selection << " queries non-empty, precision " << fixed(selection_precision)
        << " vs fused top-k " << fixed(fused_precision_at_selection) << "\n";
    return out.str();
}

}  // namespace ctxengine
