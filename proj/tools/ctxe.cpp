// ctxe: index a repository, query it, train the ranker, evaluate, and check
// generated code.
//
// Exit codes: 0 success, 1 I/O or fatal error, 2 invalid input or flags,
// 3 guardrail verdict fail.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "ctxengine/config.hpp"
#include "ctxengine/corpus.hpp"
#include "ctxengine/error.hpp"
#include "ctxengine/evalharness.hpp"
#include "ctxengine/fileio.hpp"
#include "ctxengine/guardrails.hpp"
#include "ctxengine/index_io.hpp"
#include "ctxengine/prompt.hpp"
#include "ctxengine/ranking.hpp"
#include "ctxengine/retrieval.hpp"
#include "ctxengine/synthetic.hpp"

namespace {

using namespace ctxengine;
using ojson = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInput = 2;
constexpr int kExitGuardrail = 3;

struct GlobalOptions {
    std::string config_path;
    bool json = false;
    bool verbose = false;
    bool quiet = false;
};

Config load_effective_config(const GlobalOptions& g) {
    if (g.config_path.empty()) return Config{};
    spdlog::debug("loading config {}", g.config_path);
    return load_config(g.config_path);
}

void emit(const std::string& text) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
}

ojson candidate_json(const CorpusIndex& index, const Candidate& c) {
    const auto& item = index.item(c.item_id);
    ojson j;
    j["item_id"] = c.item_id;
    j["path"] = item.path;
    j["start_line"] = item.span.start_line;
    j["end_line"] = item.span.end_line;
    j["score"] = c.raw_score;
    j["rank"] = c.rank;
    return j;
}

ojson features_json(const FeatureVector& fv) {
    ojson j;
    const auto v = fv.values();
    for (std::size_t i = 0; i < kFeatureCount; ++i) j[std::string(kFeatureNames[i])] = v[i];
    return j;
}

RankerModel load_model(const Config& cfg, const std::string& override_path) {
    std::optional<std::filesystem::path> path = cfg.model_path;
    if (!override_path.empty()) path = override_path;
    if (!path) return RankerModel::builtin_default();
    spdlog::debug("loading ranker model {}", path->string());
    try {
        return RankerModel::from_json(read_file(*path));
    } catch (const std::invalid_argument& e) {
        throw InputError(path->string() + ": " + e.what());
    }
}

PromptTemplate load_template(const Config& cfg, const std::string& override_path) {
    std::optional<std::filesystem::path> path = cfg.template_path;
    if (!override_path.empty()) path = override_path;
    if (!path) return PromptTemplate::builtin_default();
    try {
        return PromptTemplate::parse(read_file(*path));
    } catch (const std::invalid_argument& e) {
        throw InputError(path->string() + ": " + e.what());
    }
}

// ---- index ----------------------------------------------------------------

struct IndexArgs {
    std::string root;
    std::string out;
    std::optional<std::uint32_t> window;
    std::optional<std::uint32_t> stride;
    std::vector<std::string> include;
    std::vector<std::string> exclude;
};

int cmd_index(const GlobalOptions& g, const IndexArgs& a) {
    auto cfg = load_effective_config(g);
    if (a.window) cfg.ingest.chunk_window_lines = *a.window;
    if (a.stride) cfg.ingest.chunk_stride_lines = *a.stride;
    if (!a.include.empty()) cfg.ingest.include_globs = a.include;
    if (!a.exclude.empty()) cfg.ingest.exclude_globs = a.exclude;
    cfg.validate();

    spdlog::info("indexing {}", a.root);
    const auto index = ingest_repo(a.root, cfg.ingest);
    save_index(index, a.out);
    const auto& r = index.report();
    spdlog::info("wrote {}", a.out);

    ojson j;
    j["index"] = a.out;
    j["files"] = r.files_indexed;
    j["items"] = index.size();
    j["symbols"] = index.symbol_names().size();
    j["files_seen"] = r.files_seen;
    j["skipped"] = {{"excluded", r.skipped_excluded},
                    {"binary", r.skipped_binary},
                    {"invalid_utf8", r.skipped_invalid_utf8},
                    {"too_large", r.skipped_too_large},
                    {"unreadable", r.skipped_unreadable}};
    if (r.skipped_unreadable > 0) spdlog::warn("{} file(s) could not be read", r.skipped_unreadable);
    if (g.json) {
        emit(j.dump(2) + "\n");
    } else {
        emit("files: " + std::to_string(r.files_indexed) + "\nitems: " + std::to_string(index.size()) +
             "\nsymbols: " + std::to_string(index.symbol_names().size()) + "\n");
    }
    return kExitOk;
}

// ---- query ----------------------------------------------------------------

struct QueryArgs {
    std::string index_path;
    std::string text;
    std::optional<std::size_t> top_n;
    std::string policy;
    std::optional<std::uint64_t> budget;
    std::optional<double> threshold;
    std::string kind = "chat";
    std::string active_file;
    std::string model;
    std::string template_path;
    std::string prompt_out;
    bool show_features = false;
    bool emit_prompt = false;
};

int cmd_query(const GlobalOptions& g, const QueryArgs& a) {
    auto cfg = load_effective_config(g);
    const auto kind = parse_recommendation_kind(a.kind);
    if (!kind) throw InputError("unknown --kind '" + a.kind + "'");
    if (a.top_n) cfg.retrieval.top_n = *a.top_n;
    if (a.threshold) cfg.threshold = *a.threshold;
    if (!a.policy.empty()) {
        if (a.policy == "threshold") {
            cfg.policy = PolicyKind::threshold;
        } else if (a.policy == "budget") {
            cfg.policy = PolicyKind::budget;
        } else {
            throw InputError("--policy must be threshold or budget");
        }
    } else if (a.budget) {
        cfg.policy = PolicyKind::budget;
    }
    cfg.validate();
    const std::uint64_t budget = a.budget ? *a.budget : cfg.budgets.at(*kind);
    const SelectionPolicy policy =
        cfg.policy == PolicyKind::budget ? SelectionPolicy{TokenBudget{budget}} : SelectionPolicy{ScoreThreshold{cfg.threshold}};
    const auto model = load_model(cfg, a.model);

    const auto index = load_index(a.index_path);
    Query q;
    q.text = a.text;
    q.top_n_per_retriever = cfg.retrieval.top_n;
    if (!a.active_file.empty()) q.active_file = a.active_file;
    const auto pool = retrieve(index, q, cfg.retrieval);
    const auto ranked = rank_pool(index, pool, model);
    std::vector<ScoredItem> scored;
    scored.reserve(ranked.size());
    for (const auto& r : ranked) scored.push_back(r.scored);
    const auto selection = select(scored, policy);

    std::optional<AssembledPrompt> prompt;
    if (a.emit_prompt || !a.prompt_out.empty()) {
        prompt = assemble(selection, index, q.text, load_template(cfg, a.template_path), budget);
        if (!a.prompt_out.empty()) write_file_atomic(a.prompt_out, prompt->text);
    }

    if (!g.json) {
        std::string out;
        for (const auto tag : kRetrievers) {
            out += std::string(to_string(tag)) + ": " + std::to_string(pool.list(tag).size()) + " candidate(s)\n";
        }
        out += "fused: " + std::to_string(pool.fused.size()) + " candidate(s)\n";
        out += "selection (" + describe(policy) + ", " + std::to_string(selection.total_tokens) + " tokens):\n";
        for (const auto& s : selection.items) {
            const auto& item = index.item(s.item_id);
            char score[32];
            std::snprintf(score, sizeof score, "%.4f", s.score);
            out += "  " + std::string(score) + "  " + item.path + ":" + std::to_string(item.span.start_line) + "-" +
                   std::to_string(item.span.end_line) + "\n";
        }
        if (prompt && a.emit_prompt) out += "\n" + prompt->text;
        emit(out);
        return kExitOk;
    }

    ojson j;
    j["query"] = q.text;
    j["active_file"] = q.active_file ? ojson(*q.active_file) : ojson(nullptr);
    j["kind"] = a.kind;
    ojson per;
    for (const auto tag : kRetrievers) {
        ojson list = ojson::array();
        for (const auto& c : pool.list(tag)) list.push_back(candidate_json(index, c));
        per[std::string(to_string(tag))] = std::move(list);
    }
    j["retrievers"] = std::move(per);
    j["fused"] = ojson::array();
    for (const auto& c : pool.fused) j["fused"].push_back(candidate_json(index, c));

    ojson sel;
    sel["policy"] = describe(policy);
    sel["total_tokens"] = selection.total_tokens;
    sel["items"] = ojson::array();
    for (const auto& s : selection.items) {
        const auto& item = index.item(s.item_id);
        ojson it;
        it["item_id"] = s.item_id;
        it["path"] = item.path;
        it["start_line"] = item.span.start_line;
        it["end_line"] = item.span.end_line;
        it["score"] = s.score;
        it["token_count"] = s.token_count;
        sel["items"].push_back(std::move(it));
    }
    j["selection"] = std::move(sel);
    if (a.show_features) {
        ojson feats = ojson::array();
        for (const auto& r : ranked) {
            ojson f;
            f["item_id"] = r.scored.item_id;
            f["score"] = r.scored.score;
            f["features"] = features_json(r.features);
            feats.push_back(std::move(f));
        }
        j["features"] = std::move(feats);
    }
    if (prompt && a.emit_prompt) {
        j["prompt"] = {{"text", prompt->text},
                       {"token_count", prompt->token_count},
                       {"budget", budget},
                       {"included", prompt->included},
                       {"dropped", prompt->dropped}};
    }
    emit(j.dump(2) + "\n");
    return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string examples;
    std::string out;
    std::string index_path;
    TrainParams params;
    double holdout = 0.2;
};

int cmd_train(const GlobalOptions& g, const TrainArgs& a) {
    auto cfg = load_effective_config(g);
    if (!(a.holdout >= 0.0 && a.holdout < 1.0)) throw InputError("--holdout must be in [0, 1)");
    const auto text = read_file(a.examples);

    std::vector<TrainingRow> rows;
    std::vector<LabeledExample> labeled;
    std::size_t line_no = 0;
    for (const auto line : split_lines(text)) {
        ++line_no;
        if (is_blank(line)) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const int label = j.at("label").get<int>();
            if (label != 0 && label != 1) throw InputError("label must be 0 or 1");
            if (j.contains("features")) {
                const auto v = j.at("features").get<std::vector<double>>();
                rows.push_back({FeatureVector::from_values(v), label});
            } else {
                labeled.push_back({j.at("query").get<std::string>(), j.at("item_id").get<ItemId>(), label});
            }
        } catch (const std::exception& e) {
            throw InputError(a.examples + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!labeled.empty()) {
        if (a.index_path.empty()) throw InputError("examples with query/item_id need --index");
        const auto index = load_index(a.index_path);
        try {
            auto more = featurize_examples(index, labeled, cfg.retrieval);
            rows.insert(rows.end(), more.begin(), more.end());
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }

    // deterministic split: shuffle indices with the training seed
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeededRng rng(a.params.seed);
    rng.shuffle(order);
    const auto held = static_cast<std::size_t>(static_cast<double>(rows.size()) * a.holdout);
    std::vector<TrainingRow> train_rows;
    std::vector<TrainingRow> test_rows;
    for (std::size_t i = 0; i < order.size(); ++i) (i < held ? test_rows : train_rows).push_back(rows[order[i]]);

    spdlog::info("training on {} rows, holding out {}", train_rows.size(), test_rows.size());
    const auto result = train(train_rows, a.params);
    write_file_atomic(a.out, result.model.to_json());

    ojson j;
    j["model"] = a.out;
    j["train_rows"] = train_rows.size();
    j["holdout_rows"] = test_rows.size();
    j["initial_loss"] = result.loss_history.front();
    j["final_loss"] = result.loss_history.back();
    j["train_accuracy"] = accuracy(train_rows, result.model);
    j["holdout_accuracy"] = test_rows.empty() ? ojson(nullptr) : ojson(accuracy(test_rows, result.model));
    if (g.json) {
        emit(j.dump(2) + "\n");
    } else {
        char buf[256];
        std::snprintf(buf, sizeof buf, "loss %.6f -> %.6f\ntrain accuracy %.4f\n", result.loss_history.front(),
                      result.loss_history.back(), accuracy(train_rows, result.model));
        std::string out = buf;
        if (!test_rows.empty()) {
            std::snprintf(buf, sizeof buf, "holdout accuracy %.4f\n", accuracy(test_rows, result.model));
            out += buf;
        }
        emit(out);
    }
    return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string index_path;
    std::string dataset;
    std::string out;
    std::string model;
    std::string policy;
    std::optional<std::uint64_t> budget;
};

int cmd_eval(const GlobalOptions& g, const EvalArgs& a) {
    auto cfg = load_effective_config(g);
    PipelineConfig pc;
    pc.retrieval = cfg.retrieval;
    pc.model = load_model(cfg, a.model);
    auto policy_kind = cfg.policy;
    if (a.policy == "budget" || (a.policy.empty() && a.budget)) {
        policy_kind = PolicyKind::budget;
    } else if (a.policy == "threshold") {
        policy_kind = PolicyKind::threshold;
    } else if (!a.policy.empty()) {
        throw InputError("--policy must be threshold or budget");
    }
    pc.policy = policy_kind == PolicyKind::budget
                    ? SelectionPolicy{TokenBudget{a.budget.value_or(cfg.budgets.at(RecommendationKind::chat))}}
                    : SelectionPolicy{ScoreThreshold{cfg.threshold}};

    const auto index = load_index(a.index_path);
    const auto dataset = parse_dataset(read_file(a.dataset));
    const auto report = evaluate(index, dataset, pc);
    const auto json = report.to_json();
    if (!a.out.empty()) write_file_atomic(a.out, json);
    emit(g.json ? json : report.to_table());
    return kExitOk;
}

// ---- check ----------------------------------------------------------------

struct CheckArgs {
    std::string index_path;
    std::string recommendation;
    std::string kind;
    std::string language;
    std::string target;
    std::string id;
};

Recommendation load_recommendation(const CheckArgs& a) {
    Recommendation rec;
    const auto text = read_file(a.recommendation);
    const std::filesystem::path path(a.recommendation);
    if (path.extension() == ".json") {
        try {
            const auto j = nlohmann::json::parse(text);
            rec.text = j.at("text").get<std::string>();
            rec.id = j.value("id", path.stem().string());
            const auto kind = j.value("kind", std::string("completion"));
            const auto k = parse_recommendation_kind(kind);
            if (!k) throw InputError("unknown kind '" + kind + "'");
            rec.kind = *k;
            const auto lang = j.value("language", std::string("plain_text"));
            const auto l = parse_language_family(lang);
            if (!l) throw InputError("unknown language '" + lang + "'");
            rec.language_tag = *l;
            if (j.contains("target_symbol") && !j["target_symbol"].is_null()) {
                rec.target_symbol = j["target_symbol"].get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw InputError(a.recommendation + ": " + e.what());
        }
    } else {
        rec.text = text;
        rec.id = path.filename().string();
        rec.language_tag = language_for_path(path.filename().string());
    }
    if (!a.id.empty()) rec.id = a.id;
    if (!a.kind.empty()) {
        const auto k = parse_recommendation_kind(a.kind);
        if (!k) throw InputError("unknown --kind '" + a.kind + "'");
        rec.kind = *k;
    }
    if (!a.language.empty()) {
        const auto l = parse_language_family(a.language);
        if (!l) throw InputError("unknown --language '" + a.language + "'");
        rec.language_tag = *l;
    }
    if (!a.target.empty()) rec.target_symbol = a.target;
    return rec;
}

int cmd_check(const GlobalOptions& g, const CheckArgs& a) {
    const auto cfg = load_effective_config(g);
    const auto rec = load_recommendation(a);
    const auto index = load_index(a.index_path);
    auto allow = Allowlist::builtin();
    if (cfg.allowlist_c_like) allow.load_file(*cfg.allowlist_c_like, LanguageFamily::c_like);
    if (cfg.allowlist_python_like) allow.load_file(*cfg.allowlist_python_like, LanguageFamily::python_like);
    GuardrailConfig gc;
    gc.external_commands = cfg.external_commands;
    gc.test_command = cfg.test_command;
    gc.timeout = cfg.check_timeout;
    const auto report = run_guardrails(rec, index, allow, gc);

    if (g.json) {
        emit(report.to_json());
    } else {
        std::string out = "verdict: " + std::string(report.verdict ? "pass" : "fail") + "\n";
        for (const auto& r : report.results) {
            out += "  " + r.check_name + ": " + (r.applicable ? (r.pass ? "pass" : "FAIL") : "n/a");
            if (!r.note.empty()) out += " (" + r.note + ")";
            out += "\n";
            for (const auto& f : r.findings) {
                out += "    line " + std::to_string(f.line) + ": " + f.message + "\n";
            }
        }
        emit(out);
    }
    return report.verdict ? kExitOk : kExitGuardrail;
}

int run(int argc, char** argv) {
    CLI::App app{"ctxe: repository context engine"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "Config file (key = value with [sections])");
    app.add_flag("--json", g.json, "Print machine-readable JSON on stdout");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging on stderr");
    app.add_flag("-q,--quiet", g.quiet, "Only log errors");
    app.fallthrough();

    IndexArgs ia;
    auto* index = app.add_subcommand("index", "Build an index of a repository");
    index->add_option("root", ia.root, "Repository root")->required();
    index->add_option("-o,--out", ia.out, "Index file to write")->required();
    index->add_option("--window", ia.window, "Chunk window in lines");
    index->add_option("--stride", ia.stride, "Chunk stride in lines");
    index->add_option("--include", ia.include, "Include glob (repeatable)");
    index->add_option("--exclude", ia.exclude, "Exclude glob (repeatable)");

    QueryArgs qa;
    auto* query = app.add_subcommand("query", "Retrieve, rank and select context for a query");
    query->add_option("index", qa.index_path, "Index file")->required();
    query->add_option("text", qa.text, "Query text")->required();
    query->add_option("--top-n", qa.top_n, "Candidates per retriever")->check(CLI::PositiveNumber);
    query->add_option("--policy", qa.policy, "threshold or budget")->check(CLI::IsMember({"threshold", "budget"}));
    query->add_option("--budget", qa.budget, "Token budget (implies --policy budget)");
    query->add_option("--threshold", qa.threshold, "Relevance threshold in [0, 1]")->check(CLI::Range(0.0, 1.0));
    query->add_option("--kind", qa.kind, "completion, edit, unit_test or chat")
        ->check(CLI::IsMember({"completion", "edit", "unit_test", "chat"}));
    query->add_option("--active-file", qa.active_file, "Repo-relative path of the file being edited");
    query->add_option("--model", qa.model, "Ranker model JSON");
    query->add_option("--template", qa.template_path, "Prompt template file");
    query->add_option("--prompt-out", qa.prompt_out, "Write the assembled prompt to this file");
    query->add_flag("--show-features", qa.show_features, "Include ranker features");
    query->add_flag("--emit-prompt", qa.emit_prompt, "Assemble and print the prompt");

    TrainArgs ta;
    auto* trainc = app.add_subcommand("train", "Train the ranker from labeled examples");
    trainc->add_option("examples", ta.examples, "JSONL: {features, label} or {query, item_id, label}")->required();
    trainc->add_option("-o,--out", ta.out, "Model file to write")->required();
    trainc->add_option("--index", ta.index_path, "Index for query/item_id examples");
    trainc->add_option("--lr", ta.params.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
    trainc->add_option("--epochs", ta.params.epochs, "Epochs");
    trainc->add_option("--l2", ta.params.l2, "L2 strength")->check(CLI::NonNegativeNumber);
    trainc->add_option("--seed", ta.params.seed, "Seed for init and split");
    trainc->add_option("--holdout", ta.holdout, "Held-out fraction")->check(CLI::Range(0.0, 0.99));

    EvalArgs ea;
    auto* evalc = app.add_subcommand("eval", "Evaluate retrieval and ranking on a labeled dataset");
    evalc->add_option("index", ea.index_path, "Index file")->required();
    evalc->add_option("dataset", ea.dataset, "EvalQuery JSONL")->required();
    evalc->add_option("-o,--out", ea.out, "Write the JSON report here");
    evalc->add_option("--model", ea.model, "Ranker model JSON");
    evalc->add_option("--policy", ea.policy, "threshold or budget")->check(CLI::IsMember({"threshold", "budget"}));
    evalc->add_option("--budget", ea.budget, "Token budget");

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Run guardrails on a generated recommendation");
    check->add_option("index", ca.index_path, "Index file")->required();
    check->add_option("recommendation", ca.recommendation, "Recommendation: .json or raw source file")->required();
    check->add_option("--kind", ca.kind, "completion, edit, unit_test or chat")
        ->check(CLI::IsMember({"completion", "edit", "unit_test", "chat"}));
    check->add_option("--language", ca.language, "c_like, python_like or plain_text")
        ->check(CLI::IsMember({"c_like", "python_like", "plain_text"}));
    check->add_option("--target", ca.target, "Function under test (unit_test)");
    check->add_option("--id", ca.id, "Recommendation id for the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    auto logger = spdlog::stderr_color_st("ctxe");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(g.verbose ? spdlog::level::debug : (g.quiet ? spdlog::level::err : spdlog::level::info));

    try {
        if (index->parsed()) return cmd_index(g, ia);
        if (query->parsed()) return cmd_query(g, qa);
        if (trainc->parsed()) return cmd_train(g, ta);
        if (evalc->parsed()) return cmd_eval(g, ea);
        if (check->parsed()) return cmd_check(g, ca);
    } catch (const IoError& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return kExitInput;
    } catch (const TrainingError& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    } catch (const ExternalCommandError& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    }
    return kExitInput;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
