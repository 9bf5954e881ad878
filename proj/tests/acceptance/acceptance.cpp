// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any hard criterion fails. The latency criterion is
// reported but never fails the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctxengine/fileio.hpp"
#include "ctxengine/guardrails.hpp"
#include "ctxengine/index_io.hpp"
#include "ctxengine/prompt.hpp"
#include "ctxengine/ranking.hpp"
#include "ctxengine/retrieval.hpp"
#include "ctxengine/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ctxengine;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    explicit Outcome(std::string n) : name(std::move(n)) {}

    std::string name;
    bool pass = false;
    bool soft = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << v;
    return os.str();
}

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

std::string ctxe(const std::string& args) { return std::string(CTXE_BIN) + " " + args; }

std::vector<std::string> item_texts(const CorpusIndex& index) {
    std::vector<std::string> texts;
    texts.reserve(index.size());
    for (const auto& it : index.items()) texts.push_back(it.text);
    return texts;
}

// Compares a retriever's top-10 with the first ten oracle entries.
bool same_top10(const CandidateList& got, ctxe_oracle::Ranking want, double tol, std::string& why) {
    if (want.size() > 10) want.resize(10);
    if (got.size() != want.size()) {
        why = "length " + std::to_string(got.size()) + " vs oracle " + std::to_string(want.size());
        return false;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i].item_id != want[i].first || std::abs(got[i].raw_score - want[i].second) > tol) {
            why = "rank " + std::to_string(i + 1) + ": item " + std::to_string(got[i].item_id) + " score " +
                  fmt(got[i].raw_score, 12) + " vs oracle item " + std::to_string(want[i].first) + " score " +
                  fmt(want[i].second, 12);
            return false;
        }
    }
    return true;
}

struct OracleRun {
    Outcome keyword{"1 bm25 oracle equivalence"};
    Outcome semantic{"2 semantic oracle equivalence"};
};

OracleRun oracle_equivalence() {
    OracleRun run;
    std::size_t kw_bad = 0;
    std::size_t sem_bad = 0;
    std::size_t checked = 0;
    std::size_t max_items = 0;
    std::string kw_first;
    std::string sem_first;
    double kw_seconds = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto rc = ctxe_oracle::random_corpus(seed, 500, 50);
        auto start = Clock::now();
        const auto index = build_index(rc.files, {});
        const auto texts = item_texts(index);
        max_items = std::max(max_items, index.size());
        for (const auto& q : rc.queries) {
            std::string why;
            if (!same_top10(keyword_search(index, q, 10), ctxe_oracle::bm25(texts, q), 1e-9, why)) {
                if (kw_bad++ == 0) kw_first = "seed " + std::to_string(seed) + " query '" + q + "' " + why;
            }
        }
        kw_seconds += seconds_since(start);
        for (const auto& q : rc.queries) {
            std::string why;
            // exact: the oracle accumulates in the same order, so scores must agree to the bit
            if (!same_top10(semantic_search(index, q, 10), ctxe_oracle::cosine(texts, q), 0.0, why)) {
                if (sem_bad++ == 0) sem_first = "seed " + std::to_string(seed) + " query '" + q + "' " + why;
            }
            ++checked;
        }
    }
    run.keyword.pass = kw_bad == 0 && kw_seconds < 30.0;
    run.keyword.detail = std::to_string(checked - kw_bad) + "/" + std::to_string(checked) +
                         " queries match over 20 corpora (max " + std::to_string(max_items) + " items), " +
                         fmt(kw_seconds, 2) + " s (limit 30 s)" + (kw_first.empty() ? "" : "; first mismatch " + kw_first);
    run.semantic.pass = sem_bad == 0;
    run.semantic.detail = std::to_string(checked - sem_bad) + "/" + std::to_string(checked) + " queries match" +
                          (sem_first.empty() ? "" : "; first mismatch " + sem_first);
    return run;
}

struct SyntheticRun {
    Outcome complementarity{"3 complementarity by construction"};
    Outcome union_dominance{"4 union recall dominance"};
    Outcome precision{"precision framing"};
};

SyntheticRun synthetic_properties() {
    SyntheticRun run;
    const auto ds = generate_synthetic_dataset(42);
    const auto index = build_index(ds.files, {});
    const auto report = evaluate(index, ds.queries);

    const double comp = report.complementarity[0][1];
    const double fused = report.aggregate.at("fused").recall_at.at(50);
    double worst_gap = 1e9;
    std::string recalls;
    for (const auto tag : kRetrievers) {
        const std::string name(to_string(tag));
        const double r = report.aggregate.at(name).recall_at.at(50);
        worst_gap = std::min(worst_gap, fused - r);
        recalls += " " + name + "=" + fmt(r);
    }
    run.complementarity.pass = ds.queries.size() == 100 && comp >= 0.5 && worst_gap >= 0.2;
    run.complementarity.detail = std::to_string(ds.queries.size()) + " queries; keyword|semantic complementarity@50 " +
                                 fmt(comp) + " (>= 0.5); recall@50 fused=" + fmt(fused) + recalls +
                                 "; smallest gap " + fmt(worst_gap) + " (>= 0.2)";

    // recomputed from raw retrieval rather than read off the report
    std::size_t violations = 0;
    std::string first;
    for (const auto& q : ds.queries) {
        const auto pool = retrieve(index, Query{q.text, 50, q.active_file});
        const auto union_ids = pool.union_ids();
        const double u = label_recall(index, union_ids, q.relevant_spans);
        for (const auto tag : kRetrievers) {
            std::vector<ItemId> ids;
            for (const auto& c : pool.list(tag)) ids.push_back(c.item_id);
            const double r = label_recall(index, ids, q.relevant_spans);
            if (u < r) {
                if (violations++ == 0) first = q.id + " " + std::string(to_string(tag));
            }
        }
    }
    for (const auto& qr : report.queries) {
        for (const auto tag : kRetrievers) {
            if (qr.union_recall < qr.lists.at(std::string(to_string(tag))).recall_full) {
                if (violations++ == 0) first = qr.id + " (report) " + std::string(to_string(tag));
            }
        }
    }
    run.union_dominance.pass = violations == 0;
    run.union_dominance.detail = std::to_string(violations) + " violations over " + std::to_string(ds.queries.size()) +
                                 " queries x 3 retrievers" + (first.empty() ? "" : "; first " + first);

    run.precision.pass = report.queries_with_selection > 0 &&
                         report.selection_precision >= report.fused_precision_at_selection;
    run.precision.detail = "selection precision at tau=0.5 " + fmt(report.selection_precision) +
                           " vs fused top-|selection| " + fmt(report.fused_precision_at_selection) + " over " +
                           std::to_string(report.queries_with_selection) + " queries with a selection";
    return run;
}

Outcome ranker_learnability() {
    Outcome out{"5 ranker learnability"};
    const auto rows = generate_separable_rows(42, 2000);
    std::size_t mislabeled = 0;
    for (const auto& r : rows) {
        const int want = (r.features.cosine > 0.5 && r.features.lexical_overlap > 0.3) ? 1 : 0;
        if (r.label != want) ++mislabeled;
    }
    const std::span<const TrainingRow> all(rows);
    const auto train_rows = all.subspan(0, 1500);
    const auto holdout = all.subspan(1500);

    TrainParams params;
    params.seed = 42;
    const auto start = Clock::now();
    const auto first = train(train_rows, params);
    const double elapsed = seconds_since(start);
    const auto second = train(train_rows, params);

    const bool bit_exact =
        std::memcmp(first.model.weights.data(), second.model.weights.data(), sizeof(double) * kFeatureCount) == 0 &&
        std::memcmp(&first.model.bias, &second.model.bias, sizeof(double)) == 0 &&
        first.model.to_json() == second.model.to_json();
    const double acc = accuracy(holdout, first.model);
    out.pass = mislabeled == 0 && params.epochs <= 200 && acc >= 0.95 && bit_exact && elapsed < 10.0;
    out.detail = "held-out accuracy " + fmt(acc) + " (>= 0.95) after " + std::to_string(params.epochs) +
                 " epochs on 1500/500 rows; rerun bit-exact " + (bit_exact ? "yes" : "no") + "; train " +
                 fmt(elapsed, 3) + " s (limit 10 s); label rule violations " + std::to_string(mislabeled);
    return out;
}

Outcome budget_properties() {
    Outcome out{"6 budget safety and monotonicity"};
    std::mt19937_64 rng(6);
    const auto tmpl = PromptTemplate::builtin_default();
    const std::vector<std::string> words = {"alpha", "beta", "(", ")", "gamma_2", ";", "{", "}", "delta", "."};
    std::size_t over_budget = 0;
    std::size_t evictions = 0;
    std::size_t prompt_over = 0;
    std::string eviction_example;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<ContextItem> items;
        std::vector<ScoredItem> scored;
        const std::size_t pool_size = rng() % 25;
        for (std::size_t i = 0; i < pool_size; ++i) {
            ContextItem it;
            it.id = static_cast<ItemId>(i);
            it.path = "src/f" + std::to_string(i) + ".c";
            for (std::size_t w = rng() % 120; w > 0; --w) it.text += words[rng() % words.size()] + " ";
            it.text += "\n";
            it.token_count = static_cast<std::uint32_t>(token_count(it.text));
            items.push_back(it);
            // coarse scores so ties are common
            scored.push_back({it.id, static_cast<double>(rng() % 20) / 20.0, it.token_count});
        }
        const std::uint64_t budget = rng() % 1500;
        const std::uint64_t grown = budget + 1 + rng() % 500;

        const auto sel = select(scored, TokenBudget{budget});
        std::uint64_t sum = 0;
        for (const auto& s : sel.items) sum += s.token_count;
        if (sel.total_tokens > budget || sum != sel.total_tokens) ++over_budget;

        const auto bigger = select(scored, TokenBudget{grown});
        std::set<ItemId> kept;
        for (const auto& s : bigger.items) kept.insert(s.item_id);
        for (const auto& s : sel.items) {
            if (kept.count(s.item_id) == 0) {
                if (evictions++ == 0) {
                    std::ostringstream os;
                    os << "trial " << trial << ": item " << s.item_id << " (" << s.token_count
                       << " tokens) selected at B=" << budget << " but not at B=" << grown;
                    eviction_example = os.str();
                }
                break;
            }
        }

        std::vector<ContextItem> chosen;
        for (const auto& s : sel.items) chosen.push_back(items[s.item_id]);
        const std::string query = "find alpha in trial " + std::to_string(trial);
        const auto base = token_count(render_prompt(std::vector<const ContextItem*>{}, query, tmpl));
        try {
            const auto p = assemble(chosen, query, tmpl, budget);
            if (p.token_count > budget || p.token_count != token_count(p.text)) ++prompt_over;
        } catch (const std::invalid_argument&) {
            // refusing is only correct when the fixed parts alone overflow
            if (base <= budget) ++prompt_over;
        }
    }

    // deterministic witness for the greedy walk: 50/60/10 tokens in score order
    const std::vector<ScoredItem> witness = {{1, 0.9, 50}, {2, 0.8, 60}, {3, 0.7, 10}};
    std::string witness_text;
    for (const std::uint64_t b : {60, 110}) {
        witness_text += " B=" + std::to_string(b) + " {";
        const auto s = select(witness, TokenBudget{b});
        for (std::size_t i = 0; i < s.items.size(); ++i) witness_text += (i ? "," : "") + std::to_string(s.items[i].item_id);
        witness_text += "}";
    }

    out.pass = over_budget == 0 && evictions == 0 && prompt_over == 0;
    out.detail = std::to_string(trials) + " trials; total > B: " + std::to_string(over_budget) +
                 "; prompt > B: " + std::to_string(prompt_over) + "; evictions when B grows: " +
                 std::to_string(evictions) + (eviction_example.empty() ? "" : " (first: " + eviction_example + ")") +
                 "; greedy witness" + witness_text;
    return out;
}

struct Snippet {
    std::string name;
    LanguageFamily family = LanguageFamily::plain_text;
    std::string target;
    std::string text;
};

std::vector<Snippet> load_snippets(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<Snippet> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("=== ", 0) == 0) {
            std::istringstream hs(line.substr(4));
            std::string lang;
            std::string target;
            Snippet s;
            hs >> lang >> s.name >> target;
            s.family = lang == "python" ? LanguageFamily::python_like : LanguageFamily::c_like;
            s.target = target.substr(target.find('=') + 1);
            out.push_back(std::move(s));
        } else if (!out.empty()) {
            out.back().text += line + "\n";
        }
    }
    return out;
}

bool is_delimiter(char c) { return std::strchr("()[]{}", c) != nullptr && c != '\0'; }

// Positions of delimiters outside string literals.
std::vector<std::size_t> delimiter_positions(const std::string& text) {
    std::vector<std::size_t> out;
    char quote = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quote != 0) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (is_delimiter(c)) {
            out.push_back(i);
        }
    }
    return out;
}

// Inserts a call to a fresh identifier before the last line, at its indentation.
std::string inject_call(const Snippet& s, const std::string& fresh) {
    const auto body_end = s.text.size() - 1;
    const auto last_start = s.text.rfind('\n', body_end - 1);
    const std::size_t at = last_start == std::string::npos ? 0 : last_start + 1;
    const auto indent = s.text.substr(at, s.text.find_first_not_of(" \t", at) - at);
    const std::string call = fresh + "(1)" + (s.family == LanguageFamily::c_like ? ";" : "");
    return s.text.substr(0, at) + indent + call + "\n" + s.text.substr(at);
}

// Adds or removes one argument of the first call to the target.
std::string mutate_arity(const Snippet& s, bool add) {
    const auto open = s.text.find(s.target + "(") + s.target.size();
    int depth = 0;
    std::size_t close = open;
    std::size_t last_comma = std::string::npos;
    for (std::size_t i = open; i < s.text.size(); ++i) {
        const char c = s.text[i];
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (c == ',' && depth == 1) last_comma = i;
        if (depth == 0) {
            close = i;
            break;
        }
    }
    if (add) return s.text.substr(0, close) + ", 0" + s.text.substr(close);
    const auto cut = last_comma == std::string::npos ? open + 1 : last_comma;
    return s.text.substr(0, cut) + s.text.substr(close);
}

Outcome guardrail_mutations() {
    Outcome out{"7 guardrail mutation suite"};
    const auto index = ingest_repo(ctxe_test::asset("fixture_repo"));
    const auto allow = Allowlist::builtin();
    const auto snippets = load_snippets(ctxe_test::asset("guardrail_snippets.txt"));
    std::mt19937_64 rng(7);

    std::size_t false_positives = 0;
    std::size_t delete_caught = 0;
    std::size_t delete_total = 0;
    std::size_t inject_caught = 0;
    std::size_t inject_total = 0;
    std::size_t arity_caught = 0;
    std::size_t arity_total = 0;
    std::string first_miss;
    auto miss = [&](const std::string& what) {
        if (first_miss.empty()) first_miss = what;
    };

    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const auto& s = snippets[i];
        const auto syn = check_syntax(s.text, s.family);
        const auto sym = check_symbols(s.text, s.family, index, allow);
        const auto tst = check_test(s.text, s.family, s.target, index);
        if (!syn.pass || !sym.pass || !tst.pass) {
            ++false_positives;
            std::string msg;
            for (const auto* r : {&syn, &sym, &tst}) {
                if (!r->pass && !r->findings.empty()) msg = r->check_name + ": " + r->findings[0].message;
            }
            miss("clean " + s.name + " flagged (" + msg + ")");
        }

        const auto positions = delimiter_positions(s.text);
        if (!positions.empty()) {
            const auto pos = positions[rng() % positions.size()];
            auto mutant = s.text;
            mutant.erase(pos, 1);
            ++delete_total;
            if (!check_syntax(mutant, s.family).pass) {
                ++delete_caught;
            } else {
                miss("deletion in " + s.name);
            }
        }

        const auto injected = inject_call(s, "injected_helper_" + std::to_string(i) + "_" + std::to_string(rng() % 1000));
        ++inject_total;
        if (!check_symbols(injected, s.family, index, allow).pass) {
            ++inject_caught;
        } else {
            miss("injection in " + s.name);
        }

        for (const bool add : {true, false}) {
            ++arity_total;
            if (!check_test(mutate_arity(s, add), s.family, s.target, index).pass) {
                ++arity_caught;
            } else {
                miss(std::string(add ? "added" : "removed") + " argument in " + s.name);
            }
        }
    }
    const std::size_t mutants = delete_total + inject_total;
    out.pass = snippets.size() == 50 && false_positives == 0 && delete_caught == delete_total &&
               inject_caught == inject_total && mutants == 100 && arity_caught == arity_total;
    out.detail = std::to_string(snippets.size()) + " clean snippets, " + std::to_string(false_positives) +
                 " false positives; syntax caught " + std::to_string(delete_caught) + "/" +
                 std::to_string(delete_total) + " deletions; symbols caught " + std::to_string(inject_caught) + "/" +
                 std::to_string(inject_total) + " injections; test caught " + std::to_string(arity_caught) + "/" +
                 std::to_string(arity_total) + " arity mutants" + (first_miss.empty() ? "" : "; first miss " + first_miss);
    return out;
}

Outcome end_to_end_determinism(const std::filesystem::path& work) {
    Outcome out{"8 end-to-end determinism"};
    const auto ds = generate_synthetic_dataset(42);
    write_files(ds.files, work / "repo");
    write_file_atomic(work / "dataset.jsonl", dataset_to_jsonl(ds.queries));

    const auto idx = ctxe_test::quote(work / "repo.idx");
    const auto report = work / "report.json";
    const std::string query = ds.queries.front().text;
    std::vector<std::string> runs[2];
    bool commands_ok = true;
    for (auto& artifacts : runs) {
        std::filesystem::remove(work / "repo.idx");
        std::filesystem::remove(report);
        const auto a = ctxe_test::run_command(ctxe("--json index " + ctxe_test::quote(work / "repo") + " -o " + idx));
        const auto b = ctxe_test::run_command(ctxe("--json query " + idx + " " + shell_quote(query) +
                                                   " --show-features --emit-prompt --budget 2000"));
        const auto c = ctxe_test::run_command(ctxe("eval " + idx + " " + ctxe_test::quote(work / "dataset.jsonl") +
                                                   " -o " + ctxe_test::quote(report)));
        commands_ok = commands_ok && a.exit_code == 0 && b.exit_code == 0 && c.exit_code == 0;
        artifacts = {a.out, read_file(work / "repo.idx"), b.out, c.out, read_file(report)};
    }
    const char* names[] = {"index stdout", "index file", "query output", "eval stdout", "eval report"};
    std::string differing;
    for (std::size_t i = 0; i < runs[0].size(); ++i) {
        if (runs[0][i] != runs[1][i]) differing += std::string(differing.empty() ? "" : ", ") + names[i];
    }
    std::size_t bytes = 0;
    for (const auto& a : runs[0]) bytes += a.size();
    out.pass = commands_ok && differing.empty() && !runs[0][1].empty() && !runs[0][4].empty();
    out.detail = std::string("index, query, eval run twice: ") + (commands_ok ? "all exit 0" : "a command failed") +
                 "; " + std::to_string(bytes) + " artifact bytes compared" +
                 (differing.empty() ? ", all identical" : "; differ: " + differing);
    return out;
}

Outcome latency(const std::filesystem::path& work) {
    Outcome out{"9 latency sanity"};
    out.soft = true;
    const auto repo = generate_scale_repo(9, 10000, 100, 100);
    write_files(repo.files, work / "scale");
    const auto idx = ctxe_test::quote(work / "scale.idx");

    auto start = Clock::now();
    const auto built = ctxe_test::run_command(ctxe("index " + ctxe_test::quote(work / "scale") + " -o " + idx));
    const double index_seconds = seconds_since(start);

    std::vector<double> cli_ms;
    bool queries_ok = built.exit_code == 0;
    for (const auto& q : repo.queries) {
        start = Clock::now();
        queries_ok = ctxe_test::run_command(ctxe("query " + idx + " " + shell_quote(q))).exit_code == 0 && queries_ok;
        cli_ms.push_back(seconds_since(start) * 1000.0);
    }
    std::sort(cli_ms.begin(), cli_ms.end());

    // in-process figure: the same query path without process start and index load
    std::vector<double> lib_ms;
    if (built.exit_code == 0) {
        const auto index = load_index(work / "scale.idx");
        const auto model = RankerModel::builtin_default();
        for (const auto& q : repo.queries) {
            start = Clock::now();
            const auto pool = retrieve(index, Query{q, 50, std::nullopt});
            const auto ranked = rank_pool(index, pool, model);
            std::vector<ScoredItem> scored;
            for (const auto& r : ranked) scored.push_back(r.scored);
            (void)select(scored, ScoreThreshold{0.5});
            lib_ms.push_back(seconds_since(start) * 1000.0);
        }
        std::sort(lib_ms.begin(), lib_ms.end());
    }
    const double cli_median = cli_ms.empty() ? 0.0 : (cli_ms[49] + cli_ms[50]) / 2.0;
    const double lib_median = lib_ms.size() < 100 ? 0.0 : (lib_ms[49] + lib_ms[50]) / 2.0;
    out.pass = queries_ok && index_seconds < 120.0 && cli_median < 100.0;
    out.detail = std::to_string(repo.files.size()) + " files / " + std::to_string(repo.total_lines) +
                 " lines indexed in " + fmt(index_seconds, 2) + " s (target 120 s); median query " + fmt(cli_median, 2) +
                 " ms via the CLI (target 100 ms), " + fmt(lib_median, 2) + " ms in-process; " +
                 std::to_string(kernels::max_threads()) + " threads";
    return out;
}

}  // namespace

int main() {
    ctxe_test::TempDir work;
    std::vector<Outcome> outcomes;
    auto report = [&](Outcome o) {
        const char* verdict = o.pass ? "PASS" : (o.soft ? "SOFT-FAIL" : "FAIL");
        std::cout << verdict << "  " << o.name << (o.soft ? " [report only]" : "") << ": " << o.detail << std::endl;
        outcomes.push_back(std::move(o));
    };

    auto oracle = oracle_equivalence();
    report(std::move(oracle.keyword));
    report(std::move(oracle.semantic));
    auto synthetic = synthetic_properties();
    report(std::move(synthetic.complementarity));
    report(std::move(synthetic.union_dominance));
    report(ranker_learnability());
    report(budget_properties());
    report(guardrail_mutations());
    std::filesystem::create_directories(work / "e2e");
    report(end_to_end_determinism(work / "e2e"));
    report(std::move(synthetic.precision));
    std::filesystem::create_directories(work / "scale");
    report(latency(work.path()));

    std::size_t hard_failures = 0;
    for (const auto& o : outcomes) hard_failures += (!o.pass && !o.soft) ? 1 : 0;
    std::cout << (hard_failures == 0 ? "all hard criteria passed" : std::to_string(hard_failures) + " hard criteria failed")
              << std::endl;
    return hard_failures == 0 ? 0 : 1;
}
