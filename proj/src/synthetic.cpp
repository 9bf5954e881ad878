#include "ctxengine/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "ctxengine/error.hpp"
#include "ctxengine/fileio.hpp"
#include "ctxengine/lexer.hpp"

namespace ctxengine {

namespace {

struct SynonymPair {
    std::string_view query_form;
    std::string_view snippet_form;
};

// Morphological pairs: they share most character trigrams but no whole token.
constexpr std::array<SynonymPair, 48> kSynonyms = {{
    {"validate", "validation"},     {"parse", "parsing"},          {"encrypt", "encryption"},
    {"compress", "compression"},    {"serialize", "serialization"}, {"tokenize", "tokenizer"},
    {"normalize", "normalization"}, {"allocate", "allocation"},    {"authenticate", "authentication"},
    {"schedule", "scheduler"},      {"cache", "caching"},          {"merge", "merging"},
    {"connect", "connection"},      {"encode", "encoding"},        {"decode", "decoding"},
    {"sort", "sorting"},            {"hash", "hashing"},           {"filter", "filtering"},
    {"compile", "compiler"},        {"optimize", "optimizer"},     {"persist", "persistence"},
    {"register", "registration"},   {"migrate", "migration"},      {"translate", "translation"},
    {"aggregate", "aggregation"},   {"calculate", "calculation"},  {"configure", "configuration"},
    {"download", "downloader"},     {"upload", "uploader"},        {"notify", "notification"},
    {"subscribe", "subscription"},  {"transform", "transformer"},  {"evaluate", "evaluation"},
    {"generate", "generator"},      {"initialize", "initialization"}, {"partition", "partitioning"},
    {"replicate", "replication"},   {"synchronize", "synchronization"}, {"throttle", "throttling"},
    {"verify", "verification"},     {"archive", "archiving"},      {"benchmark", "benchmarking"},
    {"checkpoint", "checkpointing"}, {"dispatch", "dispatcher"},   {"extract", "extraction"},
    {"interpolate", "interpolation"}, {"deploy", "deployment"},    {"render", "renderer"},
}};

constexpr std::array<std::string_view, 24> kDecoyBases = {
    "stream", "buffer", "socket", "packet", "thread", "kernel", "vector", "matrix",
    "cursor", "signal", "widget", "ledger", "bucket", "quota",  "shard",  "tensor",
    "sensor", "beacon", "router", "pixel",  "glyph",  "cluster", "channel", "frame"};

constexpr std::array<std::string_view, 4> kDecoySuffixes = {"s", "ed", "ing", "er"};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string decoy_variant(std::string_view base, std::size_t which) {
    return std::string(base) + std::string(kDecoySuffixes[which % kDecoySuffixes.size()]);
}

/// Words the generator must never emit as filler because they carry meaning
/// for some query.
std::set<std::string, std::less<>> reserved_words() {
    std::set<std::string, std::less<>> out;
    for (const auto& s : kSynonyms) {
        out.emplace(s.query_form);
        out.emplace(s.snippet_form);
    }
    for (const auto b : kDecoyBases) {
        out.emplace(b);
        for (std::size_t k = 0; k < kDecoySuffixes.size(); ++k) out.insert(decoy_variant(b, k));
    }
    return out;
}

void check_tables() {
    std::set<std::string, std::less<>> queries;
    std::set<std::string, std::less<>> emitted;
    for (const auto& s : kSynonyms) {
        queries.emplace(s.query_form);
        emitted.emplace(s.snippet_form);
    }
    for (const auto b : kDecoyBases) {
        queries.emplace(b);
        for (std::size_t k = 0; k < kDecoySuffixes.size(); ++k) emitted.insert(decoy_variant(b, k));
    }
    for (const auto& q : queries) {
        if (emitted.count(q) != 0) throw std::logic_error("synthetic tables: query word '" + q + "' is also emitted");
    }
}

class Vocabulary {
public:
    Vocabulary(SeededRng& rng, std::size_t size, std::size_t min_syllables, std::size_t max_syllables) {
        const auto reserved = reserved_words();
        std::set<std::string> seen;
        while (words_.size() < size) {
            std::string w;
            const auto syllables = rng.between(min_syllables, max_syllables);
            for (std::uint64_t s = 0; s < syllables; ++s) {
                w += kConsonants[rng.below(kConsonants.size())];
                w += kVowels[rng.below(kVowels.size())];
            }
            if (reserved.count(w) != 0 || is_reserved_keyword(w, LanguageFamily::python_like) ||
                is_reserved_keyword(w, LanguageFamily::c_like) || !seen.insert(w).second) {
                continue;
            }
            words_.push_back(std::move(w));
        }
    }
    [[nodiscard]] const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
};

/// Emits python_like filler code in small self-contained blocks.
class CodeWriter {
public:
    CodeWriter(SeededRng& rng, const std::vector<std::string>& vocab) : rng_(rng), vocab_(vocab) {}

    [[nodiscard]] std::string word() { return rng_.pick(vocab_); }

    /// One block of neutral code; `pick` supplies identifiers.
    template <typename Pick>
    void block(std::vector<std::string>& lines, Pick&& pick) {
        switch (rng_.below(4)) {
            case 0: {
                const auto a = pick();
                const auto b = pick();
                const auto v = pick();
                const auto name = word();
                lines.push_back("def " + name + "(" + a + ", " + b + "):");
                lines.push_back("    " + v + " = " + a + " + " + b);
                const auto limit = std::to_string(rng_.below(100));
                const auto callee = pick();
                lines.push_back("    if " + v + " > " + limit + ":");
                lines.push_back("        return " + callee + "(" + v + ")");
                lines.push_back("    return " + b);
                break;
            }
            case 1: {
                const auto attr = pick();
                const auto p = pick();
                const auto cls = capitalized(word());
                const auto method = word();
                lines.push_back("class " + cls + ":");
                lines.push_back("    def " + method + "(self, " + p + "):");
                lines.push_back("        self." + attr + " = " + p);
                lines.push_back("        return self." + attr);
                break;
            }
            case 2: {
                std::array<std::string, 7> w;
                for (auto& x : w) x = pick();
                const auto n = std::to_string(rng_.below(1000));
                lines.push_back("# " + w[0] + " " + w[1] + " " + w[2] + " " + w[3]);
                lines.push_back(w[4] + " = [" + w[5] + ", " + w[6] + ", " + n + "]");
                break;
            }
            default: {
                const auto x = pick();
                const auto seq = pick();
                const auto fn = pick();
                const auto arg = pick();
                lines.push_back("for " + x + " in " + seq + ":");
                lines.push_back("    " + fn + "(" + x + ", " + arg + ")");
                break;
            }
        }
        if (rng_.chance(0.5)) lines.emplace_back("");
    }

    void neutral_lines(std::vector<std::string>& lines, std::size_t target) {
        const std::size_t goal = lines.size() + target;
        while (lines.size() < goal) block(lines, [this] { return word(); });
    }

private:
    static std::string capitalized(std::string w) {
        if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
        return w;
    }

    SeededRng& rng_;
    const std::vector<std::string>& vocab_;
};

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::string unique_path(std::set<std::string>& used, SeededRng& rng, const std::vector<std::string>& dirs,
                        CodeWriter& writer, std::string_view top) {
    while (true) {
        const auto& dir = rng.pick(dirs);
        const auto stem = writer.word();
        auto p = std::string(top) + "/" + dir + "/" + stem + ".py";
        if (used.insert(p).second) return p;
    }
}

}  // namespace

std::uint64_t SeededRng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below requires n >= 1");
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
}

SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, const SyntheticConfig& config) {
    check_tables();
    SeededRng rng(seed);
    const Vocabulary vocab(rng, 600, 2, 3);
    CodeWriter writer(rng, vocab.words());
    std::vector<std::string> dirs;
    for (int i = 0; i < 12; ++i) dirs.push_back(writer.word());

    SyntheticDataset out;
    std::set<std::string> used_paths;

    for (std::size_t i = 0; i < config.neutral_files; ++i) {
        std::vector<std::string> lines;
        writer.neutral_lines(lines, rng.between(20, 90));
        out.files.push_back({unique_path(used_paths, rng, dirs, writer, "src"), LanguageFamily::python_like,
                             join_lines(lines)});
    }

    for (std::size_t i = 0; i < config.decoy_files; ++i) {
        std::vector<std::string_view> bases(kDecoyBases.begin(), kDecoyBases.end());
        rng.shuffle(bases);
        bases.resize(4);
        auto pick = [&] {
            if (rng.chance(0.25)) return writer.word();
            const auto base = bases[rng.below(bases.size())];
            return decoy_variant(base, rng.below(kDecoySuffixes.size()));
        };
        std::vector<std::string> lines;
        const auto target = rng.between(20, 90);
        while (lines.size() < target) writer.block(lines, pick);
        out.files.push_back({unique_path(used_paths, rng, dirs, writer, "lib"), LanguageFamily::python_like,
                             join_lines(lines)});
    }

    std::set<std::string> anchors;
    for (std::size_t i = 0; i < config.lexical_queries; ++i) {
        std::string anchor;
        do {
            anchor = writer.word();
            anchor += writer.word();
            anchor += std::to_string(rng.between(10, 99));
        } while (!anchors.insert(anchor).second);
        std::vector<std::string_view> bases(kDecoyBases.begin(), kDecoyBases.end());
        rng.shuffle(bases);

        std::vector<std::string> lines;
        writer.neutral_lines(lines, rng.between(5, 25));
        const auto start = static_cast<std::uint32_t>(lines.size() + 1);
        const auto a = writer.word();
        const auto b = writer.word();
        const auto v = writer.word();
        lines.push_back("def " + anchor + "(" + a + ", " + b + "):");
        const auto helper = writer.word();
        lines.push_back("    " + v + " = " + helper + "(" + a + ")");
        lines.push_back("    return " + v + " + " + b);
        const auto end = static_cast<std::uint32_t>(lines.size());
        lines.emplace_back("");
        writer.neutral_lines(lines, rng.between(5, 20));

        const auto path = unique_path(used_paths, rng, dirs, writer, "src");
        out.files.push_back({path, LanguageFamily::python_like, join_lines(lines)});
        EvalQuery q;
        char id[16];
        std::snprintf(id, sizeof id, "%03zu", i + 1);
        q.id = std::string(kLexicalQueryPrefix) + id;
        q.text = anchor;
        for (std::size_t k = 0; k < 4; ++k) q.text += " " + std::string(bases[k]);
        q.relevant_spans.push_back({path, start, end});
        out.queries.push_back(std::move(q));
    }

    std::set<std::vector<std::size_t>> combos;
    for (std::size_t i = 0; i < config.paraphrase_queries; ++i) {
        std::vector<std::size_t> concepts;
        do {
            std::vector<std::size_t> all(kSynonyms.size());
            for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
            rng.shuffle(all);
            concepts.assign(all.begin(), all.begin() + 3);
            std::sort(concepts.begin(), concepts.end());
        } while (!combos.insert(concepts).second);
        rng.shuffle(concepts);
        std::vector<std::string> forms;
        for (const auto c : concepts) forms.emplace_back(kSynonyms[c].snippet_form);

        std::vector<std::string> lines;
        writer.neutral_lines(lines, rng.between(0, 6));
        const auto start = static_cast<std::uint32_t>(lines.size() + 1);
        const auto p = writer.word();
        const auto fn = writer.word();
        lines.push_back("def " + fn + "(" + p + "):");
        lines.push_back("    # " + forms[0] + " " + forms[1] + " " + forms[2]);
        lines.push_back("    " + forms[0] + " = " + forms[1] + "(" + p + ")");
        lines.push_back("    " + forms[2] + " = " + forms[0] + " + " + p);
        lines.push_back("    return " + forms[2] + "  # " + forms[0] + " " + forms[1] + " " + forms[2]);
        const auto end = static_cast<std::uint32_t>(lines.size());
        lines.emplace_back("");
        writer.neutral_lines(lines, rng.between(0, 6));

        const auto path = unique_path(used_paths, rng, dirs, writer, "src");
        out.files.push_back({path, LanguageFamily::python_like, join_lines(lines)});
        EvalQuery q;
        char id[16];
        std::snprintf(id, sizeof id, "%03zu", i + 1);
        q.id = std::string(kParaphraseQueryPrefix) + id;
        for (const auto c : concepts) {
            if (!q.text.empty()) q.text += ' ';
            q.text += kSynonyms[c].query_form;
        }
        q.relevant_spans.push_back({path, start, end});
        out.queries.push_back(std::move(q));
    }

    std::sort(out.files.begin(), out.files.end(),
              [](const SourceFile& x, const SourceFile& y) { return x.path < y.path; });
    return out;
}

ScaleRepo generate_scale_repo(std::uint64_t seed, std::size_t file_count, std::size_t lines_per_file,
                              std::size_t query_count) {
    SeededRng rng(seed);
    const Vocabulary vocab(rng, 4000, 2, 4);
    CodeWriter writer(rng, vocab.words());
    std::vector<std::string> dirs;
    for (int i = 0; i < 64; ++i) dirs.push_back(writer.word());

    ScaleRepo out;
    std::set<std::string> used;
    out.files.reserve(file_count);
    for (std::size_t i = 0; i < file_count; ++i) {
        std::vector<std::string> lines;
        writer.neutral_lines(lines, lines_per_file);
        lines.resize(lines_per_file);
        out.total_lines += lines.size();
        out.files.push_back({unique_path(used, rng, dirs, writer, "src"), LanguageFamily::python_like,
                             join_lines(lines)});
    }
    std::sort(out.files.begin(), out.files.end(),
              [](const SourceFile& x, const SourceFile& y) { return x.path < y.path; });
    for (std::size_t i = 0; i < query_count; ++i) {
        std::string q = writer.word();
        for (int k = 0; k < 2; ++k) q += " " + writer.word();
        out.queries.push_back(std::move(q));
    }
    return out;
}

void write_files(const std::vector<SourceFile>& files, const std::filesystem::path& root) {
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    for (const auto& f : files) {
        const auto target = root / f.path;
        std::filesystem::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + target.parent_path().string() + ": " + ec.message());
        write_file_atomic(target, f.content);
    }
}

std::vector<TrainingRow> generate_separable_rows(std::uint64_t seed, std::size_t count, double margin) {
    SeededRng rng(seed);
    std::vector<TrainingRow> rows;
    rows.reserve(count);
    while (rows.size() < count) {
        FeatureVector fv;
        fv.bm25_norm = rng.unit();
        fv.cosine = rng.uniform(-1.0, 1.0);
        fv.graph_norm = rng.unit();
        fv.lexical_overlap = rng.unit();
        fv.path_affinity = rng.chance(0.5) ? 1.0 : 0.0;
        fv.retriever_hits = static_cast<double>(rng.below(4)) / 3.0;
        if (std::abs(fv.cosine - 0.5) < margin || std::abs(fv.lexical_overlap - 0.3) < margin) continue;
        const int label = fv.cosine > 0.5 && fv.lexical_overlap > 0.3 ? 1 : 0;
        rows.push_back({fv, label});
    }
    return rows;
}

std::vector<LabeledExample> labeled_examples_from_dataset(const CorpusIndex& index,
                                                          const std::vector<EvalQuery>& queries,
                                                          const RetrievalConfig& config) {
    std::vector<LabeledExample> out;
    for (const auto& eq : queries) {
        Query q;
        q.text = eq.text;
        q.top_n_per_retriever = config.top_n;
        const auto pool = retrieve(index, q, config);
        std::set<ItemId> positives;
        for (const auto& item : index.items()) {
            for (const auto& l : eq.relevant_spans) {
                if (span_match(item, l)) positives.insert(item.id);
            }
        }
        for (const auto id : positives) out.push_back({eq.text, id, 1});
        for (const auto id : pool.union_ids()) {
            if (positives.count(id) == 0) out.push_back({eq.text, id, 0});
        }
    }
    return out;
}

}  // namespace ctxengine
