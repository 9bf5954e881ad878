#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ctxengine/evalharness.hpp"
#include "ctxengine/items.hpp"
#include "ctxengine/ranking.hpp"

namespace ctxengine {

/// Deterministic helpers over mt19937_64 whose output does not depend on the
/// standard library's distribution implementations.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n). Requires n >= 1.
    std::uint64_t below(std::uint64_t n);
    /// Uniform in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(below(v.size()))];
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }

private:
    std::mt19937_64 engine_;
};

struct SyntheticConfig {
    std::size_t lexical_queries = 50;
    std::size_t paraphrase_queries = 50;
    std::size_t neutral_files = 120;
    std::size_t decoy_files = 200;
};

/// Query ids start with these prefixes.
inline constexpr std::string_view kLexicalQueryPrefix = "lex-";
inline constexpr std::string_view kParaphraseQueryPrefix = "para-";

struct SyntheticDataset {
    std::vector<SourceFile> files;  // sorted by path
    std::vector<EvalQuery> queries;
};

/// Lexical plants: the query's rare anchor appears verbatim in the planted
/// snippet and nowhere else; the query's other words occur in the corpus only
/// as inflected variants, inside decoy files. Paraphrase plants: the query uses
/// one side of a fixed synonym table, the snippet the other, and no query word
/// appears verbatim in any file.
[[nodiscard]] SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, const SyntheticConfig& config = {});

/// Plain filler repository for scale runs, plus query strings drawn from its vocabulary.
struct ScaleRepo {
    std::vector<SourceFile> files;
    std::vector<std::string> queries;
    std::uint64_t total_lines = 0;
};
[[nodiscard]] ScaleRepo generate_scale_repo(std::uint64_t seed, std::size_t file_count, std::size_t lines_per_file,
                                            std::size_t query_count);

/// Writes each file under `root` (directories created). Throws IoError.
void write_files(const std::vector<SourceFile>& files, const std::filesystem::path& root);

/// Rows with cosine in [-1, 1] and every other feature uniform over its range,
/// labelled [cosine > 0.5 and lexical_overlap > 0.3]. Points closer than
/// `margin` to either threshold are redrawn.
[[nodiscard]] std::vector<TrainingRow> generate_separable_rows(std::uint64_t seed, std::size_t count,
                                                               double margin = 0.1);

/// One positive per matching item and the rest of each query's candidate pool
/// as negatives.
[[nodiscard]] std::vector<LabeledExample> labeled_examples_from_dataset(const CorpusIndex& index,
                                                                        const std::vector<EvalQuery>& queries,
                                                                        const RetrievalConfig& config = {});

}  // namespace ctxengine
