// ctxe_gendata: writes the synthetic evaluation repository, filler repositories
// for scale runs, and separable training rows.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <string>

#include "ctxengine/error.hpp"
#include "ctxengine/evalharness.hpp"
#include "ctxengine/fileio.hpp"
#include "ctxengine/synthetic.hpp"

namespace {

using namespace ctxengine;

int run(int argc, char** argv) {
    CLI::App app{"ctxe_gendata: generate synthetic repositories and datasets"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string out;

    SyntheticConfig sc;
    auto* dataset = app.add_subcommand("dataset", "Planted-snippet repository plus dataset.jsonl");
    dataset->add_option("-o,--out", out, "Output directory (repo/ and dataset.jsonl)")->required();
    dataset->add_option("--seed", seed, "Seed");
    dataset->add_option("--lexical", sc.lexical_queries, "Lexical plants");
    dataset->add_option("--paraphrase", sc.paraphrase_queries, "Paraphrase plants");
    dataset->add_option("--neutral", sc.neutral_files, "Neutral files");
    dataset->add_option("--decoys", sc.decoy_files, "Decoy files");

    std::size_t files = 10'000;
    std::size_t lines = 100;
    std::size_t queries = 100;
    auto* scale = app.add_subcommand("scale", "Filler repository plus queries.txt");
    scale->add_option("-o,--out", out, "Output directory (repo/ and queries.txt)")->required();
    scale->add_option("--seed", seed, "Seed");
    scale->add_option("--files", files, "File count")->check(CLI::PositiveNumber);
    scale->add_option("--lines", lines, "Lines per file")->check(CLI::PositiveNumber);
    scale->add_option("--queries", queries, "Query count");

    std::size_t count = 2000;
    double margin = 0.1;
    auto* rows = app.add_subcommand("rows", "Linearly separable feature rows as JSONL");
    rows->add_option("-o,--out", out, "Output JSONL file")->required();
    rows->add_option("--seed", seed, "Seed");
    rows->add_option("--count", count, "Row count")->check(CLI::PositiveNumber);
    rows->add_option("--margin", margin, "Minimum distance from the labelling thresholds")->check(CLI::Range(0.0, 0.2));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::filesystem::path dir(out);
        if (dataset->parsed()) {
            const auto ds = generate_synthetic_dataset(seed, sc);
            write_files(ds.files, dir / "repo");
            write_file_atomic(dir / "dataset.jsonl", dataset_to_jsonl(ds.queries));
            std::printf("%zu files, %zu queries\n", ds.files.size(), ds.queries.size());
        } else if (scale->parsed()) {
            const auto repo = generate_scale_repo(seed, files, lines, queries);
            write_files(repo.files, dir / "repo");
            std::string text;
            for (const auto& q : repo.queries) text += q + "\n";
            write_file_atomic(dir / "queries.txt", text);
            std::printf("%zu files, %llu lines\n", repo.files.size(), static_cast<unsigned long long>(repo.total_lines));
        } else if (rows->parsed()) {
            const auto data = generate_separable_rows(seed, count, margin);
            std::string text;
            for (const auto& r : data) {
                const auto v = r.features.values();
                nlohmann::ordered_json j;
                j["features"] = std::vector<double>(v.begin(), v.end());
                j["label"] = r.label;
                text += j.dump() + "\n";
            }
            write_file_atomic(out, text);
            std::printf("%zu rows\n", data.size());
        }
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
