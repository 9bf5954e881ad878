#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/embed.hpp"
#include "ctxengine/items.hpp"
#include "ctxengine/symbols.hpp"

namespace ctxengine {

struct IngestConfig {
    std::vector<std::string> include_globs{"*"};
    std::vector<std::string> exclude_globs{".git/*",  "*/.git/*",  ".hg/*",   ".svn/*",
                                           "node_modules/*", "*/node_modules/*", "build/*", "*.o"};
    std::uint32_t chunk_window_lines = 40;
    std::uint32_t chunk_stride_lines = 30;
    std::uint64_t max_file_bytes = 8u << 20;

    bool operator==(const IngestConfig&) const = default;
};

/// Files seen during ingestion and why some were not indexed.
struct IngestReport {
    std::uint64_t files_seen = 0;
    std::uint64_t files_indexed = 0;
    std::uint64_t skipped_excluded = 0;
    std::uint64_t skipped_binary = 0;
    std::uint64_t skipped_invalid_utf8 = 0;
    std::uint64_t skipped_too_large = 0;
    std::uint64_t skipped_unreadable = 0;  // warnings

    bool operator==(const IngestReport&) const = default;
};

struct FileRecord {
    std::string path;
    LanguageFamily language = LanguageFamily::plain_text;
    ItemKind kind = ItemKind::doc;
    std::uint64_t byte_len = 0;

    bool operator==(const FileRecord&) const = default;
};

struct CorpusStats {
    std::uint64_t item_count = 0;
    double average_item_tokens = 0.0;

    bool operator==(const CorpusStats&) const = default;
};

struct SymbolSite {
    ItemId item = 0;
    std::uint32_t line = 0;

    auto operator<=>(const SymbolSite&) const = default;
};

struct DefinitionRecord {
    std::string path;
    std::uint32_t line = 0;
    std::optional<Arity> arity;

    bool operator==(const DefinitionRecord&) const = default;
};

struct SymbolEntry {
    std::vector<SymbolSite> defs;
    std::vector<SymbolSite> refs;
    std::vector<DefinitionRecord> signatures;  // one per definition occurrence

    bool operator==(const SymbolEntry&) const = default;
};

/// Term -> postings, stored as sorted terms with CSR offsets.
class InvertedIndex {
public:
    InvertedIndex() = default;
    InvertedIndex(std::vector<std::string> terms, std::vector<std::uint64_t> offsets, std::vector<Posting> postings);

    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const;
    [[nodiscard]] std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }
    [[nodiscard]] const std::vector<std::string>& terms() const noexcept { return terms_; }
    [[nodiscard]] const std::vector<std::uint64_t>& offsets() const noexcept { return offsets_; }
    [[nodiscard]] const std::vector<Posting>& all_postings() const noexcept { return postings_; }

    bool operator==(const InvertedIndex&) const = default;

private:
    std::vector<std::string> terms_;
    std::vector<std::uint64_t> offsets_;  // terms_.size() + 1 entries
    std::vector<Posting> postings_;
};

/// Everything a CorpusIndex is built from; also the serialization unit.
struct CorpusData {
    IngestConfig config;
    IngestReport report;
    std::vector<FileRecord> files;  // lexicographic by path
    std::vector<ContextItem> items;  // id == position
    InvertedIndex inverted_index;
    std::vector<std::string> symbol_names;  // sorted
    std::vector<SymbolEntry> symbol_entries;  // parallel to symbol_names
    std::vector<float> embeddings;  // items.size() x kEmbeddingDim
};

/// Immutable repository snapshot. Safe for any number of concurrent readers.
class CorpusIndex {
public:
    CorpusIndex() : CorpusIndex(CorpusData{}) {}
    explicit CorpusIndex(CorpusData data);

    [[nodiscard]] const std::vector<ContextItem>& items() const noexcept { return data_.items; }
    [[nodiscard]] const ContextItem& item(ItemId id) const { return data_.items.at(id); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.items.size(); }

    [[nodiscard]] const InvertedIndex& inverted_index() const noexcept { return data_.inverted_index; }
    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const {
        return data_.inverted_index.postings(term);
    }
    [[nodiscard]] std::span<const std::uint32_t> item_lengths() const noexcept { return item_lengths_; }

    [[nodiscard]] const std::vector<std::string>& symbol_names() const noexcept { return data_.symbol_names; }
    [[nodiscard]] const std::vector<SymbolEntry>& symbol_entries() const noexcept { return data_.symbol_entries; }
    [[nodiscard]] const SymbolEntry* find_symbol(std::string_view name) const;
    /// Symbols referenced inside an item (indices into symbol_names()).
    [[nodiscard]] std::span<const std::uint32_t> referenced_symbols(ItemId id) const;

    [[nodiscard]] std::span<const float> embeddings() const noexcept { return data_.embeddings; }
    [[nodiscard]] std::span<const float> embedding(ItemId id) const;

    [[nodiscard]] const CorpusStats& stats() const noexcept { return stats_; }
    [[nodiscard]] const IngestConfig& config() const noexcept { return data_.config; }
    [[nodiscard]] const IngestReport& report() const noexcept { return data_.report; }
    [[nodiscard]] const std::vector<FileRecord>& files() const noexcept { return data_.files; }
    [[nodiscard]] bool has_file(std::string_view path) const;
    [[nodiscard]] std::size_t symbol_site_count() const noexcept;

    [[nodiscard]] const CorpusData& data() const noexcept { return data_; }

    /// Throws std::logic_error naming the first violated index invariant.
    void validate() const;

private:
    CorpusData data_;
    CorpusStats stats_;
    std::vector<std::uint32_t> item_lengths_;
    std::vector<std::uint64_t> item_ref_offsets_;
    std::vector<std::uint32_t> item_ref_symbols_;
};

/// Line-window chunking. Requires window >= stride >= 1 (std::invalid_argument).
[[nodiscard]] std::vector<ContextItem> chunk_file(const SourceFile& file, std::uint32_t chunk_window_lines,
                                                  std::uint32_t chunk_stride_lines);

/// Builds an index from in-memory files (paths must be unique).
[[nodiscard]] CorpusIndex build_index(std::vector<SourceFile> files, const IngestConfig& config,
                                      IngestReport report = {});

/// Walks `root`, filters, and indexes. Throws IoError if root is unreadable.
[[nodiscard]] CorpusIndex ingest_repo(const std::filesystem::path& root, const IngestConfig& config = {});

[[nodiscard]] bool glob_match(std::string_view pattern, std::string_view path);

}  // namespace ctxengine
