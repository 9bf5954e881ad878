#include "ctxengine/corpus.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ctxengine/error.hpp"
#include "ctxengine/kernels.hpp"
#include "ctxengine/text.hpp"

namespace ctxengine {

namespace fs = std::filesystem;

InvertedIndex::InvertedIndex(std::vector<std::string> terms, std::vector<std::uint64_t> offsets,
                             std::vector<Posting> postings)
    : terms_(std::move(terms)), offsets_(std::move(offsets)), postings_(std::move(postings)) {
    if (offsets_.empty()) offsets_.push_back(0);
    if (offsets_.size() != terms_.size() + 1 || offsets_.back() != postings_.size()) {
        throw std::invalid_argument("inverted index offsets do not match postings");
    }
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
    const auto it = std::lower_bound(terms_.begin(), terms_.end(), term,
                                     [](const std::string& a, std::string_view b) { return a < b; });
    if (it == terms_.end() || *it != term) return {};
    const auto idx = static_cast<std::size_t>(it - terms_.begin());
    return std::span<const Posting>(postings_).subspan(offsets_[idx], offsets_[idx + 1] - offsets_[idx]);
}

CorpusIndex::CorpusIndex(CorpusData data) : data_(std::move(data)) {
    if (data_.inverted_index.offsets().empty()) data_.inverted_index = InvertedIndex({}, {0}, {});
    const auto n = data_.items.size();
    item_lengths_.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        item_lengths_[i] = data_.items[i].token_count;
        total += data_.items[i].token_count;
    }
    stats_.item_count = n;
    stats_.average_item_tokens = n == 0 ? 0.0 : total / static_cast<double>(n);

    // item -> referenced symbols, for one-hop graph expansion. Two-pass CSR
    // fill; symbols arrive in ascending order, so duplicates are adjacent.
    std::vector<std::uint64_t> fill(n + 1, 0);
    for (const auto& entry : data_.symbol_entries) {
        for (const auto& site : entry.refs) {
            if (site.item < n) ++fill[site.item + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) fill[i + 1] += fill[i];
    std::vector<std::uint32_t> raw(fill[n]);
    auto cursor = fill;
    for (std::size_t s = 0; s < data_.symbol_entries.size(); ++s) {
        for (const auto& site : data_.symbol_entries[s].refs) {
            if (site.item < n) raw[cursor[site.item]++] = static_cast<std::uint32_t>(s);
        }
    }
    item_ref_offsets_.assign(n + 1, 0);
    item_ref_symbols_.reserve(raw.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto first = raw.begin() + static_cast<std::ptrdiff_t>(fill[i]);
        const auto last = std::unique(first, raw.begin() + static_cast<std::ptrdiff_t>(fill[i + 1]));
        item_ref_symbols_.insert(item_ref_symbols_.end(), first, last);
        item_ref_offsets_[i + 1] = item_ref_symbols_.size();
    }
}

const SymbolEntry* CorpusIndex::find_symbol(std::string_view name) const {
    const auto& names = data_.symbol_names;
    const auto it = std::lower_bound(names.begin(), names.end(), name,
                                     [](const std::string& a, std::string_view b) { return a < b; });
    if (it == names.end() || *it != name) return nullptr;
    return &data_.symbol_entries[static_cast<std::size_t>(it - names.begin())];
}

std::span<const std::uint32_t> CorpusIndex::referenced_symbols(ItemId id) const {
    if (id >= data_.items.size()) return {};
    return std::span<const std::uint32_t>(item_ref_symbols_)
        .subspan(item_ref_offsets_[id], item_ref_offsets_[id + 1] - item_ref_offsets_[id]);
}

std::span<const float> CorpusIndex::embedding(ItemId id) const {
    if (id >= data_.items.size()) throw std::out_of_range("embedding: unknown item id");
    return std::span<const float>(data_.embeddings).subspan(static_cast<std::size_t>(id) * kEmbeddingDim, kEmbeddingDim);
}

bool CorpusIndex::has_file(std::string_view path) const {
    const auto it = std::lower_bound(data_.files.begin(), data_.files.end(), path,
                                     [](const FileRecord& f, std::string_view p) { return f.path < p; });
    return it != data_.files.end() && it->path == path;
}

std::size_t CorpusIndex::symbol_site_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : data_.symbol_entries) n += e.defs.size() + e.refs.size();
    return n;
}

void CorpusIndex::validate() const {
    const auto n = data_.items.size();
    auto fail = [](const std::string& what) { throw std::logic_error("index invariant violated: " + what); };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& it = data_.items[i];
        if (it.id != i) fail("item ids are not dense");
        if (it.span.start_line > it.span.end_line) fail("span start after end");
        if (it.token_count != token_count(it.text)) fail("token_count mismatch for item " + std::to_string(i));
        if (i > 0) {
            const auto& prev = data_.items[i - 1];
            if (std::tie(prev.path, prev.span.start_line) >= std::tie(it.path, it.span.start_line)) {
                fail("items not in (path, start_line) order");
            }
        }
    }
    for (const auto& p : data_.inverted_index.all_postings()) {
        if (p.item >= n) fail("posting references missing item");
    }
    if (data_.embeddings.size() != n * kEmbeddingDim) fail("embedding matrix size");
    for (std::size_t i = 0; i < n; ++i) {
        const double norm2 = kernels::dot(data_.embeddings.data() + i * kEmbeddingDim,
                                          data_.embeddings.data() + i * kEmbeddingDim, kEmbeddingDim);
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) fail("embedding norm for item " + std::to_string(i));
    }
    for (const auto& entry : data_.symbol_entries) {
        for (const auto* sites : {&entry.defs, &entry.refs}) {
            for (const auto& s : *sites) {
                if (s.item >= n || !data_.items[s.item].span.contains(s.line)) fail("symbol site outside item span");
            }
        }
    }
    double total = 0.0;
    for (const auto& it : data_.items) total += it.token_count;
    const double avg = n == 0 ? 0.0 : total / static_cast<double>(n);
    if (stats_.item_count != n || stats_.average_item_tokens != avg) fail("stats disagree with items");
}

std::vector<ContextItem> chunk_file(const SourceFile& file, std::uint32_t window, std::uint32_t stride) {
    if (stride < 1 || window < stride) throw std::invalid_argument("chunking requires window >= stride >= 1");
    std::vector<ContextItem> chunks;
    if (file.content.empty()) return chunks;

    // byte offset of each line start, plus a sentinel at end of content
    std::vector<std::size_t> starts;
    starts.push_back(0);
    for (std::size_t i = 0; i < file.content.size(); ++i) {
        if (file.content[i] == '\n' && i + 1 < file.content.size()) starts.push_back(i + 1);
    }
    const auto line_count = static_cast<std::uint32_t>(starts.size());
    starts.push_back(file.content.size());

    const auto kind = kind_for_path(file.path);
    for (std::uint32_t start = 1;; start += stride) {
        const std::uint32_t end = std::min(start + window - 1, line_count);
        const std::string_view text =
            std::string_view(file.content).substr(starts[start - 1], starts[end] - starts[start - 1]);
        if (!is_blank(text)) {
            ContextItem item;
            item.path = file.path;
            item.span = {start, end};
            item.text = std::string(text);
            item.kind = kind;
            item.token_count = static_cast<std::uint32_t>(token_count(text));
            chunks.push_back(std::move(item));
        }
        if (end == line_count) break;
    }
    return chunks;
}

namespace {

struct FileChunks {
    std::vector<ContextItem> items;
    SymbolScan symbols;
};

}  // namespace

CorpusIndex build_index(std::vector<SourceFile> files, const IngestConfig& config, IngestReport report) {
    std::sort(files.begin(), files.end(), [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (files[i].path == files[i - 1].path) throw InputError("duplicate path in corpus: " + files[i].path);
    }

    std::vector<FileChunks> per_file(files.size());
    const auto nfiles = static_cast<std::int64_t>(files.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t f = 0; f < nfiles; ++f) {
        const auto& file = files[static_cast<std::size_t>(f)];
        auto& out = per_file[static_cast<std::size_t>(f)];
        out.items = chunk_file(file, config.chunk_window_lines, config.chunk_stride_lines);
        out.symbols = scan_symbols(file.content, file.language_tag);
    }

    CorpusData data;
    data.config = config;
    data.report = report;
    data.report.files_indexed = files.size();

    std::unordered_map<std::string, std::vector<Posting>> postings;
    std::unordered_map<std::string, SymbolEntry> symbols;
    std::vector<std::string> term_buffer;

    for (std::size_t f = 0; f < files.size(); ++f) {
        const auto& file = files[f];
        auto& chunks = per_file[f];
        data.files.push_back({file.path, file.language_tag, kind_for_path(file.path), file.byte_len()});
        const auto first_id = static_cast<ItemId>(data.items.size());
        for (auto& item : chunks.items) {
            item.id = static_cast<ItemId>(data.items.size());
            term_buffer = index_terms(item.text);
            std::sort(term_buffer.begin(), term_buffer.end());
            for (std::size_t i = 0; i < term_buffer.size();) {
                std::size_t j = i;
                while (j < term_buffer.size() && term_buffer[j] == term_buffer[i]) ++j;
                postings[term_buffer[i]].push_back({item.id, static_cast<std::uint32_t>(j - i)});
                i = j;
            }
            data.items.push_back(std::move(item));
        }
        const auto file_items = std::span<const ContextItem>(data.items).subspan(first_id);
        auto items_containing = [&](std::uint32_t line) {
            std::vector<ItemId> ids;
            for (const auto& it : file_items) {
                if (it.span.start_line > line) break;
                if (it.span.contains(line)) ids.push_back(it.id);
            }
            return ids;
        };
        for (const auto& occ : chunks.symbols.occurrences) {
            auto& entry = symbols[occ.symbol];
            auto& sites = occ.kind == SiteKind::def ? entry.defs : entry.refs;
            for (const auto id : items_containing(occ.line)) sites.push_back({id, occ.line});
        }
        for (const auto& def : chunks.symbols.definitions) {
            symbols[def.symbol].signatures.push_back({file.path, def.line, def.arity});
        }
    }

    std::vector<std::string> terms;
    terms.reserve(postings.size());
    for (const auto& [term, _] : postings) terms.push_back(term);
    std::sort(terms.begin(), terms.end());
    std::vector<std::uint64_t> offsets{0};
    std::vector<Posting> flat;
    for (const auto& term : terms) {
        const auto& list = postings[term];
        flat.insert(flat.end(), list.begin(), list.end());
        offsets.push_back(flat.size());
    }
    data.inverted_index = InvertedIndex(std::move(terms), std::move(offsets), std::move(flat));

    for (const auto& [name, _] : symbols) data.symbol_names.push_back(name);
    std::sort(data.symbol_names.begin(), data.symbol_names.end());
    for (const auto& name : data.symbol_names) {
        auto entry = std::move(symbols[name]);
        for (auto* sites : {&entry.defs, &entry.refs}) {
            std::sort(sites->begin(), sites->end());
            sites->erase(std::unique(sites->begin(), sites->end()), sites->end());
        }
        data.symbol_entries.push_back(std::move(entry));
    }

    std::vector<std::string> texts;
    texts.reserve(data.items.size());
    for (const auto& it : data.items) texts.push_back(it.text);
    data.embeddings = kernels::embed_batch(texts);
    return CorpusIndex(std::move(data));
}

bool glob_match(std::string_view pattern, std::string_view path) {
    const std::string p(pattern);
    const std::string s(path);
    return ::fnmatch(p.c_str(), s.c_str(), 0) == 0;
}

namespace {

enum class ReadOutcome { ok, unreadable, binary, invalid_utf8, too_large };

ReadOutcome read_source(const fs::path& abs, std::uint64_t max_bytes, std::string& out) {
    std::error_code ec;
    const auto size = fs::file_size(abs, ec);
    if (ec) return ReadOutcome::unreadable;
    if (size > max_bytes) return ReadOutcome::too_large;
    std::ifstream in(abs, std::ios::binary);
    if (!in) return ReadOutcome::unreadable;
    out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) return ReadOutcome::unreadable;
    if (out.find('\0') != std::string::npos) return ReadOutcome::binary;
    if (!is_valid_utf8(out)) return ReadOutcome::invalid_utf8;
    return ReadOutcome::ok;
}

}  // namespace

CorpusIndex ingest_repo(const fs::path& root, const IngestConfig& config) {
    if (config.chunk_stride_lines < 1 || config.chunk_window_lines < config.chunk_stride_lines) {
        throw InputError("chunking requires window >= stride >= 1");
    }
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("repository root is not a readable directory: " + root.string());
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IoError("cannot read repository root " + root.string() + ": " + ec.message());

    IngestReport report;
    std::vector<std::string> rel_paths;
    for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
        if (ec) {
            ++report.skipped_unreadable;
            ec.clear();
            continue;
        }
        std::error_code type_ec;
        if (!it->is_regular_file(type_ec)) continue;
        ++report.files_seen;
        auto rel = it->path().lexically_relative(root).generic_string();
        const bool excluded = std::any_of(config.exclude_globs.begin(), config.exclude_globs.end(),
                                          [&](const std::string& g) { return glob_match(g, rel); });
        const bool included = std::any_of(config.include_globs.begin(), config.include_globs.end(),
                                          [&](const std::string& g) { return glob_match(g, rel); });
        if (excluded || !included) {
            ++report.skipped_excluded;
            continue;
        }
        rel_paths.push_back(std::move(rel));
    }
    std::sort(rel_paths.begin(), rel_paths.end());

    std::vector<SourceFile> files(rel_paths.size());
    std::vector<ReadOutcome> outcomes(rel_paths.size());
    const auto n = static_cast<std::int64_t>(rel_paths.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        files[k].path = rel_paths[k];
        files[k].language_tag = language_for_path(rel_paths[k]);
        outcomes[k] = read_source(root / rel_paths[k], config.max_file_bytes, files[k].content);
    }

    std::vector<SourceFile> kept;
    kept.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        switch (outcomes[i]) {
            case ReadOutcome::ok: kept.push_back(std::move(files[i])); break;
            case ReadOutcome::unreadable: ++report.skipped_unreadable; break;
            case ReadOutcome::binary: ++report.skipped_binary; break;
            case ReadOutcome::invalid_utf8: ++report.skipped_invalid_utf8; break;
            case ReadOutcome::too_large: ++report.skipped_too_large; break;
        }
    }
    return build_index(std::move(kept), config, report);
}

}  // namespace ctxengine
