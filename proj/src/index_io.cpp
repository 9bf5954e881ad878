#include "ctxengine/index_io.hpp"

#include <bit>
#include <cstring>
#include <type_traits>

#include "ctxengine/error.hpp"
#include "ctxengine/fileio.hpp"

namespace ctxengine {

namespace {

constexpr std::string_view kMagic{"CTXEIDX\0", 8};

static_assert(std::endian::native == std::endian::little, "index format assumes a little-endian host");

class Writer {
public:
    template <typename T>
    void pod(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof(T));
    }
    void u8(std::uint8_t v) { pod(v); }
    void u32(std::uint32_t v) { pod(v); }
    void u64(std::uint64_t v) { pod(v); }
    void f64(double v) { pod(v); }
    void str(std::string_view s) {
        u64(s.size());
        buf_.append(s.data(), s.size());
    }
    void raw(const void* data, std::size_t n) { buf_.append(static_cast<const char*>(data), n); }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint8_t u8() { return pod<std::uint8_t>(); }
    std::uint32_t u32() { return pod<std::uint32_t>(); }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    double f64() { return pod<double>(); }
    std::string str() {
        const auto n = u64();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::string_view raw(std::size_t n) {
        need(n);
        auto v = bytes_.substr(pos_, n);
        pos_ += n;
        return v;
    }
    std::size_t count(std::size_t min_bytes_each) {
        const auto n = u64();
        if (min_bytes_each != 0 && n > (bytes_.size() - pos_) / min_bytes_each) throw InputError("index file truncated");
        return static_cast<std::size_t>(n);
    }
    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (n > bytes_.size() - pos_) throw InputError("index file truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

template <typename E>
E enum_from(std::uint8_t v, std::uint8_t max) {
    if (v > max) throw InputError("index file has an invalid enum value");
    return static_cast<E>(v);
}

void write_strings(Writer& w, const std::vector<std::string>& v) {
    w.u64(v.size());
    for (const auto& s : v) w.str(s);
}

std::vector<std::string> read_strings(Reader& r) {
    std::vector<std::string> v(r.count(8));
    for (auto& s : v) s = r.str();
    return v;
}

// Posting and SymbolSite are two packed u32 fields, so on a little-endian
// host their in-memory layout is the file layout.
template <typename T>
void write_pairs(Writer& w, const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T> && sizeof(T) == 8);
    w.u64(v.size());
    w.raw(v.data(), v.size() * sizeof(T));
}

template <typename T>
std::vector<T> read_pairs(Reader& r) {
    static_assert(std::is_trivially_copyable_v<T> && sizeof(T) == 8);
    std::vector<T> v(r.count(8));
    const auto bytes = r.raw(v.size() * sizeof(T));
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
}

void write_sites(Writer& w, const std::vector<SymbolSite>& sites) { write_pairs(w, sites); }

std::vector<SymbolSite> read_sites(Reader& r) { return read_pairs<SymbolSite>(r); }

}  // namespace

std::string serialize_index(const CorpusIndex& index) {
    const auto& d = index.data();
    Writer w;
    w.raw(kMagic.data(), kMagic.size());
    w.u32(kIndexFormatVersion);

    write_strings(w, d.config.include_globs);
    write_strings(w, d.config.exclude_globs);
    w.u32(d.config.chunk_window_lines);
    w.u32(d.config.chunk_stride_lines);
    w.u64(d.config.max_file_bytes);

    for (const auto v : {d.report.files_seen, d.report.files_indexed, d.report.skipped_excluded, d.report.skipped_binary,
                         d.report.skipped_invalid_utf8, d.report.skipped_too_large, d.report.skipped_unreadable}) {
        w.u64(v);
    }

    w.u64(d.files.size());
    for (const auto& f : d.files) {
        w.str(f.path);
        w.u8(static_cast<std::uint8_t>(f.language));
        w.u8(static_cast<std::uint8_t>(f.kind));
        w.u64(f.byte_len);
    }

    w.u64(d.items.size());
    for (const auto& it : d.items) {
        w.u32(it.id);
        w.str(it.path);
        w.u32(it.span.start_line);
        w.u32(it.span.end_line);
        w.u8(static_cast<std::uint8_t>(it.kind));
        w.u32(it.token_count);
        w.str(it.source_tag);
        w.str(it.text);
    }

    const auto& inv = d.inverted_index;
    write_strings(w, inv.terms());
    w.u64(inv.offsets().size());
    w.raw(inv.offsets().data(), inv.offsets().size() * sizeof(std::uint64_t));
    write_pairs(w, inv.all_postings());

    write_strings(w, d.symbol_names);
    w.u64(d.symbol_entries.size());
    for (const auto& e : d.symbol_entries) {
        write_sites(w, e.defs);
        write_sites(w, e.refs);
        w.u64(e.signatures.size());
        for (const auto& s : e.signatures) {
            w.str(s.path);
            w.u32(s.line);
            w.u8(s.arity ? 1 : 0);
            if (s.arity) {
                w.u32(s.arity->min);
                w.u8(s.arity->max ? 1 : 0);
                w.u32(s.arity->max.value_or(0));
            }
        }
    }

    w.u64(d.embeddings.size());
    w.raw(d.embeddings.data(), d.embeddings.size() * sizeof(float));
    return w.take();
}

CorpusIndex deserialize_index(std::string_view bytes) {
    Reader r(bytes);
    if (r.raw(kMagic.size()) != kMagic) throw InputError("not a context index file (bad magic)");
    const auto version = r.u32();
    if (version != kIndexFormatVersion) {
        throw InputError("unsupported index format version " + std::to_string(version));
    }
    CorpusData d;
    d.config.include_globs = read_strings(r);
    d.config.exclude_globs = read_strings(r);
    d.config.chunk_window_lines = r.u32();
    d.config.chunk_stride_lines = r.u32();
    d.config.max_file_bytes = r.u64();

    d.report.files_seen = r.u64();
    d.report.files_indexed = r.u64();
    d.report.skipped_excluded = r.u64();
    d.report.skipped_binary = r.u64();
    d.report.skipped_invalid_utf8 = r.u64();
    d.report.skipped_too_large = r.u64();
    d.report.skipped_unreadable = r.u64();

    d.files.resize(r.count(18));
    for (auto& f : d.files) {
        f.path = r.str();
        f.language = enum_from<LanguageFamily>(r.u8(), 2);
        f.kind = enum_from<ItemKind>(r.u8(), 2);
        f.byte_len = r.u64();
    }

    d.items.resize(r.count(41));
    for (auto& it : d.items) {
        it.id = r.u32();
        it.path = r.str();
        it.span.start_line = r.u32();
        it.span.end_line = r.u32();
        it.kind = enum_from<ItemKind>(r.u8(), 2);
        it.token_count = r.u32();
        it.source_tag = r.str();
        it.text = r.str();
    }

    auto terms = read_strings(r);
    std::vector<std::uint64_t> offsets(r.count(8));
    const auto off_bytes = r.raw(offsets.size() * sizeof(std::uint64_t));
    std::memcpy(offsets.data(), off_bytes.data(), off_bytes.size());
    auto postings = read_pairs<Posting>(r);
    try {
        d.inverted_index = InvertedIndex(std::move(terms), std::move(offsets), std::move(postings));
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    d.symbol_names = read_strings(r);
    d.symbol_entries.resize(r.count(24));
    if (d.symbol_entries.size() != d.symbol_names.size()) throw InputError("symbol table size mismatch");
    for (auto& e : d.symbol_entries) {
        e.defs = read_sites(r);
        e.refs = read_sites(r);
        e.signatures.resize(r.count(13));
        for (auto& s : e.signatures) {
            s.path = r.str();
            s.line = r.u32();
            if (r.u8() != 0) {
                Arity a;
                a.min = r.u32();
                const bool bounded = r.u8() != 0;
                const auto max = r.u32();
                if (bounded) a.max = max;
                s.arity = a;
            }
        }
    }

    d.embeddings.resize(r.count(4));
    const auto emb = r.raw(d.embeddings.size() * sizeof(float));
    std::memcpy(d.embeddings.data(), emb.data(), emb.size());
    if (!r.done()) throw InputError("trailing bytes after index data");
    if (d.embeddings.size() != d.items.size() * kEmbeddingDim) throw InputError("embedding matrix size mismatch");
    for (std::size_t i = 0; i < d.items.size(); ++i) {
        if (d.items[i].id != i) throw InputError("index item ids are not dense");
    }
    return CorpusIndex(std::move(d));
}

void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_index(index));
}

CorpusIndex load_index(const std::filesystem::path& path) { return deserialize_index(read_file(path)); }

}  // namespace ctxengine
