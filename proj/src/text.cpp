#include "ctxengine/text.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace ctxengine {

namespace {

std::string_view extension_of(std::string_view path) {
    const auto slash = path.find_last_of('/');
    const auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot == std::string_view::npos || dot == 0) return {};
    return name.substr(dot + 1);
}

std::string_view basename_of(std::string_view path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view value) {
    return std::find(set.begin(), set.end(), value) != set.end();
}

constexpr std::array<std::string_view, 30> kCLikeExt = {
    "c",  "h",   "cc",   "cpp", "cxx",   "hpp",   "hh", "hxx", "ipp",  "inl",
    "java", "js", "jsx", "mjs", "ts",    "tsx",   "go", "rs",  "cs",   "swift",
    "kt", "kts", "scala", "m",  "mm",    "php",   "dart", "cu", "cuh", "proto"};
constexpr std::array<std::string_view, 4> kPythonExt = {"py", "pyi", "pyx", "rb"};
constexpr std::array<std::string_view, 6> kShellLikeCode = {"sh", "bash", "zsh", "lua", "pl", "r"};
constexpr std::array<std::string_view, 12> kConfigExt = {"json", "yaml", "yml", "toml", "ini",  "cfg",
                                                        "conf", "xml",  "properties", "cmake", "gradle", "lock"};
constexpr std::array<std::string_view, 6> kConfigNames = {"CMakeLists.txt", "Makefile", "Dockerfile",
                                                          ".gitignore",     "setup.cfg", "package.json"};

}  // namespace

std::string_view to_string(LanguageFamily family) {
    switch (family) {
        case LanguageFamily::c_like: return "c_like";
        case LanguageFamily::python_like: return "python_like";
        case LanguageFamily::plain_text: return "plain_text";
    }
    return "plain_text";
}

std::string_view to_string(ItemKind kind) {
    switch (kind) {
        case ItemKind::code: return "code";
        case ItemKind::doc: return "doc";
        case ItemKind::config: return "config";
    }
    return "doc";
}

std::optional<LanguageFamily> parse_language_family(std::string_view name) {
    if (name == "c_like") return LanguageFamily::c_like;
    if (name == "python_like") return LanguageFamily::python_like;
    if (name == "plain_text") return LanguageFamily::plain_text;
    return std::nullopt;
}

LanguageFamily language_for_path(std::string_view path) {
    const auto ext = to_lower_ascii(extension_of(path));
    if (contains(kCLikeExt, ext)) return LanguageFamily::c_like;
    if (contains(kPythonExt, ext)) return LanguageFamily::python_like;
    return LanguageFamily::plain_text;
}

ItemKind kind_for_path(std::string_view path) {
    if (contains(kConfigNames, basename_of(path))) return ItemKind::config;
    const auto ext = to_lower_ascii(extension_of(path));
    if (contains(kCLikeExt, ext) || contains(kPythonExt, ext) || contains(kShellLikeCode, ext)) {
        return ItemKind::code;
    }
    if (contains(kConfigExt, ext)) return ItemKind::config;
    return ItemKind::doc;
}

std::size_t token_count(std::string_view text) {
    std::size_t count = 0;
    for_each_token(text, [&](std::string_view, bool) { ++count; });
    return count;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> index_terms(std::string_view text) {
    std::vector<std::string> terms;
    for_each_token(text, [&](std::string_view tok, bool word) {
        if (word) terms.push_back(to_lower_ascii(tok));
    });
    return terms;
}

std::vector<std::string> unique_terms(std::string_view text) {
    auto terms = index_terms(text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

bool is_valid_utf8(std::string_view bytes) noexcept {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(bytes[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong encodings, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
            return false;
        }
        i += len;
    }
    return true;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

bool is_blank(std::string_view line) noexcept {
    return std::all_of(line.begin(), line.end(),
                       [](char c) { return is_space_byte(static_cast<unsigned char>(c)); });
}

}  // namespace ctxengine
