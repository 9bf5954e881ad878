#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxengine {

enum class LanguageFamily : std::uint8_t { c_like, python_like, plain_text };
enum class ItemKind : std::uint8_t { code, doc, config };

[[nodiscard]] std::string_view to_string(LanguageFamily family);
[[nodiscard]] std::string_view to_string(ItemKind kind);
[[nodiscard]] std::optional<LanguageFamily> parse_language_family(std::string_view name);

/// Language family and item kind are decided by file extension (and a few
/// well-known file names). Anything unrecognised is plain text / doc.
[[nodiscard]] LanguageFamily language_for_path(std::string_view path);
[[nodiscard]] ItemKind kind_for_path(std::string_view path);

/// Bytes that make up a word run: ASCII alphanumerics, underscore, and any
/// byte of a multi-byte UTF-8 sequence.
[[nodiscard]] constexpr bool is_word_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
           c >= 0x80;
}

[[nodiscard]] constexpr bool is_space_byte(unsigned char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

/// Calls `fn(std::string_view token, bool is_word)` for each token. A token is
/// a maximal run of word bytes or a single non-whitespace punctuation byte.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            std::size_t j = i + 1;
            while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
            fn(text.substr(i, j - i), true);
            i = j;
        } else {
            fn(text.substr(i, 1), false);
            ++i;
        }
    }
}

/// Token count used for every budget decision in the engine.
[[nodiscard]] std::size_t token_count(std::string_view text);

/// Lower-cased word tokens in order of appearance; these are the BM25 terms.
[[nodiscard]] std::vector<std::string> index_terms(std::string_view text);

/// Sorted, de-duplicated index_terms.
[[nodiscard]] std::vector<std::string> unique_terms(std::string_view text);

[[nodiscard]] std::string to_lower_ascii(std::string_view s);

[[nodiscard]] bool is_valid_utf8(std::string_view bytes) noexcept;

/// Splits into lines without their terminators. A trailing newline does not
/// produce an extra empty line.
[[nodiscard]] std::vector<std::string_view> split_lines(std::string_view text);

[[nodiscard]] bool is_blank(std::string_view line) noexcept;

}  // namespace ctxengine
