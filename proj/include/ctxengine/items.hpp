#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "ctxengine/text.hpp"

namespace ctxengine {

using ItemId = std::uint32_t;

/// 1-based inclusive line range.
struct LineSpan {
    std::uint32_t start_line = 1;
    std::uint32_t end_line = 1;

    [[nodiscard]] std::uint32_t length() const noexcept { return end_line - start_line + 1; }
    [[nodiscard]] bool contains(std::uint32_t line) const noexcept { return line >= start_line && line <= end_line; }
    auto operator<=>(const LineSpan&) const = default;
};

struct SourceFile {
    std::string path;  // repo-relative, '/' separated
    LanguageFamily language_tag = LanguageFamily::plain_text;
    std::string content;

    [[nodiscard]] std::size_t byte_len() const noexcept { return content.size(); }
};

/// One inverted-index posting: an item and the term's frequency in it.
struct Posting {
    ItemId item = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

inline constexpr std::string_view kLocalRepoSource = "local_repo";

struct ContextItem {
    ItemId id = 0;
    std::string path;
    LineSpan span;
    std::string text;
    ItemKind kind = ItemKind::doc;
    std::uint32_t token_count = 0;
    std::string source_tag{kLocalRepoSource};

    bool operator==(const ContextItem&) const = default;
};

}  // namespace ctxengine
