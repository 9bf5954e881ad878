#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/text.hpp"

namespace ctxengine {

enum class LexKind : std::uint8_t { identifier, number, punct, string };

struct LexToken {
    LexKind kind;
    std::string_view text;  // view into the lexed source
    std::uint32_t line;     // 1-based line of the first byte
};

struct LexIssue {
    std::string message;
    std::uint32_t line;
};

struct LexResult {
    std::vector<LexToken> tokens;
    std::vector<LexIssue> issues;  // unterminated strings / block comments
};

/// String- and comment-aware lexer for the two code families. Comments are
/// dropped; string literals become single `string` tokens. plain_text input
/// is split with the generic token rule and never reports issues.
[[nodiscard]] LexResult lex_code(std::string_view text, LanguageFamily family);

[[nodiscard]] bool is_reserved_keyword(std::string_view ident, LanguageFamily family);

/// Keywords that introduce a named definition (`def`, `class`, `fn`, ...).
[[nodiscard]] bool is_definition_keyword(std::string_view ident, LanguageFamily family);

}  // namespace ctxengine
