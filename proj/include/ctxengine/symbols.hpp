#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/items.hpp"
#include "ctxengine/lexer.hpp"

namespace ctxengine {

enum class SiteKind : std::uint8_t { def, ref };

[[nodiscard]] std::string_view to_string(SiteKind kind);

struct SymbolOccurrence {
    std::string symbol;
    SiteKind kind = SiteKind::ref;
    std::uint32_t line = 0;

    bool operator==(const SymbolOccurrence&) const = default;
};

/// Accepted argument counts for a callable definition. `max` empty means
/// variadic.
struct Arity {
    std::uint32_t min = 0;
    std::optional<std::uint32_t> max;

    [[nodiscard]] bool accepts(std::uint32_t args) const noexcept {
        return args >= min && (!max || args <= *max);
    }
    bool operator==(const Arity&) const = default;
};

struct DefinitionSignature {
    std::string symbol;
    std::uint32_t line = 0;
    std::optional<Arity> arity;  // empty for non-callables (class, struct, ...)

    bool operator==(const DefinitionSignature&) const = default;
};

struct SymbolOptions {
    std::size_t min_identifier_length = 2;
};

struct SymbolScan {
    std::vector<SymbolOccurrence> occurrences;  // first-appearance order, unique per (symbol, kind, line)
    std::vector<DefinitionSignature> definitions;
};

[[nodiscard]] SymbolScan scan_symbols(std::string_view text, LanguageFamily family, SymbolOptions options = {});

/// Lexical def/ref extraction. plain_text files yield nothing.
[[nodiscard]] std::vector<SymbolOccurrence> extract_symbols(const SourceFile& file, SymbolOptions options = {});

struct CallSite {
    std::string callee;
    std::uint32_t line = 0;
    std::uint32_t arg_count = 0;
    bool has_spread = false;  // *args / **kw / ...xs
    bool attribute = false;   // obj.callee(...) or obj->callee(...)
};

struct CodeFacts {
    std::vector<CallSite> calls;
    std::vector<std::pair<std::string, std::uint32_t>> attribute_accesses;  // (name, line), not followed by '('
    std::vector<std::string> local_names;  // defined in the text: defs, params, assignment targets, imports
};

[[nodiscard]] CodeFacts analyze_code(std::string_view text, LanguageFamily family);

}  // namespace ctxengine
