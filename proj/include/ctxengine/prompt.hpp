#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/ranking.hpp"

namespace ctxengine {

/// Placeholders: {path}, {start_line}, {end_line} in item_header; {query} in
/// query_section. Anything else in braces is copied verbatim.
struct PromptTemplate {
    std::string preamble;
    std::string item_header;
    std::string separator;
    std::string query_section;
    bool highest_last = true;  // render the best item nearest the query

    [[nodiscard]] static PromptTemplate builtin_default();

    /// Sections start at lines "[preamble]", "[item_header]", "[separator]",
    /// "[query]" or "[order]"; a body runs verbatim up to the next header line.
    /// "[order]" holds "highest_last" or "selection". Throws std::invalid_argument.
    [[nodiscard]] static PromptTemplate parse(std::string_view text);
};

struct AssembledPrompt {
    std::string text;
    std::uint64_t token_count = 0;
    std::vector<ItemId> included;  // selection order
    std::vector<ItemId> dropped;
};

/// Items are considered in the given order and each is kept only if the whole
/// rendering still fits the budget. Throws std::invalid_argument when the
/// preamble and query alone exceed it.
[[nodiscard]] AssembledPrompt assemble(std::span<const ContextItem> selection, std::string_view query,
                                       const PromptTemplate& tmpl, std::uint64_t budget_tokens);

[[nodiscard]] AssembledPrompt assemble(const RankedSelection& selection, const CorpusIndex& index,
                                       std::string_view query, const PromptTemplate& tmpl,
                                       std::uint64_t budget_tokens);

/// Rendering of exactly these items, in the given order, with no budget.
[[nodiscard]] std::string render_prompt(std::span<const ContextItem* const> items, std::string_view query,
                                        const PromptTemplate& tmpl);

}  // namespace ctxengine
