#include "ctxengine/prompt.hpp"

#include <stdexcept>

#include "ctxengine/text.hpp"

namespace ctxengine {

namespace {

struct Binding {
    std::string_view name;
    std::string_view value;
};

/// Single left-to-right pass, so substituted values are never re-expanded.
std::string substitute(std::string_view pattern, std::initializer_list<Binding> bindings) {
    std::string out;
    out.reserve(pattern.size());
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == '{') {
            const auto close = pattern.find('}', i);
            if (close != std::string_view::npos) {
                const auto name = pattern.substr(i + 1, close - i - 1);
                const Binding* hit = nullptr;
                for (const auto& b : bindings) {
                    if (b.name == name) hit = &b;
                }
                if (hit != nullptr) {
                    out += hit->value;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += pattern[i++];
    }
    return out;
}

}  // namespace

PromptTemplate PromptTemplate::builtin_default() {
    PromptTemplate t;
    t.preamble = "You are a coding assistant. The following snippets come from the user's repository.\n\n";
    t.item_header = "File: {path} (lines {start_line}-{end_line})\n```\n";
    t.separator = "```\n\n";
    t.query_section = "Question: {query}\n";
    t.highest_last = true;
    return t;
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
    PromptTemplate t;
    std::string* current = nullptr;
    bool seen_query = false;
    std::string order;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        const auto next = eol == std::string_view::npos ? text.size() : eol + 1;
        auto line = text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
            const auto name = line.substr(1, line.size() - 2);
            if (name == "preamble") {
                current = &t.preamble;
            } else if (name == "item_header") {
                current = &t.item_header;
            } else if (name == "separator") {
                current = &t.separator;
            } else if (name == "query") {
                current = &t.query_section;
                seen_query = true;
            } else if (name == "order") {
                current = &order;
            } else {
                throw std::invalid_argument("unknown template section [" + std::string(name) + "]");
            }
            pos = next;
            continue;
        }
        if (current == nullptr) {
            if (!is_blank(line)) throw std::invalid_argument("template text before the first section header");
        } else {
            current->append(text.substr(pos, next - pos));
        }
        pos = next;
    }
    if (!seen_query || t.query_section.find("{query}") == std::string::npos) {
        throw std::invalid_argument("template needs a [query] section containing {query}");
    }
    std::string mode;
    for (const char c : order) {
        if (!is_space_byte(static_cast<unsigned char>(c))) mode += c;
    }
    if (mode.empty() || mode == "highest_last") {
        t.highest_last = true;
    } else if (mode == "selection") {
        t.highest_last = false;
    } else {
        throw std::invalid_argument("template [order] must be highest_last or selection");
    }
    return t;
}

std::string render_prompt(std::span<const ContextItem* const> items, std::string_view query,
                          const PromptTemplate& tmpl) {
    std::string out = tmpl.preamble;
    for (const auto* item : items) {
        const auto start = std::to_string(item->span.start_line);
        const auto end = std::to_string(item->span.end_line);
        out += substitute(tmpl.item_header, {{"path", item->path}, {"start_line", start}, {"end_line", end}});
        out += item->text;
        out += tmpl.separator;
    }
    out += substitute(tmpl.query_section, {{"query", query}});
    return out;
}

AssembledPrompt assemble(std::span<const ContextItem> selection, std::string_view query, const PromptTemplate& tmpl,
                         std::uint64_t budget_tokens) {
    std::vector<const ContextItem*> kept;
    auto render = [&](const std::vector<const ContextItem*>& items) {
        if (!tmpl.highest_last) return render_prompt(items, query, tmpl);
        std::vector<const ContextItem*> reversed(items.rbegin(), items.rend());
        return render_prompt(reversed, query, tmpl);
    };

    AssembledPrompt out;
    out.text = render(kept);
    out.token_count = token_count(out.text);
    if (out.token_count > budget_tokens) {
        throw std::invalid_argument("token budget " + std::to_string(budget_tokens) +
                                    " is smaller than the preamble and query (" + std::to_string(out.token_count) +
                                    " tokens)");
    }
    for (const auto& item : selection) {
        kept.push_back(&item);
        auto candidate = render(kept);
        const auto tokens = token_count(candidate);
        if (tokens > budget_tokens) {
            kept.pop_back();
            out.dropped.push_back(item.id);
            continue;
        }
        out.text = std::move(candidate);
        out.token_count = tokens;
        out.included.push_back(item.id);
    }
    return out;
}

AssembledPrompt assemble(const RankedSelection& selection, const CorpusIndex& index, std::string_view query,
                         const PromptTemplate& tmpl, std::uint64_t budget_tokens) {
    std::vector<ContextItem> items;
    items.reserve(selection.items.size());
    for (const auto& s : selection.items) items.push_back(index.item(s.item_id));
    return assemble(items, query, tmpl, budget_tokens);
}

}  // namespace ctxengine
