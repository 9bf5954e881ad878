#include "ctxengine/symbols.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_set>

namespace ctxengine {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

using Tokens = std::vector<LexToken>;

bool is_punct(const LexToken& t, std::string_view p) { return t.kind == LexKind::punct && t.text == p; }
bool is_ident(const LexToken& t) { return t.kind == LexKind::identifier; }

// Names that can precede a call without making it a declaration.
const std::unordered_set<std::string_view>& control_words() {
    static const std::unordered_set<std::string_view> words = {
        "return", "if",     "else",  "while",     "for",     "switch",  "case",  "do",     "throw",
        "new",    "delete", "sizeof", "typeof",   "goto",    "co_return", "co_yield", "co_await",
        "await",  "yield",  "in",     "instanceof", "and",   "or",      "not",   "assert", "catch",
        "elif",   "raise",  "print",  "echo",     "defer",   "go",      "static_assert", "decltype"};
    return words;
}

bool is_open(const LexToken& t) { return is_punct(t, "(") || is_punct(t, "[") || is_punct(t, "{"); }
bool is_close(const LexToken& t) { return is_punct(t, ")") || is_punct(t, "]") || is_punct(t, "}"); }

std::size_t matching_close(const Tokens& toks, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        if (is_open(toks[i])) {
            ++depth;
        } else if (is_close(toks[i])) {
            if (--depth == 0) return i;
        }
    }
    return npos;
}

std::size_t skip_angle_brackets(const Tokens& toks, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        if (is_punct(toks[i], "<")) ++depth;
        if (is_punct(toks[i], ">")) {
            if (--depth == 0) return i + 1;
        }
        if (is_punct(toks[i], ";") || is_punct(toks[i], "{")) return npos;
    }
    return npos;
}

bool starts_statement(const Tokens& toks, std::size_t i, LanguageFamily family) {
    if (i == 0) return true;
    if (toks[i - 1].line != toks[i].line) return true;
    if (family == LanguageFamily::c_like) {
        return is_punct(toks[i - 1], ";") || is_punct(toks[i - 1], "{") || is_punct(toks[i - 1], "}");
    }
    return is_punct(toks[i - 1], ";");
}

std::size_t statement_first(const Tokens& toks, std::size_t i, LanguageFamily family) {
    while (!starts_statement(toks, i, family)) --i;
    return i;
}

struct ParamSegment {
    std::size_t begin;
    std::size_t end;  // exclusive
};

std::vector<ParamSegment> split_top_level(const Tokens& toks, std::size_t open, std::size_t close, bool track_angles) {
    std::vector<ParamSegment> segments;
    int depth = 0;
    int angle = 0;
    std::size_t begin = open + 1;
    for (std::size_t i = open + 1; i < close; ++i) {
        const auto& t = toks[i];
        if (is_open(t)) ++depth;
        if (is_close(t)) --depth;
        if (track_angles && is_punct(t, "<")) ++angle;
        if (track_angles && is_punct(t, ">") && angle > 0) --angle;
        if (depth == 0 && angle == 0 && is_punct(t, ",")) {
            segments.push_back({begin, i});
            begin = i + 1;
        }
    }
    segments.push_back({begin, close});
    std::erase_if(segments, [](const ParamSegment& s) { return s.begin >= s.end; });
    return segments;
}

bool segment_has_top_level(const Tokens& toks, const ParamSegment& seg, std::string_view punct) {
    int depth = 0;
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
        if (is_open(toks[i])) ++depth;
        if (is_close(toks[i])) --depth;
        if (depth == 0 && is_punct(toks[i], punct)) return true;
    }
    return false;
}

bool is_receiver_param(const Tokens& toks, const ParamSegment& seg, LanguageFamily family) {
    if (family == LanguageFamily::python_like) {
        return is_ident(toks[seg.begin]) && (toks[seg.begin].text == "self" || toks[seg.begin].text == "cls");
    }
    // Rust: self, &self, &mut self, mut self, self: Type
    for (std::size_t i = seg.begin; i < seg.end && i < seg.begin + 3; ++i) {
        if (is_ident(toks[i]) && toks[i].text == "self") return true;
        if (!(is_punct(toks[i], "&") || (is_ident(toks[i]) && toks[i].text == "mut") || toks[i].kind == LexKind::punct)) {
            return false;
        }
    }
    return false;
}

struct ParsedParams {
    Arity arity;
    std::vector<std::string_view> names;
};

ParsedParams parse_params(const Tokens& toks, std::size_t open, std::size_t close, LanguageFamily family) {
    ParsedParams out;
    const auto segments = split_top_level(toks, open, close, family == LanguageFamily::c_like);
    std::uint32_t required = 0;
    std::uint32_t total = 0;
    bool variadic = false;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        const auto& first = toks[seg.begin];
        if (s == 0 && is_receiver_param(toks, seg, family)) continue;
        if (family == LanguageFamily::python_like) {
            if (seg.end - seg.begin == 1 && (is_punct(first, "*") || is_punct(first, "/"))) continue;
            if (is_punct(first, "*") || is_punct(first, "**")) {
                variadic = true;
                if (seg.begin + 1 < seg.end && is_ident(toks[seg.begin + 1])) out.names.push_back(toks[seg.begin + 1].text);
                continue;
            }
            if (is_ident(first)) out.names.push_back(first.text);
        } else {
            if (segments.size() == 1 && seg.end - seg.begin == 1 && is_ident(first) && first.text == "void") continue;
            bool spread = false;
            std::string_view last_name;
            for (std::size_t i = seg.begin; i < seg.end; ++i) {
                if (is_punct(toks[i], "...")) spread = true;
                if (is_punct(toks[i], "=") || is_punct(toks[i], ":")) break;
                if (is_ident(toks[i])) last_name = toks[i].text;
            }
            // Go/TS/Rust put the name first ("a int", "a: number"); C puts it last.
            if (is_ident(first) && seg.begin + 1 < seg.end && is_punct(toks[seg.begin + 1], ":")) last_name = first.text;
            if (!last_name.empty()) out.names.push_back(last_name);
            if (spread) {
                variadic = true;
                continue;
            }
        }
        ++total;
        if (!segment_has_top_level(toks, seg, "=")) ++required;
    }
    out.arity.min = required;
    if (!variadic) out.arity.max = total;
    return out;
}

struct DefHit {
    std::size_t name_index;
    std::optional<Arity> arity;
    std::vector<std::string_view> params;
};

class DefinitionFinder {
public:
    DefinitionFinder(const Tokens& toks, LanguageFamily family) : toks_(toks), family_(family) {}

    std::vector<DefHit> run() {
        std::vector<DefHit> hits;
        for (std::size_t i = 0; i + 1 < toks_.size(); ++i) {
            if (!is_ident(toks_[i])) continue;
            std::optional<DefHit> hit;
            if (is_definition_keyword(toks_[i].text, family_)) {
                hit = keyword_definition(i);
            } else if (family_ == LanguageFamily::c_like && is_punct(toks_[i + 1], "(")) {
                hit = c_style_definition(i);
            }
            if (hit) hits.push_back(std::move(*hit));
        }
        return hits;
    }

private:
    std::optional<DefHit> callable_at(std::size_t name) const {
        std::size_t open = name + 1;
        if (open < toks_.size() && family_ == LanguageFamily::c_like && is_punct(toks_[open], "<")) {
            open = skip_angle_brackets(toks_, open);
            if (open == npos) return std::nullopt;
        }
        if (open >= toks_.size() || !is_punct(toks_[open], "(")) return DefHit{name, std::nullopt, {}};
        const auto close = matching_close(toks_, open);
        if (close == npos) return DefHit{name, std::nullopt, {}};
        auto params = parse_params(toks_, open, close, family_);
        return DefHit{name, params.arity, std::move(params.names)};
    }

    std::optional<DefHit> keyword_definition(std::size_t i) const {
        const auto kw = toks_[i].text;
        if (family_ == LanguageFamily::python_like) {
            const bool at_start =
                starts_statement(toks_, i, family_) || (i > 0 && is_ident(toks_[i - 1]) && toks_[i - 1].text == "async");
            if (!at_start) return std::nullopt;
            std::size_t name = i + 1;
            // ruby: def self.name
            if (name + 2 < toks_.size() && toks_[name].text == "self" && is_punct(toks_[name + 1], ".")) name += 2;
            if (!is_ident(toks_[name]) || is_reserved_keyword(toks_[name].text, family_)) return std::nullopt;
            if (kw == "def") return callable_at(name);
            return DefHit{name, std::nullopt, {}};
        }
        std::size_t name = i + 1;
        if (kw == "func" && is_punct(toks_[name], "(")) {  // Go method receiver
            const auto close = matching_close(toks_, name);
            if (close == npos) return std::nullopt;
            name = close + 1;
        }
        if (name >= toks_.size() || !is_ident(toks_[name]) || is_reserved_keyword(toks_[name].text, family_)) {
            return std::nullopt;
        }
        const bool callable = kw == "fn" || kw == "func" || kw == "function" || kw == "fun" || kw == "def";
        if (callable) return callable_at(name);
        if (kw == "class" || kw == "struct" || kw == "enum" || kw == "union") {
            // `struct foo *p` is a use, not a definition
            if (name + 1 < toks_.size() && toks_[name + 1].line == toks_[name].line) {
                const auto& next = toks_[name + 1];
                static constexpr std::array<std::string_view, 10> kFollow = {
                    "{", ":", ";", "<", "(", "final", "extends", "implements", "where", "="};
                const bool ok = std::any_of(kFollow.begin(), kFollow.end(),
                                            [&](std::string_view f) { return next.text == f; });
                if (!ok) return std::nullopt;
            }
        }
        return DefHit{name, std::nullopt, {}};
    }

    std::optional<DefHit> c_style_definition(std::size_t i) const {
        const auto name_text = toks_[i].text;
        if (is_reserved_keyword(name_text, family_) || control_words().count(name_text) != 0) return std::nullopt;
        const auto first = statement_first(toks_, i, family_);
        const auto close = matching_close(toks_, i + 1);
        if (close == npos) return std::nullopt;
        const LexToken* after = close + 1 < toks_.size() ? &toks_[close + 1] : nullptr;

        // walk back over a qualified name: A::B::name, ~Dtor
        std::size_t j = i;
        while (j >= first + 2 && is_punct(toks_[j - 1], "::") && is_ident(toks_[j - 2])) j -= 2;
        if (j >= first + 1 && is_punct(toks_[j - 1], "~")) --j;

        if (j == first) {
            // constructor, method shorthand, or Foo::Foo(...) : init {
            if (after == nullptr) return std::nullopt;
            if (!(is_punct(*after, "{") || (j != i && is_punct(*after, ":")))) return std::nullopt;
            return parsed(i, close);
        }
        if (control_words().count(toks_[first].text) != 0) return std::nullopt;
        for (std::size_t k = first; k < j; ++k) {
            const auto& t = toks_[k];
            if (t.kind == LexKind::identifier) {
                if (control_words().count(t.text) != 0) return std::nullopt;
                continue;
            }
            if (t.kind == LexKind::number) continue;
            static constexpr std::array<std::string_view, 10> kTypeish = {"*", "&", "&&", "::", "<", ">", ",", "[", "]", "@"};
            if (std::find(kTypeish.begin(), kTypeish.end(), t.text) == kTypeish.end()) return std::nullopt;
        }
        const auto& prev = toks_[j - 1];
        if (!(is_ident(prev) || is_punct(prev, "*") || is_punct(prev, "&") || is_punct(prev, "&&") || is_punct(prev, ">"))) {
            return std::nullopt;
        }
        if (after == nullptr) return std::nullopt;
        static constexpr std::array<std::string_view, 16> kAfter = {
            "{", ";", "const", "noexcept", "override", "final", "->", ":", "throws", "=", "volatile", "&", "&&",
            "requires", "try", "where"};
        if (std::find(kAfter.begin(), kAfter.end(), after->text) == kAfter.end()) return std::nullopt;
        return parsed(i, close);
    }

    DefHit parsed(std::size_t name, std::size_t close) const {
        auto params = parse_params(toks_, name + 1, close, family_);
        return DefHit{name, params.arity, std::move(params.names)};
    }

    const Tokens& toks_;
    LanguageFamily family_;
};

}  // namespace

std::string_view to_string(SiteKind kind) { return kind == SiteKind::def ? "def" : "ref"; }

SymbolScan scan_symbols(std::string_view text, LanguageFamily family, SymbolOptions options) {
    SymbolScan scan;
    if (family == LanguageFamily::plain_text || text.empty()) return scan;
    const auto lexed = lex_code(text, family);
    const auto& toks = lexed.tokens;
    const auto defs = DefinitionFinder(toks, family).run();

    std::unordered_set<std::size_t> def_names;
    for (const auto& d : defs) {
        def_names.insert(d.name_index);
        if (toks[d.name_index].text.size() < options.min_identifier_length) continue;
        scan.definitions.push_back({std::string(toks[d.name_index].text), toks[d.name_index].line, d.arity});
    }

    std::set<std::tuple<std::string_view, SiteKind, std::uint32_t>> seen;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (!is_ident(t) || t.text.size() < options.min_identifier_length || is_reserved_keyword(t.text, family)) continue;
        const auto kind = def_names.count(i) != 0 ? SiteKind::def : SiteKind::ref;
        if (seen.emplace(t.text, kind, t.line).second) {
            scan.occurrences.push_back({std::string(t.text), kind, t.line});
        }
    }
    return scan;
}

std::vector<SymbolOccurrence> extract_symbols(const SourceFile& file, SymbolOptions options) {
    return scan_symbols(file.content, file.language_tag, options).occurrences;
}

CodeFacts analyze_code(std::string_view text, LanguageFamily family) {
    CodeFacts facts;
    if (family == LanguageFamily::plain_text || text.empty()) return facts;
    const auto lexed = lex_code(text, family);
    const auto& toks = lexed.tokens;
    const auto defs = DefinitionFinder(toks, family).run();

    std::set<std::string> locals;
    std::unordered_set<std::size_t> def_names;
    for (const auto& d : defs) {
        def_names.insert(d.name_index);
        locals.emplace(toks[d.name_index].text);
        for (auto p : d.params) locals.emplace(p);
    }

    bool in_import = false;
    std::uint32_t import_line = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (starts_statement(toks, i, family)) {
            in_import = is_ident(t) && (t.text == "import" || t.text == "from" || t.text == "using" ||
                                        t.text == "package" || t.text == "require");
            import_line = t.line;
        }
        if (family == LanguageFamily::c_like && is_punct(t, "#") && i + 1 < toks.size() && toks[i + 1].text == "include") {
            in_import = true;
            import_line = t.line;
        }
        if (in_import && (t.line != import_line && family == LanguageFamily::python_like)) in_import = false;
        if (in_import && is_punct(t, ";")) in_import = false;
        if (!is_ident(t)) continue;
        if (in_import) {
            locals.emplace(t.text);
            continue;
        }
        if (i + 1 < toks.size()) {
            const auto& next = toks[i + 1];
            static constexpr std::array<std::string_view, 7> kAssign = {"=", ":=", "+=", "-=", "*=", "/=", ":"};
            const bool assigns = next.kind == LexKind::punct &&
                                 std::find(kAssign.begin(), kAssign.end(), next.text) != kAssign.end() &&
                                 !(next.text == ":" && family == LanguageFamily::c_like);
            if (assigns) locals.emplace(t.text);
        }
        if (i > 0 && is_ident(toks[i - 1]) &&
            (toks[i - 1].text == "as" || toks[i - 1].text == "for" || toks[i - 1].text == "let" ||
             toks[i - 1].text == "var" || toks[i - 1].text == "const" || toks[i - 1].text == "auto")) {
            locals.emplace(t.text);
        }
        // python tuple targets: for a, b in ...
        if (family == LanguageFamily::python_like && i > 1 && is_punct(toks[i - 1], ",") && is_ident(toks[i - 2]) &&
            locals.count(std::string(toks[i - 2].text)) != 0 && i + 1 < toks.size() &&
            (is_punct(toks[i + 1], "=") || (is_ident(toks[i + 1]) && toks[i + 1].text == "in"))) {
            locals.emplace(t.text);
        }
    }

    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (!is_ident(t) || is_reserved_keyword(t.text, family) || def_names.count(i) != 0) continue;
        const bool attribute = i > 0 && (is_punct(toks[i - 1], ".") || is_punct(toks[i - 1], "->"));
        const bool called = i + 1 < toks.size() && is_punct(toks[i + 1], "(");
        if (called) {
            if (control_words().count(t.text) != 0) continue;
            const auto close = matching_close(toks, i + 1);
            CallSite call{std::string(t.text), t.line, 0, false, attribute};
            if (close != npos) {
                const auto segs = split_top_level(toks, i + 1, close, false);
                call.arg_count = static_cast<std::uint32_t>(segs.size());
                for (const auto& seg : segs) {
                    const auto& f = toks[seg.begin];
                    if (is_punct(f, "...") || (family == LanguageFamily::python_like && (is_punct(f, "*") || is_punct(f, "**")))) {
                        call.has_spread = true;
                    }
                }
            }
            facts.calls.push_back(std::move(call));
        } else if (attribute) {
            // keyword arguments and assignment targets like self.x = ... are handled as locals
            if (i + 1 < toks.size() && is_punct(toks[i + 1], "=")) {
                locals.emplace(t.text);
                continue;
            }
            facts.attribute_accesses.emplace_back(std::string(t.text), t.line);
        }
    }
    facts.local_names.assign(locals.begin(), locals.end());
    return facts;
}

}  // namespace ctxengine
