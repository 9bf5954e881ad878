#include "ctxengine/lexer.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace ctxengine {

namespace {

const std::unordered_set<std::string_view>& python_keywords() {
    static const std::unordered_set<std::string_view> kw = {
        "False", "None",   "True",    "and",      "as",     "assert", "async", "await",
        "break", "class",  "continue", "def",     "del",    "elif",   "else",  "except",
        "finally", "for",  "from",    "global",   "if",     "import", "in",    "is",
        "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
        "while", "with",   "yield",   "end",      "module", "elsif",  "unless", "then",
        "begin", "rescue", "ensure",  "do",       "nil"};
    return kw;
}

const std::unordered_set<std::string_view>& c_like_keywords() {
    static const std::unordered_set<std::string_view> kw = {
        // C / C++
        "alignas", "alignof", "asm", "auto", "bool", "break", "case", "catch", "char", "char8_t",
        "char16_t", "char32_t", "class", "const", "constexpr", "consteval", "constinit", "const_cast",
        "continue", "co_await", "co_return", "co_yield", "decltype", "default", "delete", "do",
        "double", "dynamic_cast", "else", "enum", "explicit", "export", "extern", "false", "float",
        "for", "friend", "goto", "if", "inline", "int", "long", "mutable", "namespace", "new",
        "noexcept", "nullptr", "operator", "private", "protected", "public", "register",
        "reinterpret_cast", "return", "short", "signed", "sizeof", "static", "static_assert",
        "static_cast", "struct", "switch", "template", "this", "thread_local", "throw", "true", "try",
        "typedef", "typeid", "typename", "union", "unsigned", "using", "virtual", "void", "volatile",
        "wchar_t", "while", "override", "final",
        // Java / C#
        "abstract", "boolean", "byte", "extends", "finally", "implements", "import", "instanceof",
        "interface", "native", "package", "super", "synchronized", "throws", "transient", "null",
        // JS / TS
        "function", "let", "var", "yield", "async", "await", "typeof", "undefined",
        // Go
        "func", "defer", "fallthrough",
        // Rust
        "fn", "mut", "impl", "trait", "pub", "dyn", "unsafe", "Self", "self"};
    return kw;
}

constexpr std::array<std::string_view, 3> kPythonDefKeywords = {"def", "class", "module"};
constexpr std::array<std::string_view, 12> kCLikeDefKeywords = {
    "fn", "func", "function", "fun", "def", "class", "struct", "enum", "interface", "trait", "union", "namespace"};

constexpr std::array<std::string_view, 16> kMultiPunct = {"...", "->", "::", "**", "==", "!=", "<=", ">=",
                                                          "=>",  "+=", "-=", "*=", "/=", ":=", "&&", "||"};

bool is_ident_start(unsigned char c, LanguageFamily family) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80 ||
           (family == LanguageFamily::c_like && c == '$');
}

bool is_ident_continue(unsigned char c, LanguageFamily family) {
    return is_word_byte(c) || (family == LanguageFamily::c_like && c == '$');
}

bool is_python_string_prefix(std::string_view ident) {
    if (ident.size() > 2) return false;
    const auto lower = to_lower_ascii(ident);
    return lower == "r" || lower == "b" || lower == "u" || lower == "f" || lower == "rb" || lower == "br" ||
           lower == "fr" || lower == "rf";
}

class Lexer {
public:
    Lexer(std::string_view src, LanguageFamily family) : src_(src), family_(family) {}

    LexResult run() {
        while (pos_ < src_.size()) step();
        return std::move(result_);
    }

private:
    [[nodiscard]] unsigned char at(std::size_t i) const {
        return i < src_.size() ? static_cast<unsigned char>(src_[i]) : 0;
    }

    void emit(LexKind kind, std::size_t begin, std::size_t end, std::uint32_t line) {
        result_.tokens.push_back({kind, src_.substr(begin, end - begin), line});
    }

    void issue(std::string message, std::uint32_t line) { result_.issues.push_back({std::move(message), line}); }

    void skip_to_eol() {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
    }

    void step() {
        const unsigned char c = at(pos_);
        if (c == '\n') {
            ++line_;
            ++pos_;
            return;
        }
        if (is_space_byte(c)) {
            ++pos_;
            return;
        }
        if (family_ == LanguageFamily::python_like && c == '#') {
            skip_to_eol();
            return;
        }
        if (family_ == LanguageFamily::c_like && c == '/' && at(pos_ + 1) == '/') {
            skip_to_eol();
            return;
        }
        if (family_ == LanguageFamily::c_like && c == '/' && at(pos_ + 1) == '*') {
            block_comment();
            return;
        }
        if (c >= '0' && c <= '9') {
            number();
            return;
        }
        if (is_ident_start(c, family_)) {
            identifier();
            return;
        }
        if (c == '"') {
            quoted_string(pos_, pos_, '"');
            return;
        }
        if (c == '\'') {
            if (family_ == LanguageFamily::python_like) {
                quoted_string(pos_, pos_, '\'');
            } else {
                char_literal();
            }
            return;
        }
        if (c == '`' && family_ == LanguageFamily::c_like) {
            backtick_string();
            return;
        }
        for (auto op : kMultiPunct) {
            if (src_.substr(pos_, op.size()) == op) {
                emit(LexKind::punct, pos_, pos_ + op.size(), line_);
                pos_ += op.size();
                return;
            }
        }
        emit(LexKind::punct, pos_, pos_ + 1, line_);
        ++pos_;
    }

    void block_comment() {
        const auto start_line = line_;
        pos_ += 2;
        while (pos_ < src_.size()) {
            if (src_[pos_] == '*' && at(pos_ + 1) == '/') {
                pos_ += 2;
                return;
            }
            if (src_[pos_] == '\n') ++line_;
            ++pos_;
        }
        issue("unterminated block comment", start_line);
    }

    void number() {
        const auto begin = pos_;
        ++pos_;
        while (pos_ < src_.size()) {
            const auto c = at(pos_);
            const bool digit_sep = family_ == LanguageFamily::c_like && c == '\'' && is_word_byte(at(pos_ + 1));
            if (is_word_byte(c) || digit_sep || (c == '.' && at(pos_ + 1) >= '0' && at(pos_ + 1) <= '9')) {
                ++pos_;
            } else {
                break;
            }
        }
        emit(LexKind::number, begin, pos_, line_);
    }

    void identifier() {
        const auto begin = pos_;
        ++pos_;
        while (pos_ < src_.size() && is_ident_continue(at(pos_), family_)) ++pos_;
        const auto ident = src_.substr(begin, pos_ - begin);
        const auto next = at(pos_);
        if (family_ == LanguageFamily::python_like && (next == '"' || next == '\'') && is_python_string_prefix(ident)) {
            quoted_string(begin, pos_, static_cast<char>(next));
            return;
        }
        if (family_ == LanguageFamily::c_like && next == '"' &&
            (ident == "R" || ident == "u8R" || ident == "LR" || ident == "uR" || ident == "UR")) {
            raw_cpp_string(begin);
            return;
        }
        emit(LexKind::identifier, begin, pos_, line_);
    }

    // `begin` is where the token starts (prefix included); `quote_pos` is the
    // opening quote.
    void quoted_string(std::size_t begin, std::size_t quote_pos, char quote) {
        const auto start_line = line_;
        const bool triple = family_ == LanguageFamily::python_like && at(quote_pos + 1) == static_cast<unsigned char>(quote) &&
                            at(quote_pos + 2) == static_cast<unsigned char>(quote);
        pos_ = quote_pos + (triple ? 3 : 1);
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                if (at(pos_ + 1) == '\n') ++line_;
                pos_ += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) {
                    issue("unterminated string literal", start_line);
                    emit(LexKind::string, begin, pos_, start_line);
                    return;
                }
                ++line_;
                ++pos_;
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    ++pos_;
                    emit(LexKind::string, begin, pos_, start_line);
                    return;
                }
                if (at(pos_ + 1) == static_cast<unsigned char>(quote) && at(pos_ + 2) == static_cast<unsigned char>(quote)) {
                    pos_ += 3;
                    emit(LexKind::string, begin, pos_, start_line);
                    return;
                }
            }
            ++pos_;
        }
        pos_ = src_.size();
        issue("unterminated string literal", start_line);
        emit(LexKind::string, begin, pos_, start_line);
    }

    void raw_cpp_string(std::size_t begin) {
        const auto start_line = line_;
        const auto open = src_.find('(', pos_ + 1);
        const auto eol = src_.find('\n', pos_ + 1);
        if (open == std::string_view::npos || (eol != std::string_view::npos && open > eol)) {
            quoted_string(begin, pos_, '"');
            return;
        }
        const std::string closing = ")" + std::string(src_.substr(pos_ + 1, open - pos_ - 1)) + "\"";
        const auto close = src_.find(closing, open + 1);
        const auto end = close == std::string_view::npos ? src_.size() : close + closing.size();
        line_ += static_cast<std::uint32_t>(std::count(src_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                                       src_.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
        pos_ = end;
        if (close == std::string_view::npos) issue("unterminated string literal", start_line);
        emit(LexKind::string, begin, pos_, start_line);
    }

    void backtick_string() {
        const auto start_line = line_;
        const auto begin = pos_;
        ++pos_;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                if (at(pos_ + 1) == '\n') ++line_;
                pos_ += 2;
                continue;
            }
            if (c == '\n') ++line_;
            ++pos_;
            if (c == '`') {
                emit(LexKind::string, begin, pos_, start_line);
                return;
            }
        }
        pos_ = src_.size();
        issue("unterminated string literal", start_line);
        emit(LexKind::string, begin, pos_, start_line);
    }

    // 'x', '\n', '\u{1F600}' are char literals; 'a in `<'a>` is a Rust
    // lifetime and stays an identifier.
    void char_literal() {
        std::size_t j = pos_ + 1;
        const std::size_t limit = std::min(src_.size(), pos_ + 12);
        while (j < limit && src_[j] != '\n') {
            if (src_[j] == '\\') {
                j += 2;
                continue;
            }
            if (src_[j] == '\'') {
                emit(LexKind::string, pos_, j + 1, line_);
                pos_ = j + 1;
                return;
            }
            ++j;
        }
        if (is_ident_start(at(pos_ + 1), family_)) {
            ++pos_;  // lifetime / label marker
            return;
        }
        issue("unterminated character literal", line_);
        const auto start = pos_;
        skip_to_eol();
        emit(LexKind::string, start, pos_, line_);
    }

    std::string_view src_;
    LanguageFamily family_;
    std::size_t pos_ = 0;
    std::uint32_t line_ = 1;
    LexResult result_;
};

}  // namespace

LexResult lex_code(std::string_view text, LanguageFamily family) {
    if (family == LanguageFamily::plain_text) {
        LexResult result;
        std::uint32_t line = 1;
        std::size_t offset = 0;
        for_each_token(text, [&](std::string_view tok, bool word) {
            const auto at = static_cast<std::size_t>(tok.data() - text.data());
            line += static_cast<std::uint32_t>(std::count(text.begin() + static_cast<std::ptrdiff_t>(offset),
                                                          text.begin() + static_cast<std::ptrdiff_t>(at), '\n'));
            offset = at;
            result.tokens.push_back({word ? LexKind::identifier : LexKind::punct, tok, line});
        });
        return result;
    }
    return Lexer(text, family).run();
}

bool is_reserved_keyword(std::string_view ident, LanguageFamily family) {
    switch (family) {
        case LanguageFamily::python_like: return python_keywords().count(ident) != 0;
        case LanguageFamily::c_like: return c_like_keywords().count(ident) != 0;
        case LanguageFamily::plain_text: return false;
    }
    return false;
}

bool is_definition_keyword(std::string_view ident, LanguageFamily family) {
    if (family == LanguageFamily::python_like) {
        return std::find(kPythonDefKeywords.begin(), kPythonDefKeywords.end(), ident) != kPythonDefKeywords.end();
    }
    if (family == LanguageFamily::c_like) {
        return std::find(kCLikeDefKeywords.begin(), kCLikeDefKeywords.end(), ident) != kCLikeDefKeywords.end();
    }
    return false;
}

}  // namespace ctxengine
