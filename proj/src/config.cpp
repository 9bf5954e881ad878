#include "ctxengine/config.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <variant>

#include "ctxengine/error.hpp"
#include "ctxengine/fileio.hpp"

namespace ctxengine {

namespace {

using Value = std::variant<std::string, double, bool, std::vector<std::string>>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space_byte(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_space_byte(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

class LineParser {
public:
    LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("config line " + std::to_string(line_) + ": " + msg);
    }

    void skip_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    void expect_end() {
        skip_space();
        if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected text after value");
    }

    std::string quoted() {
        if (pos_ >= s_.size() || s_[pos_] != '"') fail("expected a quoted string");
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: fail(std::string("unknown escape \\") + e);
                }
            }
            out += c;
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    Value value() {
        skip_space();
        if (pos_ >= s_.size()) fail("missing value");
        Value v;
        if (s_[pos_] == '"') {
            v = quoted();
        } else if (s_[pos_] == '[') {
            ++pos_;
            std::vector<std::string> items;
            skip_space();
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
            } else {
                while (true) {
                    skip_space();
                    items.push_back(quoted());
                    skip_space();
                    if (pos_ < s_.size() && s_[pos_] == ',') {
                        ++pos_;
                        continue;
                    }
                    if (pos_ < s_.size() && s_[pos_] == ']') {
                        ++pos_;
                        break;
                    }
                    fail("expected ',' or ']' in array");
                }
            }
            v = std::move(items);
        } else {
            auto end = s_.find('#', pos_);
            const auto word = trim(s_.substr(pos_, end == std::string_view::npos ? end : end - pos_));
            pos_ = end == std::string_view::npos ? s_.size() : end;
            if (word == "true") {
                v = true;
            } else if (word == "false") {
                v = false;
            } else {
                const std::string w(word);
                char* stop = nullptr;
                const double d = std::strtod(w.c_str(), &stop);
                if (w.empty() || stop != w.c_str() + w.size() || !std::isfinite(d)) {
                    fail("invalid value '" + w + "' (strings must be quoted)");
                }
                v = d;
            }
        }
        expect_end();
        return v;
    }

private:
    std::string_view s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

struct FieldContext {
    const LineParser& parser;
    const std::filesystem::path& base_dir;

    [[nodiscard]] double number(const Value& v) const {
        if (const auto* d = std::get_if<double>(&v)) return *d;
        parser.fail("expected a number");
    }
    [[nodiscard]] std::uint64_t count(const Value& v) const {
        const double d = number(v);
        if (d < 0 || d != std::floor(d) || d > 9.0e15) parser.fail("expected a non-negative integer");
        return static_cast<std::uint64_t>(d);
    }
    [[nodiscard]] std::uint32_t count32(const Value& v) const {
        const auto n = count(v);
        if (n > UINT32_MAX) parser.fail("value too large");
        return static_cast<std::uint32_t>(n);
    }
    [[nodiscard]] bool boolean(const Value& v) const {
        if (const auto* b = std::get_if<bool>(&v)) return *b;
        parser.fail("expected true or false");
    }
    [[nodiscard]] std::string string(const Value& v) const {
        if (const auto* s = std::get_if<std::string>(&v)) return *s;
        parser.fail("expected a quoted string");
    }
    [[nodiscard]] std::vector<std::string> strings(const Value& v) const {
        if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
        if (const auto* s = std::get_if<std::string>(&v)) return {*s};
        parser.fail("expected an array of quoted strings");
    }
    [[nodiscard]] std::filesystem::path path(const Value& v) const {
        std::filesystem::path p = string(v);
        if (p.empty()) parser.fail("empty path");
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
};

using Setter = std::function<void(Config&, const Value&, const FieldContext&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"corpus.include", [](Config& c, const Value& v, const FieldContext& f) { c.ingest.include_globs = f.strings(v); }},
        {"corpus.exclude", [](Config& c, const Value& v, const FieldContext& f) { c.ingest.exclude_globs = f.strings(v); }},
        {"corpus.chunk_window_lines",
         [](Config& c, const Value& v, const FieldContext& f) { c.ingest.chunk_window_lines = f.count32(v); }},
        {"corpus.chunk_stride_lines",
         [](Config& c, const Value& v, const FieldContext& f) { c.ingest.chunk_stride_lines = f.count32(v); }},
        {"corpus.max_file_bytes", [](Config& c, const Value& v, const FieldContext& f) { c.ingest.max_file_bytes = f.count(v); }},
        {"retrieval.top_n", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.top_n = f.count(v); }},
        {"retrieval.rrf_k", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.rrf_k = f.number(v); }},
        {"retrieval.bm25_k1", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.bm25.k1 = f.number(v); }},
        {"retrieval.bm25_b", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.bm25.b = f.number(v); }},
        {"retrieval.keyword", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.use_keyword = f.boolean(v); }},
        {"retrieval.semantic", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.use_semantic = f.boolean(v); }},
        {"retrieval.graph", [](Config& c, const Value& v, const FieldContext& f) { c.retrieval.use_graph = f.boolean(v); }},
        {"ranking.model", [](Config& c, const Value& v, const FieldContext& f) { c.model_path = f.path(v); }},
        {"ranking.policy",
         [](Config& c, const Value& v, const FieldContext& f) {
             const auto s = f.string(v);
             if (s == "threshold") {
                 c.policy = PolicyKind::threshold;
             } else if (s == "budget") {
                 c.policy = PolicyKind::budget;
             } else {
                 f.parser.fail("policy must be \"threshold\" or \"budget\"");
             }
         }},
        {"ranking.threshold", [](Config& c, const Value& v, const FieldContext& f) { c.threshold = f.number(v); }},
        {"ranking.budget_completion",
         [](Config& c, const Value& v, const FieldContext& f) { c.budgets[RecommendationKind::completion] = f.count(v); }},
        {"ranking.budget_edit",
         [](Config& c, const Value& v, const FieldContext& f) { c.budgets[RecommendationKind::edit] = f.count(v); }},
        {"ranking.budget_unit_test",
         [](Config& c, const Value& v, const FieldContext& f) { c.budgets[RecommendationKind::unit_test] = f.count(v); }},
        {"ranking.budget_chat",
         [](Config& c, const Value& v, const FieldContext& f) { c.budgets[RecommendationKind::chat] = f.count(v); }},
        {"prompt.template", [](Config& c, const Value& v, const FieldContext& f) { c.template_path = f.path(v); }},
        {"guardrails.external_commands",
         [](Config& c, const Value& v, const FieldContext& f) { c.external_commands = f.strings(v); }},
        {"guardrails.test_command", [](Config& c, const Value& v, const FieldContext& f) { c.test_command = f.string(v); }},
        {"guardrails.timeout_seconds",
         [](Config& c, const Value& v, const FieldContext& f) {
             const double s = f.number(v);
             if (!(s > 0.0) || s > 86400.0) f.parser.fail("timeout_seconds must be in (0, 86400]");
             c.check_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(s * 1000.0)));
         }},
        {"guardrails.allowlist_c_like", [](Config& c, const Value& v, const FieldContext& f) { c.allowlist_c_like = f.path(v); }},
        {"guardrails.allowlist_python_like",
         [](Config& c, const Value& v, const FieldContext& f) { c.allowlist_python_like = f.path(v); }},
    };
    return table;
}

}  // namespace

void Config::validate() const {
    if (ingest.chunk_stride_lines < 1) throw InputError("corpus.chunk_stride_lines must be >= 1");
    if (ingest.chunk_window_lines < ingest.chunk_stride_lines) {
        throw InputError("corpus.chunk_window_lines must be >= corpus.chunk_stride_lines");
    }
    if (ingest.max_file_bytes == 0) throw InputError("corpus.max_file_bytes must be positive");
    if (retrieval.top_n < 1) throw InputError("retrieval.top_n must be >= 1");
    if (!(retrieval.rrf_k > 0.0)) throw InputError("retrieval.rrf_k must be positive");
    if (!(retrieval.bm25.k1 >= 0.0)) throw InputError("retrieval.bm25_k1 must be >= 0");
    if (!(retrieval.bm25.b >= 0.0 && retrieval.bm25.b <= 1.0)) throw InputError("retrieval.bm25_b must be in [0, 1]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("ranking.threshold must be in [0, 1]");
    if (check_timeout.count() <= 0) throw InputError("guardrails.timeout_seconds must be positive");
}

Config parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    Config config;
    std::string section;
    std::size_t line_no = 0;
    for (const auto raw : split_lines(text)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const LineParser parser(line, line_no);
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string_view::npos) parser.fail("unterminated section header");
            const auto rest = trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#') parser.fail("unexpected text after section header");
            section = std::string(trim(line.substr(1, close - 1)));
            if (section.empty()) parser.fail("empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) parser.fail("expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) parser.fail("empty key");
        const auto full = section.empty() ? std::string(key) : section + "." + std::string(key);
        const auto it = setters().find(full);
        if (it == setters().end()) parser.fail("unknown key '" + full + "'");
        LineParser value_parser(line.substr(eq + 1), line_no);
        const auto value = value_parser.value();
        it->second(config, value, FieldContext{parser, base_dir});
    }
    config.validate();
    return config;
}

Config load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

}  // namespace ctxengine
