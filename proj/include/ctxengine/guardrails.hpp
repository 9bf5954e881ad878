#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/text.hpp"

namespace ctxengine {

enum class RecommendationKind : std::uint8_t { completion, edit, unit_test, chat };

[[nodiscard]] std::string_view to_string(RecommendationKind kind);
[[nodiscard]] std::optional<RecommendationKind> parse_recommendation_kind(std::string_view name);

struct Recommendation {
    std::string id;
    RecommendationKind kind = RecommendationKind::completion;
    std::string text;
    LanguageFamily language_tag = LanguageFamily::plain_text;
    std::optional<std::string> target_symbol;  // unit_test: the function under test
};

struct Finding {
    std::string message;
    std::uint32_t line = 0;  // 0 when not tied to a line

    bool operator==(const Finding&) const = default;
};

struct CheckResult {
    std::string check_name;
    bool pass = true;
    bool applicable = true;  // a non-applicable check always passes
    std::string note;
    std::vector<Finding> findings;
};

struct GuardrailReport {
    std::string recommendation_id;
    std::vector<CheckResult> results;
    bool verdict = true;  // conjunction of results[i].pass

    [[nodiscard]] std::string to_json() const;
};

/// Builds a report whose verdict is the conjunction of the results.
[[nodiscard]] GuardrailReport make_report(std::string recommendation_id, std::vector<CheckResult> results);

/// Names allowed without a definition in the repository, per language family.
class Allowlist {
public:
    /// The lists shipped in data/allowlists, compiled in.
    [[nodiscard]] static Allowlist builtin();

    /// One identifier per line, '#' comments. Throws IoError if unreadable.
    void load_file(const std::filesystem::path& path, LanguageFamily family);
    void add_text(std::string_view text, LanguageFamily family);
    void add(std::string name, LanguageFamily family);
    [[nodiscard]] bool contains(std::string_view name, LanguageFamily family) const;
    [[nodiscard]] std::size_t size(LanguageFamily family) const;

private:
    std::set<std::string, std::less<>> c_like_;
    std::set<std::string, std::less<>> python_like_;
};

/// Delimiter balance for () [] {} after string/comment-aware lexing, plus
/// unterminated strings and block comments. Not applicable to plain_text.
[[nodiscard]] CheckResult check_syntax(std::string_view text, LanguageFamily family);

/// Every called or attribute-accessed identifier must be in the corpus symbol
/// table, defined in the text, or allowlisted. Names shorter than the symbol
/// table's minimum identifier length cannot be checked and are ignored.
[[nodiscard]] CheckResult check_symbols(std::string_view text, LanguageFamily family, const CorpusIndex& index,
                                        const Allowlist& allowlist);

/// The target must be called, and every non-spread call must match the
/// arity of some corpus definition of it.
[[nodiscard]] CheckResult check_test(std::string_view text, LanguageFamily family, std::string_view target_symbol,
                                     const CorpusIndex& index);

/// Raised when an external command cannot be started (missing shell or
/// command); distinct from the command reporting a failure.
class ExternalCommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExternalCheckOptions {
    std::chrono::milliseconds timeout{30'000};
    std::string file_name = "snippet.txt";
    std::string check_name = "external";
};

/// Writes `text` into a fresh temporary directory, replaces every {file} in
/// the template with the shell-quoted path, and runs it with /bin/sh -c.
/// Exit status 0 passes; a timeout kills the process group and fails.
[[nodiscard]] CheckResult run_external_check(std::string_view command_template, std::string_view text,
                                             const ExternalCheckOptions& options = {});

/// Extension point for model-based review. No implementation ships.
class Judge {
public:
    virtual ~Judge() = default;
    [[nodiscard]] virtual CheckResult judge(const Recommendation& recommendation,
                                            std::span<const ContextItem> context) = 0;
};

struct GuardrailConfig {
    std::vector<std::string> external_commands;  // run for every recommendation
    std::string test_command;                    // run for unit_test recommendations when non-empty
    std::chrono::milliseconds timeout{30'000};
    Judge* judge = nullptr;
};

/// Runs every applicable check in a fixed order.
[[nodiscard]] GuardrailReport run_guardrails(const Recommendation& recommendation, const CorpusIndex& index,
                                             const Allowlist& allowlist, const GuardrailConfig& config = {},
                                             std::span<const ContextItem> context = {});

/// File extension used for the temp file of an external check.
[[nodiscard]] std::string_view default_extension(LanguageFamily family);

}  // namespace ctxengine
