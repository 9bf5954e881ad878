#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/guardrails.hpp"
#include "ctxengine/ranking.hpp"
#include "ctxengine/retrieval.hpp"

namespace ctxengine {

enum class PolicyKind : std::uint8_t { threshold, budget };

struct Config {
    IngestConfig ingest;
    RetrievalConfig retrieval;

    std::optional<std::filesystem::path> model_path;
    PolicyKind policy = PolicyKind::threshold;
    double threshold = 0.5;
    std::map<RecommendationKind, std::uint64_t> budgets{{RecommendationKind::completion, 2048},
                                                        {RecommendationKind::edit, 4096},
                                                        {RecommendationKind::unit_test, 8192},
                                                        {RecommendationKind::chat, 12288}};

    std::optional<std::filesystem::path> template_path;

    std::vector<std::string> external_commands;
    std::string test_command;
    std::chrono::milliseconds check_timeout{30'000};
    std::optional<std::filesystem::path> allowlist_c_like;
    std::optional<std::filesystem::path> allowlist_python_like;

    /// Throws InputError naming the first invalid field.
    void validate() const;
};

/// TOML-like text: `[section]` headers, `key = value` lines, '#' comments.
/// Values are quoted strings, numbers, true/false, or one-line arrays of
/// quoted strings. Relative paths resolve against `base_dir`. Unknown keys
/// and invalid values throw InputError with the line number.
[[nodiscard]] Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Reads and parses a config file. Throws IoError if unreadable.
[[nodiscard]] Config load_config(const std::filesystem::path& path);

}  // namespace ctxengine
