#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ctxengine/corpus.hpp"
#include "ctxengine/text.hpp"

namespace ctxe_test {

inline std::filesystem::path asset(const std::string& rel) { return std::filesystem::path(CTXE_TEST_ASSETS) / rel; }

inline ctxengine::SourceFile source(std::string path, std::string content) {
    ctxengine::SourceFile f;
    f.language_tag = ctxengine::language_for_path(path);
    f.path = std::move(path);
    f.content = std::move(content);
    return f;
}

inline ctxengine::CorpusIndex index_of(std::vector<std::pair<std::string, std::string>> files,
                                       const ctxengine::IngestConfig& config = {}) {
    std::vector<ctxengine::SourceFile> sources;
    for (auto& [p, c] : files) sources.push_back(source(p, c));
    return ctxengine::build_index(std::move(sources), config);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        auto tmpl = (std::filesystem::temp_directory_path() / "ctxe-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) std::abort();
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

struct RunResult {
    int exit_code = -1;
    std::string out;
};

/// Runs a shell command, capturing stdout. stderr is discarded unless merged.
inline RunResult run_command(const std::string& command, bool merge_stderr = false) {
    RunResult r;
    FILE* pipe = ::popen((command + (merge_stderr ? " 2>&1" : " 2>/dev/null")).c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace ctxe_test
