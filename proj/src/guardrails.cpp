#include "ctxengine/guardrails.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <map>
#include <thread>

#include <json.hpp>

#include "ctxengine/error.hpp"
#include "ctxengine/fileio.hpp"
#include "ctxengine/lexer.hpp"
#include "ctxengine/symbols.hpp"

namespace ctxengine {

extern const std::string_view kPythonLikeAllowlistText;
extern const std::string_view kCLikeAllowlistText;

namespace {

CheckResult not_applicable(std::string name, std::string note) {
    CheckResult r;
    r.check_name = std::move(name);
    r.applicable = false;
    r.note = std::move(note);
    return r;
}

char closer_for(char open) {
    switch (open) {
        case '(': return ')';
        case '[': return ']';
        default: return '}';
    }
}

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

std::string expand_file_placeholder(std::string_view tmpl, const std::string& quoted) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = tmpl.find("{file}", pos);
        if (hit == std::string_view::npos) break;
        out.append(tmpl.substr(pos, hit - pos));
        out += quoted;
        pos = hit + 6;
    }
    out.append(tmpl.substr(pos));
    return out;
}

/// Removes the directory tree on scope exit.
class TempWorkspace {
public:
    TempWorkspace() {
        const char* base = std::getenv("TMPDIR");
        std::string pattern = std::string(base != nullptr && *base != '\0' ? base : "/tmp") + "/ctxe-check-XXXXXX";
        if (mkdtemp(pattern.data()) == nullptr) {
            throw IoError("cannot create temporary workspace: " + std::string(std::strerror(errno)));
        }
        path_ = pattern;
    }
    ~TempWorkspace() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempWorkspace(const TempWorkspace&) = delete;
    TempWorkspace& operator=(const TempWorkspace&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string tail(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return std::string(s);
    return "..." + std::string(s.substr(s.size() - max_bytes));
}

}  // namespace

std::string_view to_string(RecommendationKind kind) {
    switch (kind) {
        case RecommendationKind::completion: return "completion";
        case RecommendationKind::edit: return "edit";
        case RecommendationKind::unit_test: return "unit_test";
        case RecommendationKind::chat: return "chat";
    }
    return "chat";
}

std::optional<RecommendationKind> parse_recommendation_kind(std::string_view name) {
    for (auto k : {RecommendationKind::completion, RecommendationKind::edit, RecommendationKind::unit_test,
                   RecommendationKind::chat}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::string GuardrailReport::to_json() const {
    nlohmann::ordered_json j;
    j["recommendation_id"] = recommendation_id;
    j["verdict"] = verdict ? "pass" : "fail";
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json c;
        c["check"] = r.check_name;
        c["pass"] = r.pass;
        c["applicable"] = r.applicable;
        if (!r.note.empty()) c["note"] = r.note;
        c["findings"] = nlohmann::ordered_json::array();
        for (const auto& f : r.findings) {
            nlohmann::ordered_json fj;
            fj["message"] = f.message;
            fj["line"] = f.line;
            c["findings"].push_back(std::move(fj));
        }
        j["checks"].push_back(std::move(c));
    }
    return j.dump(2) + "\n";
}

GuardrailReport make_report(std::string recommendation_id, std::vector<CheckResult> results) {
    GuardrailReport report;
    report.recommendation_id = std::move(recommendation_id);
    report.results = std::move(results);
    report.verdict = std::all_of(report.results.begin(), report.results.end(),
                                 [](const CheckResult& r) { return r.pass; });
    return report;
}

Allowlist Allowlist::builtin() {
    Allowlist a;
    a.add_text(kPythonLikeAllowlistText, LanguageFamily::python_like);
    a.add_text(kCLikeAllowlistText, LanguageFamily::c_like);
    return a;
}

void Allowlist::load_file(const std::filesystem::path& path, LanguageFamily family) {
    add_text(read_file(path), family);
}

void Allowlist::add_text(std::string_view text, LanguageFamily family) {
    for (auto line : split_lines(text)) {
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        while (!line.empty() && is_space_byte(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
        while (!line.empty() && is_space_byte(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
        if (!line.empty()) add(std::string(line), family);
    }
}

void Allowlist::add(std::string name, LanguageFamily family) {
    if (family == LanguageFamily::c_like) {
        c_like_.insert(std::move(name));
    } else if (family == LanguageFamily::python_like) {
        python_like_.insert(std::move(name));
    }
}

bool Allowlist::contains(std::string_view name, LanguageFamily family) const {
    if (family == LanguageFamily::c_like) return c_like_.find(name) != c_like_.end();
    if (family == LanguageFamily::python_like) return python_like_.find(name) != python_like_.end();
    return false;
}

std::size_t Allowlist::size(LanguageFamily family) const {
    if (family == LanguageFamily::c_like) return c_like_.size();
    if (family == LanguageFamily::python_like) return python_like_.size();
    return 0;
}

CheckResult check_syntax(std::string_view text, LanguageFamily family) {
    if (family == LanguageFamily::plain_text) {
        return not_applicable("syntax", "no syntax rules for plain_text");
    }
    CheckResult r;
    r.check_name = "syntax";
    const auto lexed = lex_code(text, family);
    for (const auto& issue : lexed.issues) r.findings.push_back({issue.message, issue.line});

    struct Open {
        char ch;
        std::uint32_t line;
    };
    std::vector<Open> stack;
    for (const auto& t : lexed.tokens) {
        if (t.kind != LexKind::punct || t.text.size() != 1) continue;
        const char c = t.text[0];
        if (c == '(' || c == '[' || c == '{') {
            stack.push_back({c, t.line});
        } else if (c == ')' || c == ']' || c == '}') {
            if (stack.empty()) {
                r.findings.push_back({"unmatched '" + std::string(1, c) + "'", t.line});
            } else if (closer_for(stack.back().ch) != c) {
                r.findings.push_back({"'" + std::string(1, c) + "' closes '" + std::string(1, stack.back().ch) +
                                          "' opened on line " + std::to_string(stack.back().line),
                                      t.line});
                stack.pop_back();
            } else {
                stack.pop_back();
            }
        }
    }
    for (const auto& o : stack) r.findings.push_back({"unclosed '" + std::string(1, o.ch) + "'", o.line});
    std::stable_sort(r.findings.begin(), r.findings.end(),
                     [](const Finding& a, const Finding& b) { return a.line < b.line; });
    r.pass = r.findings.empty();
    return r;
}

CheckResult check_symbols(std::string_view text, LanguageFamily family, const CorpusIndex& index,
                          const Allowlist& allowlist) {
    if (family == LanguageFamily::plain_text) {
        return not_applicable("symbols", "no symbol rules for plain_text");
    }
    CheckResult r;
    r.check_name = "symbols";
    const auto facts = analyze_code(text, family);
    const std::set<std::string, std::less<>> locals(facts.local_names.begin(), facts.local_names.end());
    const auto min_len = SymbolOptions{}.min_identifier_length;
    std::map<std::string, std::uint32_t, std::less<>> unknown;

    auto check = [&](const std::string& name, std::uint32_t line) {
        if (name.size() < min_len) return;
        if (locals.count(name) != 0 || allowlist.contains(name, family)) return;
        if (index.find_symbol(name) != nullptr) return;
        unknown.emplace(name, line);
    };
    for (const auto& call : facts.calls) check(call.callee, call.line);
    for (const auto& [name, line] : facts.attribute_accesses) check(name, line);

    std::vector<std::pair<std::string, std::uint32_t>> ordered(unknown.begin(), unknown.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [name, line] : ordered) {
        r.findings.push_back({"unknown symbol '" + name + "' (not in repository, not defined locally, not allowlisted)",
                              line});
    }
    r.pass = r.findings.empty();
    return r;
}

CheckResult check_test(std::string_view text, LanguageFamily family, std::string_view target_symbol,
                       const CorpusIndex& index) {
    CheckResult r;
    r.check_name = "test";
    const auto facts = analyze_code(text, family);
    std::vector<const CallSite*> calls;
    for (const auto& c : facts.calls) {
        if (c.callee == target_symbol) calls.push_back(&c);
    }
    if (calls.empty()) {
        r.findings.push_back({"tested function not called: '" + std::string(target_symbol) + "'", 0});
    }

    const auto* entry = index.find_symbol(target_symbol);
    std::vector<Arity> arities;
    if (entry != nullptr) {
        for (const auto& sig : entry->signatures) {
            if (sig.arity) arities.push_back(*sig.arity);
        }
    }
    if (entry == nullptr || entry->defs.empty()) {
        r.note = "target not defined in the repository; only the call was checked";
    } else if (arities.empty()) {
        r.note = "target has no callable definition in the repository; arity not checked";
    } else {
        for (const auto* c : calls) {
            if (c->has_spread) continue;
            const bool ok = std::any_of(arities.begin(), arities.end(),
                                        [&](const Arity& a) { return a.accepts(c->arg_count); });
            if (ok) continue;
            const auto& a = arities.front();
            std::string expected = std::to_string(a.min);
            if (!a.max) {
                expected += " or more";
            } else if (*a.max != a.min) {
                expected += "-" + std::to_string(*a.max);
            }
            r.findings.push_back({"'" + std::string(target_symbol) + "' called with " + std::to_string(c->arg_count) +
                                      " argument(s), definition takes " + expected,
                                  c->line});
        }
    }
    r.pass = r.findings.empty();
    return r;
}

CheckResult run_external_check(std::string_view command_template, std::string_view text,
                               const ExternalCheckOptions& options) {
    if (command_template.empty()) throw std::invalid_argument("external check command is empty");
    const TempWorkspace ws;
    const auto file = ws.path() / options.file_name;
    write_file_atomic(file, text);
    const auto log_path = ws.path() / ".ctxe-output";
    const auto command = expand_file_placeholder(command_template, shell_quote(file.string()));

    const pid_t pid = fork();
    if (pid < 0) throw ExternalCommandError("fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        setpgid(0, 0);
        const int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
            ::close(fd);
        }
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            dup2(devnull, STDIN_FILENO);
            ::close(devnull);
        }
        if (chdir(ws.path().c_str()) != 0) _exit(127);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);

    CheckResult r;
    r.check_name = options.check_name;
    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    int status = 0;
    bool timed_out = false;
    while (true) {
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0 && errno != EINTR) throw ExternalCommandError("waitpid failed: " + std::string(std::strerror(errno)));
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
            }
            timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    std::string output;
    try {
        output = read_file(log_path);
    } catch (const IoError&) {
    }
    if (timed_out) {
        r.findings.push_back({"command timed out after " + std::to_string(options.timeout.count()) + " ms", 0});
    } else if (WIFEXITED(status)) {
        const int code = WEXITSTATUS(status);
        if (code == 127 || code == 126) {
            throw ExternalCommandError("external command could not be run (exit " + std::to_string(code) +
                                       "): " + tail(output, 500));
        }
        if (code != 0) {
            std::string msg = "command exited with status " + std::to_string(code);
            if (!output.empty()) msg += ": " + tail(output, 2000);
            r.findings.push_back({std::move(msg), 0});
        }
    } else if (WIFSIGNALED(status)) {
        r.findings.push_back({"command killed by signal " + std::to_string(WTERMSIG(status)), 0});
    }
    r.pass = r.findings.empty();
    return r;
}

std::string_view default_extension(LanguageFamily family) {
    switch (family) {
        case LanguageFamily::python_like: return ".py";
        case LanguageFamily::c_like: return ".c";
        case LanguageFamily::plain_text: return ".txt";
    }
    return ".txt";
}

GuardrailReport run_guardrails(const Recommendation& recommendation, const CorpusIndex& index,
                               const Allowlist& allowlist, const GuardrailConfig& config,
                               std::span<const ContextItem> context) {
    std::vector<CheckResult> results;
    const auto family = recommendation.language_tag;
    results.push_back(check_syntax(recommendation.text, family));
    results.push_back(check_symbols(recommendation.text, family, index, allowlist));
    if (recommendation.kind == RecommendationKind::unit_test) {
        if (recommendation.target_symbol) {
            results.push_back(check_test(recommendation.text, family, *recommendation.target_symbol, index));
        } else {
            results.push_back(not_applicable("test", "unit_test recommendation without a target symbol"));
        }
    }
    ExternalCheckOptions opts;
    opts.timeout = config.timeout;
    opts.file_name = "snippet" + std::string(default_extension(family));
    for (std::size_t i = 0; i < config.external_commands.size(); ++i) {
        opts.check_name = "external:" + std::to_string(i);
        results.push_back(run_external_check(config.external_commands[i], recommendation.text, opts));
    }
    if (recommendation.kind == RecommendationKind::unit_test && !config.test_command.empty()) {
        opts.check_name = "run_test";
        results.push_back(run_external_check(config.test_command, recommendation.text, opts));
    }
    if (config.judge != nullptr) results.push_back(config.judge->judge(recommendation, context));
    return make_report(recommendation.id, std::move(results));
}

}  // namespace ctxengine
