#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "papereval/common.hpp"
#include "papereval/json_schema.hpp"
#include "papereval/prompts.hpp"

namespace papereval::write {

class AgentUnavailable : public Error {
public:
    using Error::Error;
};

class CompilerMissing : public Error {
public:
    using Error::Error;
};

/// Label injected before the bibliography to read the main-text page count
/// from the .aux file.
inline constexpr const char* kMainEndLabel = "papereval-main-end";
inline constexpr const char* kWorkingTex = "template.tex";

/// Edits template.tex in the workspace in response to an instruction.
class WriterAgent {
public:
    virtual ~WriterAgent() = default;
    virtual std::string id() const = 0;
    /// Throws AgentUnavailable when the agent cannot be run.
    virtual void send(const std::string& instruction, const fs::path& workspace) = 0;
};

/// Spawns the agent command in the workspace with the instruction on
/// standard input.
class ProcessAgent : public WriterAgent {
public:
    explicit ProcessAgent(std::vector<std::string> argv);
    std::string id() const override;
    void send(const std::string& instruction, const fs::path& workspace) override;

private:
    std::vector<std::string> argv_;
};

class ScriptedAgent : public WriterAgent {
public:
    /// Called with the instruction, the workspace and the 0-based turn.
    using Handler = std::function<void(const std::string&, const fs::path&, std::size_t)>;
    explicit ScriptedAgent(Handler handler) : handler_(std::move(handler)) {}
    std::string id() const override { return "scripted-agent"; }
    void send(const std::string& instruction, const fs::path& workspace) override {
        handler_(instruction, workspace, turn_++);
    }
    std::size_t turns() const { return turn_; }

private:
    Handler handler_;
    std::size_t turn_ = 0;
};

struct CompileResult {
    bool success = false;
    std::string log;
    /// Pages before the bibliography; 0 when not measured.
    int main_pages = 0;
    std::string lint_findings;
};

class Toolchain {
public:
    virtual ~Toolchain() = default;
    /// Compiles template.tex in `workspace`. With `measure_pages` a copy
    /// carrying the end-of-main-text label is compiled instead and the page
    /// count is read back. Throws CompilerMissing when a tool is absent.
    virtual CompileResult compile(const fs::path& workspace, bool measure_pages) = 0;
};

/// Compiler and linter given as command lines; `{file}` is replaced by the
/// .tex name (appended when absent). An empty lint command disables linting.
class CommandToolchain : public Toolchain {
public:
    CommandToolchain(std::string compile_command, std::string lint_command);
    CompileResult compile(const fs::path& workspace, bool measure_pages) override;

private:
    std::string compile_command_;
    std::string lint_command_;
};

/// template.tex with the label inserted just before the bibliography (or
/// \end{document}), on the same line so log line numbers are unchanged.
std::string with_main_end_marker(const std::string& tex);

/// Page of kMainEndLabel in .aux text, if recorded.
std::optional<int> marker_page(const std::string& aux);

struct WriteConfig {
    int num_page = 8;
    std::string column_type = "two-column";
    int reflection_cap = 5;
    int page_cap = 4;
    /// Written as JSON lines while the run progresses; empty to skip.
    fs::path transcript_path;
    /// Timestamp source for transcript lines; fixed in tests.
    std::function<std::string()> clock;
};

struct TranscriptEntry {
    std::string role;  ///< "instruction" or "compile"
    std::string content;
    std::string timestamp;
};

struct WriteResult {
    fs::path final_tex;
    bool success = false;
    bool budget_exhausted = false;
    int reflection_iterations = 0;
    int page_iterations = 0;
    CompileResult last;
    std::vector<TranscriptEntry> transcript;
    Diagnostics diagnostics;
};

std::string render_writeup(const fs::path& bundle_root, const WriteConfig& config,
                           const PromptLibrary& prompts = PromptLibrary::embedded());
std::string render_reflection(const CompileResult& result, const PromptLibrary& prompts = PromptLibrary::embedded());
std::string render_page_limit(int main_pages, int target, const PromptLibrary& prompts = PromptLibrary::embedded());

/// Extra finding reported when the paper embeds its bibliography.
std::string filecontents_finding(const PromptLibrary& prompts = PromptLibrary::embedded());

/// Compile and lint once; the agent is called only when something is
/// reported.
CompileResult reflect_once(const fs::path& workspace, WriterAgent& agent, Toolchain& toolchain, bool& agent_called,
                           const PromptLibrary& prompts = PromptLibrary::embedded());

/// Copies the bundle into `workspace` (which must not exist or be empty)
/// and drives the agent there: writeup instruction, reflection loop, page
/// loop. The bundle itself is never touched.
WriteResult run_writeup(const fs::path& bundle_root, const fs::path& workspace, WriterAgent& agent,
                        Toolchain& toolchain, const WriteConfig& config,
                        const PromptLibrary& prompts = PromptLibrary::embedded());

Json transcript_line(const TranscriptEntry& e);

}  // namespace papereval::write
