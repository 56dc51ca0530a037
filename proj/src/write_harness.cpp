#include "papereval/write_harness.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>

#include "papereval/bench_prep.hpp"
#include "papereval/latex.hpp"
#include "papereval/process.hpp"
#include "papereval/text_util.hpp"

namespace papereval::write {

namespace {

constexpr const char* kMeasureStem = "template_pages";

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> command_for(const std::string& command, const std::string& file) {
    auto argv = split_command(command);
    bool substituted = false;
    for (auto& a : argv) {
        const auto p = a.find("{file}");
        if (p != std::string::npos) {
            a.replace(p, 6, file);
            substituted = true;
        }
    }
    if (!substituted) argv.push_back(file);
    return argv;
}

// filecontents is itself a verbatim environment, so only comments are
// stripped here.
bool uses_filecontents(const std::string& tex) {
    for (const auto& line : text::split_lines(tex)) {
        std::size_t cut = line.size();
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '\\') {
                ++i;
            } else if (line[i] == '%') {
                cut = i;
                break;
            }
        }
        if (line.substr(0, cut).find("\\begin{filecontents") != std::string::npos) return true;
    }
    return false;
}

class Transcript {
public:
    Transcript(const WriteConfig& config, std::vector<TranscriptEntry>& sink) : config_(config), sink_(sink) {
        if (!config.transcript_path.empty()) {
            if (config.transcript_path.has_parent_path()) fs::create_directories(config.transcript_path.parent_path());
            out_.open(config.transcript_path, std::ios::binary | std::ios::trunc);
            if (!out_) throw Error("cannot write transcript: " + config.transcript_path.string());
        }
    }

    void add(std::string role, std::string content) {
        TranscriptEntry e{std::move(role), std::move(content), config_.clock ? config_.clock() : utc_now()};
        if (out_.is_open()) {
            out_ << transcript_line(e).dump() << '\n';
            out_.flush();
        }
        sink_.push_back(std::move(e));
    }

private:
    const WriteConfig& config_;
    std::vector<TranscriptEntry>& sink_;
    std::ofstream out_;
};

std::string describe(const CompileResult& r) {
    std::string s = std::string("status: ") + (r.success ? "ok" : "failed") + "\n";
    if (r.main_pages > 0) s += "main_pages: " + std::to_string(r.main_pages) + "\n";
    s += "--- compile ---\n" + r.log;
    if (!r.log.empty() && r.log.back() != '\n') s += "\n";
    s += "--- lint ---\n" + r.lint_findings;
    return s;
}

/// Compile plus the embedded-bibliography check, which counts as a lint
/// finding.
CompileResult checked_compile(const fs::path& workspace, Toolchain& toolchain, bool measure,
                              const PromptLibrary& prompts) {
    auto r = toolchain.compile(workspace, measure);
    if (uses_filecontents(text::read_file(workspace / kWorkingTex))) {
        if (!r.lint_findings.empty() && r.lint_findings.back() != '\n') r.lint_findings += "\n";
        r.lint_findings += filecontents_finding(prompts) + "\n";
    }
    return r;
}

bool needs_reflection(const CompileResult& r) { return !r.success || !text::trim(r.lint_findings).empty(); }

}  // namespace

ProcessAgent::ProcessAgent(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw ConfigError("agent command is empty");
}

std::string ProcessAgent::id() const { return "process/" + fs::path(argv_.front()).filename().string(); }

void ProcessAgent::send(const std::string& instruction, const fs::path& workspace) {
    const auto r = run_process(argv_, workspace, instruction);
    if (r.not_found) throw AgentUnavailable("agent command not found: " + argv_.front());
    if (r.exit_code != 0) {
        throw AgentUnavailable("agent exited with code " + std::to_string(r.exit_code) + ": " +
                               text::utf8_prefix(r.output, 400));
    }
}

CommandToolchain::CommandToolchain(std::string compile_command, std::string lint_command)
    : compile_command_(std::move(compile_command)), lint_command_(std::move(lint_command)) {
    if (text::trim(compile_command_).empty()) throw ConfigError("compiler command is empty");
}

CompileResult CommandToolchain::compile(const fs::path& workspace, bool measure_pages) {
    CompileResult out;
    std::string file = kWorkingTex;
    if (measure_pages) {
        file = std::string(kMeasureStem) + ".tex";
        text::write_file(workspace / file, with_main_end_marker(text::read_file(workspace / kWorkingTex)));
    }
    const auto argv = command_for(compile_command_, file);
    const auto r = run_process(argv, workspace);
    if (r.not_found) throw CompilerMissing("compiler not found: " + argv.front());
    out.success = r.exit_code == 0;
    out.log = r.output;
    if (measure_pages) {
        const auto aux = workspace / (std::string(kMeasureStem) + ".aux");
        if (fs::is_regular_file(aux)) out.main_pages = marker_page(text::read_file(aux)).value_or(0);
        for (const auto& e : fs::directory_iterator(workspace)) {
            if (e.path().stem() == kMeasureStem) fs::remove(e.path());
        }
    }
    if (!text::trim(lint_command_).empty()) {
        const auto lint = command_for(lint_command_, kWorkingTex);
        const auto l = run_process(lint, workspace);
        if (l.not_found) throw CompilerMissing("lint tool not found: " + lint.front());
        out.lint_findings = text::trim(l.output).empty() ? std::string() : l.output;
    }
    return out;
}

std::string with_main_end_marker(const std::string& tex) {
    const auto masked = latex::mask_comments_and_verbatim(tex);
    std::size_t at = std::string::npos;
    for (const auto* anchor : {"\\bibliography{", "\\printbibliography", "\\begin{thebibliography}", "\\end{document}"}) {
        at = masked.find(anchor);
        if (at != std::string::npos) break;
    }
    const std::string label = std::string("\\label{") + kMainEndLabel + "}";
    if (at == std::string::npos) return tex + label;
    return tex.substr(0, at) + label + tex.substr(at);
}

std::optional<int> marker_page(const std::string& aux) {
    static const std::regex re(std::string("\\\\newlabel\\{") + kMainEndLabel + R"(\}\{\{[^}]*\}\{(\d+)\})");
    std::smatch m;
    if (std::regex_search(aux, m, re)) return std::stoi(m[1].str());
    return std::nullopt;
}

std::string render_writeup(const fs::path& bundle_root, const WriteConfig& config, const PromptLibrary& prompts) {
    const auto b = prep::PaperBundle::at(bundle_root);
    auto read = [](const fs::path& p) { return fs::is_regular_file(p) ? text::read_file(p) : std::string(); };
    return prompts.render("writeup", {{"research_overview_text", text::trim(read(b.research_overview))},
                                      {"table_descriptions", text::trim(read(b.table_summary))},
                                      {"plot_descriptions", text::trim(read(b.figure_summary))},
                                      {"num_page", std::to_string(config.num_page)},
                                      {"column_type", config.column_type}});
}

std::string render_reflection(const CompileResult& result, const PromptLibrary& prompts) {
    return prompts.render("reflection", {{"check_output", text::trim(result.lint_findings)},
                                         {"compile_output", text::trim(result.log)}});
}

std::string render_page_limit(int main_pages, int target, const PromptLibrary& prompts) {
    const int diff = main_pages - target;
    const auto n = std::to_string(std::abs(diff));
    const auto unit = std::abs(diff) == 1 ? " page" : " pages";
    const std::string status = diff > 0 ? "too long by " + n + unit : "too short by " + n + unit;
    const std::string action = diff > 0 ? "condense the text" : "expand the content";
    return prompts.render("page_limit", {{"main_pages", std::to_string(main_pages)},
                                         {"page_limit", std::to_string(target)},
                                         {"status", status},
                                         {"action", action}});
}

std::string filecontents_finding(const PromptLibrary& prompts) {
    // Reuse the writeup prompt's own wording for the prohibition.
    const auto& w = prompts.get("writeup");
    const auto p = w.find("Please note:");
    const auto note = p == std::string::npos ? std::string("Do not use \\begin{filecontents}{references.bib}.")
                                             : text::collapse_whitespace(w.substr(p));
    return "template.tex embeds its bibliography with filecontents. " + note;
}

CompileResult reflect_once(const fs::path& workspace, WriterAgent& agent, Toolchain& toolchain, bool& agent_called,
                           const PromptLibrary& prompts) {
    auto r = checked_compile(workspace, toolchain, false, prompts);
    agent_called = needs_reflection(r);
    if (agent_called) agent.send(render_reflection(r, prompts), workspace);
    return r;
}

Json transcript_line(const TranscriptEntry& e) {
    return {{"role", e.role}, {"content", e.content}, {"timestamp", e.timestamp}};
}

WriteResult run_writeup(const fs::path& bundle_root, const fs::path& workspace, WriterAgent& agent,
                        Toolchain& toolchain, const WriteConfig& config, const PromptLibrary& prompts) {
    if (!fs::is_regular_file(bundle_root / kWorkingTex)) {
        throw prep::BundleError("template.tex missing in bundle " + bundle_root.string());
    }
    if (fs::exists(workspace) && !fs::is_empty(workspace)) {
        throw Error("workspace is not empty: " + workspace.string());
    }
    fs::create_directories(workspace);
    fs::copy(bundle_root, workspace, fs::copy_options::recursive);

    WriteResult result;
    result.final_tex = workspace / kWorkingTex;
    Transcript log(config, result.transcript);

    auto instruct = [&](const std::string& instruction) {
        log.add("instruction", instruction);
        agent.send(instruction, workspace);
    };
    auto compile = [&](bool measure) {
        auto r = checked_compile(workspace, toolchain, measure, prompts);
        log.add("compile", describe(r));
        return r;
    };

    instruct(render_writeup(bundle_root, config, prompts));

    // Reflection: compile, feed back, repeat until clean or capped.
    auto r = compile(false);
    while (needs_reflection(r) && result.reflection_iterations < config.reflection_cap) {
        instruct(render_reflection(r, prompts));
        ++result.reflection_iterations;
        r = compile(false);
    }
    result.last = r;
    if (!r.success) {
        result.budget_exhausted = true;
        add_diagnostic(result.diagnostics, "reflection_budget_exhausted",
                       "compile still failing after " + std::to_string(result.reflection_iterations) + " reflections");
        return result;
    }

    // Page adjustment against the target main-text length.
    r = compile(true);
    std::string best_tex = text::read_file(result.final_tex);
    CompileResult best = r;
    auto distance = [&](const CompileResult& c) { return c.success && c.main_pages > 0 ? std::abs(c.main_pages - config.num_page) : 1 << 20; };
    while (true) {
        if (!r.success || r.main_pages == 0) {
            add_diagnostic(result.diagnostics, "page_count_unavailable", "main-text page count could not be measured");
            break;
        }
        if (r.main_pages == config.num_page) break;
        if (result.page_iterations >= config.page_cap) {
            result.budget_exhausted = true;
            add_diagnostic(result.diagnostics, "page_budget_exhausted",
                           "main text is " + std::to_string(best.main_pages) + " pages after " +
                               std::to_string(result.page_iterations) + " adjustments; target " +
                               std::to_string(config.num_page));
            break;
        }
        instruct(render_page_limit(r.main_pages, config.num_page, prompts));
        ++result.page_iterations;
        r = compile(true);
        if (distance(r) < distance(best)) {
            best = r;
            best_tex = text::read_file(result.final_tex);
        }
    }
    if (result.budget_exhausted && distance(best) < distance(r)) {
        // Hand back the closest state reached.
        text::write_file(result.final_tex, best_tex);
        r = best;
    }
    result.last = r;
    result.success = r.success && !result.budget_exhausted;
    return result;
}

}  // namespace papereval::write
