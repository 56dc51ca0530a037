#include <gtest/gtest.h>

#include "fake_tex.hpp"
#include "fixtures.hpp"
#include "papereval/bench_prep.hpp"
#include "papereval/hash.hpp"
#include "papereval/text_util.hpp"
#include "papereval/write_harness.hpp"

using namespace papereval;
namespace pt = papereval::testing;

namespace {

const std::string kCompile = std::string(FAKE_LATEX_PATH) + " compile {file}";
const std::string kLint = std::string(FAKE_LATEX_PATH) + " lint {file}";

/// Minimal bundle: template plus the three prompt inputs.
void make_bundle(const fs::path& dir) {
    text::write_file(dir / "template.tex", pt::document_with_pages(1));
    text::write_file(dir / "research_overview.md", "# Overview\n\n## 1. Motivation\nOVERVIEW-TEXT\n");
    text::write_file(dir / "table_summary.txt", "table_main.tex: TABLE-SUMMARY\n");
    text::write_file(dir / "figure_summary.txt", "curve.png: FIGURE-SUMMARY\n");
}

write::WriteConfig config(int pages = 3) {
    write::WriteConfig c;
    c.num_page = pages;
    c.reflection_cap = 3;
    c.page_cap = 4;
    c.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    return c;
}

/// Agent that writes the page count for each turn from `pages` (last value
/// repeats); a negative entry writes a broken document.
write::ScriptedAgent paging_agent(std::vector<int> pages, std::vector<std::string>* seen = nullptr) {
    return write::ScriptedAgent([pages, seen](const std::string& instruction, const fs::path& ws, std::size_t turn) {
        if (seen) seen->push_back(instruction);
        const int p = pages[std::min(turn, pages.size() - 1)];
        text::write_file(ws / "template.tex", p < 0 ? pt::broken_document() : pt::document_with_pages(p));
    });
}

}  // namespace

TEST(Marker, InsertedBeforeBibliographyOnSameLine) {
    const std::string tex = "\\begin{document}\nBody.\n% \\bibliography{x}\n\\bibliography{references}\n\\end{document}\n";
    const auto out = write::with_main_end_marker(tex);
    EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), std::count(tex.begin(), tex.end(), '\n'));
    EXPECT_NE(out.find("\\label{papereval-main-end}\\bibliography{references}"), std::string::npos);
    EXPECT_NE(out.find("% \\bibliography{x}"), std::string::npos);
    const auto no_bib = write::with_main_end_marker("\\begin{document}\nA\n\\end{document}");
    EXPECT_NE(no_bib.find("\\label{papereval-main-end}\\end{document}"), std::string::npos);
    EXPECT_EQ(write::marker_page("\\newlabel{papereval-main-end}{{3}{7}}"), 7);
    EXPECT_FALSE(write::marker_page("\\newlabel{other}{{3}{7}}"));
}

TEST(Toolchain, CompilesLintsAndMeasures) {
    pt::TempDir ws;
    text::write_file(ws / "template.tex", pt::document_with_pages(3));
    write::CommandToolchain tc(kCompile, kLint);
    auto r = tc.compile(ws.path(), true);
    EXPECT_TRUE(r.success) << r.log;
    EXPECT_EQ(r.main_pages, 3);
    EXPECT_TRUE(r.lint_findings.empty());
    // measurement artifacts are cleaned up
    EXPECT_FALSE(fs::exists(ws / "template_pages.tex"));
    EXPECT_FALSE(fs::exists(ws / "template_pages.aux"));

    text::write_file(ws / "template.tex", pt::replace_all(pt::document_with_pages(1), "\\end{document}", "TODO\n\\end{document}"));
    r = tc.compile(ws.path(), false);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.main_pages, 0);
    EXPECT_NE(r.lint_findings.find("TODO"), std::string::npos);

    text::write_file(ws / "template.tex", pt::broken_document());
    EXPECT_FALSE(tc.compile(ws.path(), false).success);

    write::CommandToolchain missing("/nonexistent/tex-engine", "");
    EXPECT_THROW(missing.compile(ws.path(), false), write::CompilerMissing);
    EXPECT_THROW(write::CommandToolchain("  ", ""), ConfigError);
}

TEST(Harness, CleanRunNeedsNoLoops) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    const auto before = hash_tree(dir / "bundle");
    std::vector<std::string> seen;
    auto agent = paging_agent({3}, &seen);
    write::CommandToolchain tc(kCompile, kLint);
    auto r = write::run_writeup(dir / "bundle", dir / "ws", agent, tc, config(3));
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.reflection_iterations, 0);
    EXPECT_EQ(r.page_iterations, 0);
    EXPECT_EQ(agent.turns(), 1u);
    EXPECT_EQ(r.last.main_pages, 3);
    EXPECT_EQ(hash_tree(dir / "bundle"), before);
    ASSERT_EQ(seen.size(), 1u);
    for (const auto* s : {"OVERVIEW-TEXT", "TABLE-SUMMARY", "FIGURE-SUMMARY"}) EXPECT_NE(seen[0].find(s), std::string::npos) << s;
    EXPECT_EQ(r.final_tex, dir / "ws" / "template.tex");
}

TEST(Harness, ReflectionLoopIsCapped) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    auto agent = paging_agent({-1});
    write::CommandToolchain tc(kCompile, kLint);
    const auto cfg = config();
    auto r = write::run_writeup(dir / "bundle", dir / "ws", agent, tc, cfg);
    EXPECT_FALSE(r.success);
    EXPECT_TRUE(r.budget_exhausted);
    EXPECT_EQ(r.reflection_iterations, cfg.reflection_cap);
    EXPECT_EQ(agent.turns(), static_cast<std::size_t>(1 + cfg.reflection_cap));
    EXPECT_EQ(r.page_iterations, 0);
    EXPECT_EQ(r.diagnostics.at(0).code, "reflection_budget_exhausted");
}

TEST(Harness, ReflectionRecoversThenPagesConverge) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    std::vector<std::string> seen;
    // broken, then 6 pages, then 4, then 3
    auto agent = paging_agent({-1, 6, 4, 3}, &seen);
    write::CommandToolchain tc(kCompile, kLint);
    auto r = write::run_writeup(dir / "bundle", dir / "ws", agent, tc, config(3));
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.reflection_iterations, 1);
    EXPECT_EQ(r.page_iterations, 2);
    EXPECT_EQ(r.last.main_pages, 3);
    ASSERT_EQ(seen.size(), 4u);
    EXPECT_EQ(seen[2], write::render_page_limit(6, 3));
    EXPECT_NE(seen[2].find("too long by 3 pages"), std::string::npos);
}

TEST(Harness, PageLoopKeepsClosestStateWhenCapped) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    auto agent = paging_agent({9, 5, 7, 8, 10});
    write::CommandToolchain tc(kCompile, kLint);
    auto r = write::run_writeup(dir / "bundle", dir / "ws", agent, tc, config(3));
    EXPECT_FALSE(r.success);
    EXPECT_TRUE(r.budget_exhausted);
    EXPECT_EQ(r.page_iterations, 4);
    EXPECT_EQ(r.last.main_pages, 5);
    EXPECT_EQ(text::read_file(r.final_tex), pt::document_with_pages(5));
    EXPECT_EQ(r.diagnostics.back().code, "page_budget_exhausted");
}

TEST(Harness, EmbeddedBibliographyTriggersReflection) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    auto agent = write::ScriptedAgent([](const std::string&, const fs::path& ws, std::size_t turn) {
        auto doc = pt::document_with_pages(2);
        if (turn == 0) doc = pt::replace_all(doc, "\\begin{document}", "\\begin{filecontents}{references.bib}\n\\end{filecontents}\n\\begin{document}");
        text::write_file(ws / "template.tex", doc);
    });
    write::CommandToolchain tc(kCompile, "");
    auto r = write::run_writeup(dir / "bundle", dir / "ws", agent, tc, config(2));
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.reflection_iterations, 1);
    EXPECT_NE(r.transcript[1].content.find("filecontents"), std::string::npos);
}

TEST(Harness, TranscriptIsDeterministic) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    write::CommandToolchain tc(kCompile, kLint);
    std::vector<std::string> files;
    for (int i = 0; i < 2; ++i) {
        auto agent = paging_agent({-1, 5, 3});
        auto cfg = config(3);
        cfg.transcript_path = dir / ("t" + std::to_string(i)) / "transcript.jsonl";
        auto r = write::run_writeup(dir / "bundle", dir / ("ws" + std::to_string(i)), agent, tc, cfg);
        files.push_back(text::read_file(cfg.transcript_path));
        std::vector<std::string> roles;
        for (const auto& e : r.transcript) roles.push_back(e.role);
        EXPECT_EQ(roles, (std::vector<std::string>{"instruction", "compile", "instruction", "compile", "compile",
                                                   "instruction", "compile"}));
    }
    EXPECT_EQ(files[0], files[1]);
    for (const auto& line : text::split_lines(files[0])) {
        if (line.empty()) continue;
        EXPECT_EQ(Json::parse(line)["timestamp"], "2026-01-01T00:00:00Z");
    }
}

TEST(Harness, RefusesBadWorkspaces) {
    pt::TempDir dir;
    auto agent = paging_agent({1});
    write::CommandToolchain tc(kCompile, "");
    fs::create_directories(dir / "empty_bundle");
    EXPECT_THROW(write::run_writeup(dir / "empty_bundle", dir / "ws", agent, tc, config()), prep::BundleError);
    make_bundle(dir / "bundle");
    text::write_file(dir / "busy" / "x.txt", "x");
    EXPECT_THROW(write::run_writeup(dir / "bundle", dir / "busy", agent, tc, config()), Error);
    EXPECT_EQ(agent.turns(), 0u);
}

TEST(Harness, ReflectOnceCallsAgentOnlyOnFindings) {
    pt::TempDir ws;
    text::write_file(ws / "template.tex", pt::document_with_pages(1));
    auto agent = paging_agent({1});
    write::CommandToolchain tc(kCompile, kLint);
    bool called = true;
    write::reflect_once(ws.path(), agent, tc, called);
    EXPECT_FALSE(called);
    text::write_file(ws / "template.tex", pt::broken_document());
    write::reflect_once(ws.path(), agent, tc, called);
    EXPECT_TRUE(called);
    EXPECT_EQ(agent.turns(), 1u);
}

TEST(ProcessAgent, RunsCommandWithInstructionOnStdin) {
    pt::TempDir dir;
    make_bundle(dir / "bundle");
    write::ProcessAgent agent({FAKE_AGENT_PATH, "clean", "2"});
    write::CommandToolchain tc(kCompile, kLint);
    auto r = write::run_writeup(dir / "bundle", dir / "ws", agent, tc, config(2));
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.last.main_pages, 2);

    write::ProcessAgent missing({"/nonexistent/agent"});
    EXPECT_THROW(missing.send("x", dir.path()), write::AgentUnavailable);
    // empty instruction makes the double exit non-zero
    write::ProcessAgent fake({FAKE_AGENT_PATH});
    EXPECT_THROW(fake.send("", dir / "ws"), write::AgentUnavailable);
    EXPECT_THROW(write::ProcessAgent({}), ConfigError);
}

TEST(Harness, CommentedFilecontentsIsIgnored) {
    pt::TempDir ws;
    text::write_file(ws / "template.tex",
                     pt::replace_all(pt::document_with_pages(1), "\\begin{document}",
                                     "% \\begin{filecontents}{references.bib}\n\\begin{document}"));
    auto agent = paging_agent({1});
    write::CommandToolchain tc(kCompile, "");
    bool called = true;
    auto r = write::reflect_once(ws.path(), agent, tc, called);
    EXPECT_FALSE(called);
    EXPECT_TRUE(r.lint_findings.empty());
}
