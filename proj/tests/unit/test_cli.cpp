#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "papereval/cli.hpp"
#include "papereval/hash.hpp"
#include "papereval/text_util.hpp"
#include "papereval/write_harness.hpp"

using namespace papereval;
namespace pt = papereval::testing;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// Sample bundle with its rubric and an identical generated paper.
struct Workspace {
    pt::TempDir dir;
    fs::path bundle = dir / "bundle";
    fs::path pred = dir / "pred.tex";

    Workspace() {
        const auto paper = pt::sample_paper();
        pt::write_bundle(bundle, paper.tex, paper.bib, pt::sample_rubric(paper));
        text::write_file(pred, paper.tex);
    }

    Run evaluate(const std::string& out, std::vector<std::string> extra = {}) const {
        std::vector<std::string> args = {"--out", (dir / out).string()};
        args.insert(args.end(), extra.begin(), extra.end());
        for (const auto& a : {"evaluate", "--bundle", bundle.c_str(), "--pred", pred.c_str()}) args.push_back(a);
        return run_cli(args);
    }
};

std::set<std::string> entries(const fs::path& root) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) out.insert(fs::relative(e.path(), root).string());
    return out;
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, cli::kUsageOrIo);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsageOrIo);
    EXPECT_EQ(run_cli({"evaluate"}).code, cli::kUsageOrIo);
    EXPECT_EQ(run_cli({"--cassette-mode", "sometimes", "report", "x.json"}).code, cli::kUsageOrIo);
    EXPECT_EQ(run_cli({"--parallelism", "0", "report", "x.json"}).code, cli::kUsageOrIo);
    auto help = run_cli({"--help"});
    EXPECT_EQ(help.code, cli::kOk);
    EXPECT_NE(help.out.find("evaluate"), std::string::npos);
    EXPECT_EQ(run_cli({"prep", "/tmp"}).code, cli::kUsageOrIo);
}

TEST(Cli, EvaluateWritesOnlyIntoOutDir) {
    Workspace w;
    const auto bundle_hash = hash_tree(w.bundle);
    const auto before = entries(w.dir.path());
    auto r = w.evaluate("out");
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("avg_rubric 5.00"), std::string::npos) << r.out;
    EXPECT_EQ(hash_tree(w.bundle), bundle_hash);
    for (const auto& e : entries(w.dir.path())) {
        if (before.count(e)) continue;
        EXPECT_EQ(e.rfind("out", 0), 0u) << "unexpected write: " << e;
    }
    EXPECT_TRUE(fs::is_regular_file(w.dir / "out" / "report.json"));
    EXPECT_TRUE(fs::is_regular_file(w.dir / "out" / "claims.json"));
}

TEST(Cli, RecordThenReplayIsIdentical) {
    Workspace w;
    const auto cassette = (w.dir / "c.jsonl").string();
    auto rec = w.evaluate("rec", {"--cassette", cassette, "--cassette-mode", "record"});
    ASSERT_EQ(rec.code, cli::kOk) << rec.err;
    auto a = w.evaluate("a", {"--cassette", cassette});
    auto b = w.evaluate("b", {"--cassette", cassette, "--cassette-mode", "replay"});
    ASSERT_EQ(a.code, cli::kOk) << a.err;
    ASSERT_EQ(b.code, cli::kOk) << b.err;
    EXPECT_EQ(text::read_file(w.dir / "a" / "report.json"), text::read_file(w.dir / "b" / "report.json"));
    EXPECT_EQ(text::read_file(w.dir / "a" / "claims.json"), text::read_file(w.dir / "b" / "claims.json"));
}

TEST(Cli, ReplayWithoutCassetteFails) {
    Workspace w;
    auto r = w.evaluate("out", {"--cassette", (w.dir / "absent.jsonl").string(), "--cassette-mode", "replay"});
    EXPECT_EQ(r.code, cli::kJudgeConfig);
    EXPECT_FALSE(fs::exists(w.dir / "out" / "report.json"));
    // an empty cassette misses every request
    text::write_file(w.dir / "empty.jsonl", "");
    auto miss = w.evaluate("out2", {"--cassette", (w.dir / "empty.jsonl").string(), "--cassette-mode", "replay"});
    EXPECT_NE(miss.code, cli::kOk);
}

TEST(Cli, RubricProblemsAreValidationErrors) {
    Workspace w;
    fs::remove(w.bundle / "rubric.json");
    EXPECT_EQ(w.evaluate("o1").code, cli::kValidation);
    text::write_file(w.bundle / "rubric.json", R"({"schema":"rubric/0","elements":[]})");
    auto r = w.evaluate("o2");
    EXPECT_EQ(r.code, cli::kValidation);
    EXPECT_NE(r.err.find("rubric"), std::string::npos);
    // generating it on the fly works
    auto gen = run_cli({"--out", (w.dir / "o4").string(), "evaluate", "--bundle", w.bundle.string(), "--pred",
                    w.pred.string(), "--generate-rubric"});
    EXPECT_EQ(gen.code, cli::kOk) << gen.err;
}

TEST(Cli, JudgeConfigRejectsInlineSecrets) {
    Workspace w;
    text::write_file(w.dir / "judge.json", R"({"backend":"openai","model":"m","api_key":"sk-123"})");
    auto r = w.evaluate("out", {"--judge-config", (w.dir / "judge.json").string()});
    EXPECT_EQ(r.code, cli::kJudgeConfig);
    EXPECT_EQ(r.err.find("sk-123"), std::string::npos);
}

TEST(Cli, ReportCommand) {
    Workspace w;
    auto run = run_cli({"--out", (w.dir / "run").string(), "evaluate", "--bundle", w.bundle.string(), "--pred",
                        w.pred.string(), "--agent", "A", "--model", "M"});
    ASSERT_EQ(run.code, cli::kOk) << run.err;
    auto r = run_cli({"--out", (w.dir / "board").string(), "report", (w.dir / "run" / "report.json").string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("| A | M |"), std::string::npos);
    EXPECT_TRUE(fs::is_regular_file(w.dir / "board" / "leaderboard.json"));
    EXPECT_EQ(run_cli({"report", (w.dir / "nope.json").string()}).code, cli::kUsageOrIo);
    text::write_file(w.dir / "bad.json", R"({"schema":"report/9"})");
    EXPECT_EQ(run_cli({"--out", (w.dir / "b2").string(), "report", (w.dir / "bad.json").string()}).code, cli::kValidation);
    EXPECT_EQ(run_cli({"--out", (w.dir / "b3").string(), "report", "--group-by", "moon",
                   (w.dir / "run" / "report.json").string()})
                  .code,
              cli::kUsageOrIo);
}

TEST(Cli, RubricGenWritesIntoOutDir) {
    Workspace w;
    const auto bundle_hash = hash_tree(w.bundle);
    auto r = run_cli({"--out", (w.dir / "rub").string(), "rubric-gen", "--bundle", w.bundle.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NO_THROW(rubric::load_rubric(w.dir / "rub" / "rubric.json"));
    EXPECT_EQ(hash_tree(w.bundle), bundle_hash);
}

TEST(Cli, PrepAndWriteExitCodes) {
    pt::TempDir dir;
    const auto bundle = (dir / "bundle").string();
    auto prep = run_cli({"--out", bundle, "prep", (pt::fixture_dir() / "arxiv_source").string(), "--abstracts",
                     (pt::fixture_dir() / "abstracts.json").string()});
    ASSERT_EQ(prep.code, cli::kOk) << prep.err;
    EXPECT_EQ(run_cli({"--out", (dir / "b2").string(), "prep", (dir / "missing").string()}).code, cli::kValidation);

    const std::string compiler = std::string(FAKE_LATEX_PATH) + " compile {file}";
    auto write = [&](const std::string& out, const std::string& agent) {
        return run_cli({"--out", (dir / out).string(), "write", "--bundle", bundle, "--agent-cmd", agent, "--compiler",
                    compiler, "--lint", "", "--num-page", "2", "--reflection-cap", "2", "--page-cap", "2"});
    };
    auto ok = write("w_ok", std::string(FAKE_AGENT_PATH) + " clean 2");
    EXPECT_EQ(ok.code, cli::kOk) << ok.err;
    EXPECT_TRUE(fs::is_regular_file(dir / "w_ok" / "transcript.jsonl"));
    EXPECT_EQ(write("w_broken", std::string(FAKE_AGENT_PATH) + " broken").code, cli::kBudgetExhausted);
    EXPECT_EQ(write("w_long", std::string(FAKE_AGENT_PATH) + " clean 6").code, cli::kBudgetExhausted);
    EXPECT_EQ(write("w_missing", "/nonexistent/agent").code, cli::kToolUnavailable);

    fs::remove(dir / "bundle" / "template.tex");
    EXPECT_EQ(write("w_invalid", std::string(FAKE_AGENT_PATH) + " clean 2").code, cli::kValidation);
}

TEST(Cli, WriteExitCodeMapping) {
    write::WriteResult r;
    r.success = true;
    EXPECT_EQ(cli::write_exit_code(r), cli::kOk);
    r.budget_exhausted = true;
    EXPECT_EQ(cli::write_exit_code(r), cli::kBudgetExhausted);
    r.success = false;
    EXPECT_EQ(cli::write_exit_code(r), cli::kBudgetExhausted);
}
