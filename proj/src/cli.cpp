#include "papereval/cli.hpp"

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "papereval/bench_prep.hpp"
#include "papereval/judge.hpp"
#include "papereval/pipeline.hpp"
#include "papereval/process.hpp"
#include "papereval/report.hpp"
#include "papereval/rubric.hpp"
#include "papereval/section_align.hpp"
#include "papereval/text_util.hpp"
#include "papereval/verifier.hpp"
#include "papereval/write_harness.hpp"

namespace papereval::cli {

namespace {

struct Global {
    std::string cassette;
    std::string cassette_mode = "replay";
    std::size_t parallelism = 4;
    std::string out;
    std::string judge_config;
    std::string prompts_dir;
    bool verbose = false;
};

/// Stands in for a backend whose credentials are absent during replay, so
/// provenance still names the configured backend.
class ReplayOnlyBackend : public judge::JudgeBackend {
public:
    explicit ReplayOnlyBackend(std::string id) : id_(std::move(id)) {}
    std::string id() const override { return id_; }
    judge::BackendReply complete(const judge::JudgeRequest&) override {
        return {judge::ReplyStatus::Unavailable, {}, "backend not configured for live calls"};
    }

private:
    std::string id_;
};

struct Judges {
    std::shared_ptr<judge::Cassette> cassette;
    std::unique_ptr<judge::JudgeGateway> judge;
    std::unique_ptr<verifier::VerifierGateway> verifier;
};

Judges make_judges(const Global& g) {
    judge::JudgeConfig cfg;
    Json raw = Json::object();
    if (!g.judge_config.empty()) {
        cfg = judge::load_judge_config(g.judge_config);
        raw = Json::parse(text::read_file(g.judge_config));
    }
    cfg.gateway.max_in_flight = std::max<std::size_t>(1, g.parallelism);
    const auto mode = g.cassette.empty() ? judge::CassetteMode::Passthrough : judge::parse_cassette_mode(g.cassette_mode);
    Judges j;
    j.cassette = g.cassette.empty() ? std::make_shared<judge::Cassette>(judge::CassetteMode::Passthrough)
                                    : judge::Cassette::open(g.cassette, mode);
    std::shared_ptr<judge::JudgeBackend> backend;
    try {
        backend = judge::make_backend(cfg);
    } catch (const ConfigError&) {
        if (mode != judge::CassetteMode::Replay) throw;
        backend = std::make_shared<ReplayOnlyBackend>(cfg.backend + "/" + cfg.http.model);
    }
    j.judge = std::make_unique<judge::JudgeGateway>(backend, j.cassette, cfg.gateway);
    j.verifier = std::make_unique<verifier::VerifierGateway>(
        verifier::make_verifier(raw.value("verifier", Json::object())), j.cassette);
    return j;
}

PromptLibrary prompts_for(const Global& g) {
    return g.prompts_dir.empty() ? PromptLibrary::embedded() : PromptLibrary::with_overrides(g.prompts_dir);
}

void print_diagnostics(const Diagnostics& diags, std::ostream& err) {
    for (const auto& d : diags) err << "warning: [" << d.code << "] " << d.message << "\n";
}

int cmd_prep(const Global& g, const std::string& source, const std::string& main_tex, const std::string& kind,
             const std::string& length, const std::string& abstracts, bool scholar, double rps, const std::string& code,
             bool regenerate, std::ostream& out, std::ostream& err) {
    if (g.out.empty()) {
        err << "error: prep needs --out <bundle dir>\n";
        return kUsageOrIo;
    }
    auto judges = make_judges(g);
    const auto prompts = prompts_for(g);
    (void)prompts;
    std::unique_ptr<prep::AbstractResolver> resolver;
    if (!abstracts.empty()) {
        auto j = Json::parse(text::read_file(abstracts), nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ConfigError("abstract map must be a JSON object: " + abstracts);
        resolver = std::make_unique<prep::MapResolver>(j.get<std::map<std::string, std::string>>());
    } else if (scholar) {
        prep::ScholarConfig sc;
        sc.requests_per_second = rps;
        resolver = std::make_unique<prep::ScholarResolver>(sc);
    }
    prep::PrepOptions o;
    o.main_tex = main_tex;
    if (!code.empty()) o.code_dir = fs::path(code);
    o.kind = prep::parse_paper_kind(kind);
    o.length = prep::parse_overview_length(length);
    o.resolver = resolver.get();
    o.judge = judges.judge.get();
    o.regenerate_overview = regenerate;
    o.parallelism = g.parallelism;
    const auto r = prep::prepare_bundle(source, g.out, o);
    print_diagnostics(r.diagnostics, err);
    if (!r.validation.ok()) {
        for (const auto& f : r.validation.failures) err << "validation failed: " << f << "\n";
        return kValidation;
    }
    out << "bundle ok: " << g.out << "\n";
    return kOk;
}

int cmd_evaluate(const Global& g, pipeline::EvaluateOptions o, const std::string& average, std::ostream& out,
                 std::ostream& err) {
    if (average == "pooled") {
        o.average_mode = report::AverageMode::Pooled;
    } else if (average == "sectionwise") {
        o.average_mode = report::AverageMode::Sectionwise;
    } else {
        err << "error: --average must be pooled or sectionwise\n";
        return kUsageOrIo;
    }
    auto judges = make_judges(g);
    const auto prompts = prompts_for(g);
    o.prompts = &prompts;
    o.parallelism = g.parallelism;
    const auto result = pipeline::evaluate(o, *judges.judge, *judges.verifier);
    const fs::path out_dir = g.out.empty() ? fs::path("papereval-out") : fs::path(g.out);
    pipeline::write_outputs(result, out_dir);
    print_diagnostics(result.report.diagnostics, err);
    const auto& r = result.report;
    out << "avg_rubric " << format_fixed(r.avg_rubric, 2) << "  hallucinations "
        << (r.hallucination ? std::to_string(r.hallucination->headline) : "-") << "  citation F1 "
        << (r.citation ? format_fixed(r.citation->f1, 2) : "-") << "\n";
    out << "wrote " << (out_dir / "report.json").string() << "\n";
    return kOk;
}

int cmd_report(const Global& g, const std::vector<std::string>& paths, const std::string& group_by, std::ostream& out,
               std::ostream& err) {
    std::vector<report::ReportSummary> summaries;
    for (const auto& p : paths) {
        if (!fs::is_regular_file(p)) {
            err << "error: report not found: " << p << "\n";
            return kUsageOrIo;
        }
        auto s = report::load_summary(p);
        if (group_by == "agent") s.labels.model.clear();
        else if (group_by == "model") s.labels.agent.clear();
        else if (group_by == "all") s.labels = {};
        else if (group_by != "agent-model") {
            err << "error: --group-by must be agent-model, agent, model or all\n";
            return kUsageOrIo;
        }
        summaries.push_back(std::move(s));
    }
    const auto board = report::leaderboard(summaries);
    const fs::path out_dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    fs::create_directories(out_dir);
    const auto md = report::render_markdown(board);
    text::write_file(out_dir / "leaderboard.md", md);
    text::write_file(out_dir / "leaderboard.json", report::leaderboard_json(board).dump(2) + "\n");
    out << md;
    return kOk;
}

int cmd_write(const Global& g, const std::string& bundle, const std::string& agent_cmd, write::WriteConfig cfg,
              const std::string& compiler, const std::string& lint, std::ostream& out, std::ostream& err) {
    if (g.out.empty()) {
        err << "error: write needs --out <run dir>\n";
        return kUsageOrIo;
    }
    const auto v = prep::validate(bundle);
    if (!v.ok()) {
        for (const auto& f : v.failures) err << "validation failed: " << f << "\n";
        return kValidation;
    }
    const auto prompts = prompts_for(g);
    write::ProcessAgent agent(split_command(agent_cmd));
    write::CommandToolchain toolchain(compiler, lint);
    cfg.transcript_path = fs::path(g.out) / "transcript.jsonl";
    const auto r = write::run_writeup(bundle, fs::path(g.out) / "workspace", agent, toolchain, cfg, prompts);
    print_diagnostics(r.diagnostics, err);
    out << "reflection iterations " << r.reflection_iterations << ", page iterations " << r.page_iterations
        << ", main pages " << r.last.main_pages << "\n";
    out << "final: " << r.final_tex.string() << "\n";
    return write_exit_code(r);
}

int cmd_rubric_gen(const Global& g, const std::string& bundle, std::ostream& out, std::ostream& err) {
    auto judges = make_judges(g);
    const auto prompts = prompts_for(g);
    const auto b = prep::PaperBundle::at(bundle);
    if (!fs::is_regular_file(b.gt_tex)) throw prep::BundleError("gt_main.tex missing in " + bundle);
    const auto gt = latex::load_document(b.gt_tex);
    if (gt.empty()) throw EmptyDocumentError("gt_main.tex has no sections");
    Diagnostics diags;
    align::AlignOptions ao;
    ao.parallelism = g.parallelism;
    ao.prompts = &prompts;
    const auto sections = align::classify_document(gt, *judges.judge, ao, diags);
    rubric::RubricOptions ro;
    ro.parallelism = g.parallelism;
    ro.prompts = &prompts;
    const auto paper_id = fs::absolute(bundle).lexically_normal().filename().string();
    const auto rub = rubric::generate_rubric(paper_id, sections, *judges.judge, diags, ro);
    const fs::path out_dir = g.out.empty() ? fs::path(bundle) : fs::path(g.out);
    fs::create_directories(out_dir);
    rubric::save_rubric(rub, out_dir / prep::layout::kRubric);
    print_diagnostics(diags, err);
    out << rub.elements.size() << " rubric elements written to " << (out_dir / prep::layout::kRubric).string() << "\n";
    return kOk;
}

}  // namespace

int write_exit_code(const write::WriteResult& result) {
    return result.success && !result.budget_exhausted ? kOk : kBudgetExhausted;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evaluate generated LaTeX papers against their originals"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--cassette", g.cassette, "Judge cassette file (JSON lines)");
    app.add_option("--cassette-mode", g.cassette_mode, "record, replay or passthrough")
        ->check(CLI::IsMember({"record", "replay", "passthrough"}));
    app.add_option("--parallelism", g.parallelism, "Concurrent judge calls")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--judge-config", g.judge_config, "Judge backend config (JSON)");
    app.add_option("--prompts", g.prompts_dir, "Directory overriding prompt templates");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");

    auto* prep_cmd = app.add_subcommand("prep", "Build an evaluation bundle from a LaTeX source directory");
    std::string source, main_tex, kind = "method", length = "default", abstracts, code;
    bool scholar = false, regenerate = false;
    double rps = 1.0;
    prep_cmd->add_option("source", source, "Source directory")->required();
    prep_cmd->add_option("--main", main_tex, "Main .tex file inside the source directory");
    prep_cmd->add_option("--kind", kind, "method, benchmark or both");
    prep_cmd->add_option("--length", length, "default or long overview");
    prep_cmd->add_option("--abstracts", abstracts, "JSON map of citation key or title to abstract");
    prep_cmd->add_flag("--scholar", scholar, "Fetch abstracts from Semantic Scholar");
    prep_cmd->add_option("--rps", rps, "Resolver requests per second");
    prep_cmd->add_option("--code", code, "Code directory to include");
    prep_cmd->add_flag("--regenerate-overview", regenerate, "Replace an existing research_overview.md");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a generated paper against its bundle");
    pipeline::EvaluateOptions eo;
    std::string bundle, pred, rubric_path, average = "pooled";
    eval_cmd->add_option("--bundle", bundle, "Bundle directory")->required();
    eval_cmd->add_option("--pred", pred, "Generated .tex file")->required();
    eval_cmd->add_option("--rubric", rubric_path, "rubric.json (default: <bundle>/rubric.json)");
    eval_cmd->add_flag("--generate-rubric", eo.generate_rubric, "Generate the rubric instead of reading it");
    eval_cmd->add_option("--average", average, "pooled or sectionwise");
    eval_cmd->add_option("--agent", eo.labels.agent, "Agent label for leaderboards");
    eval_cmd->add_option("--model", eo.labels.model, "Model label for leaderboards");
    eval_cmd->add_option("--paper-id", eo.paper_id, "Paper identifier");

    auto* report_cmd = app.add_subcommand("report", "Build leaderboards from report.json files");
    std::vector<std::string> report_paths;
    std::string group_by = "agent-model";
    report_cmd->add_option("reports", report_paths, "report.json files")->required();
    report_cmd->add_option("--group-by", group_by, "agent-model, agent, model or all");

    auto* write_cmd = app.add_subcommand("write", "Drive a writer agent over a bundle");
    write::WriteConfig wc;
    std::string write_bundle, agent_cmd, compiler = "tectonic --keep-intermediates {file}", lint = "chktex -q {file}";
    write_cmd->add_option("--bundle", write_bundle, "Bundle directory")->required();
    write_cmd->add_option("--agent-cmd", agent_cmd, "Agent command; receives instructions on stdin")->required();
    write_cmd->add_option("--num-page", wc.num_page, "Target main-text pages")->check(CLI::PositiveNumber);
    write_cmd->add_option("--column-type", wc.column_type, "Column layout named in the prompt");
    write_cmd->add_option("--reflection-cap", wc.reflection_cap, "Maximum reflection rounds")->check(CLI::NonNegativeNumber);
    write_cmd->add_option("--page-cap", wc.page_cap, "Maximum page adjustment rounds")->check(CLI::NonNegativeNumber);
    write_cmd->add_option("--compiler", compiler, "Compile command, {file} is the .tex name");
    write_cmd->add_option("--lint", lint, "Lint command; empty disables");

    auto* rubric_cmd = app.add_subcommand("rubric-gen", "Generate rubric.json for a bundle");
    std::string rubric_bundle;
    rubric_cmd->add_option("--bundle", rubric_bundle, "Bundle directory")->required();

    std::vector<std::string> argv_store = {"papereval"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageOrIo;
    }
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

    try {
        if (*prep_cmd) return cmd_prep(g, source, main_tex, kind, length, abstracts, scholar, rps, code, regenerate, out, err);
        if (*eval_cmd) {
            eo.bundle_root = bundle;
            eo.pred_tex = pred;
            if (!rubric_path.empty()) eo.rubric_path = fs::path(rubric_path);
            return cmd_evaluate(g, eo, average, out, err);
        }
        if (*report_cmd) return cmd_report(g, report_paths, group_by, out, err);
        if (*write_cmd) return cmd_write(g, write_bundle, agent_cmd, wc, compiler, lint, out, err);
        if (*rubric_cmd) return cmd_rubric_gen(g, rubric_bundle, out, err);
    } catch (const pipeline::MissingRubric& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const prep::BundleError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const EmptyDocumentError& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const rubric::SchemaMismatch& e) {
        err << "error: rubric.json: " << e.what() << "\n";
        return kValidation;
    } catch (const report::SchemaMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const report::IncompleteRun& e) {
        err << "error: incomplete run: " << e.what() << "\n";
        return kIncompleteRun;
    } catch (const write::AgentUnavailable& e) {
        err << "error: " << e.what() << "\n";
        return kToolUnavailable;
    } catch (const write::CompilerMissing& e) {
        err << "error: " << e.what() << "\n";
        return kToolUnavailable;
    } catch (const ConfigError& e) {
        err << "error: configuration: " << e.what() << "\n";
        return kJudgeConfig;
    } catch (const JudgeUnavailable& e) {
        err << "error: judge unavailable: " << e.what() << "\n";
        return kJudgeConfig;
    } catch (const JudgeMalformed& e) {
        err << "error: judge output unusable: " << e.what() << "\n";
        return kJudgeConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsageOrIo;
    }
    return kUsageOrIo;
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace papereval::cli
