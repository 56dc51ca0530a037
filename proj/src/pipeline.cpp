#include "papereval/pipeline.hpp"

#include <chrono>

#include "papereval/assets.hpp"
#include "papereval/bench_prep.hpp"
#include "papereval/bibtex.hpp"
#include "papereval/citations.hpp"
#include "papereval/hash.hpp"
#include "papereval/latex.hpp"
#include "papereval/parallel.hpp"
#include "papereval/section_align.hpp"
#include "papereval/text_util.hpp"

namespace papereval::pipeline {

using align::Category;

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        struct Record {
            std::vector<StageTiming>& out;
            std::string stage;
            std::chrono::steady_clock::time_point start;
            ~Record() {
                const auto d = std::chrono::steady_clock::now() - start;
                out.push_back({stage, std::chrono::duration<double, std::milli>(d).count()});
            }
        } record{out_, stage, start};
        return fn();
    }

private:
    std::vector<StageTiming>& out_;
};

template <typename T>
std::vector<T> only(const std::vector<T>& items, Category c) {
    std::vector<T> out;
    for (const auto& i : items) {
        if (i.attributed == c) out.push_back(i);
    }
    return out;
}

}  // namespace

const std::vector<std::string>& stage_order() {
    static const std::vector<std::string> order = {"parse", "section_map", "assets", "rubric",
                                                   "claims", "citations", "report"};
    return order;
}

EvaluateResult evaluate(const EvaluateOptions& options, judge::JudgeGateway& judge,
                        verifier::VerifierGateway& verifier) {
    const PromptLibrary& prompts = options.prompts != nullptr ? *options.prompts : PromptLibrary::embedded();
    const auto bundle = prep::PaperBundle::at(options.bundle_root);
    const auto rubric_path = options.rubric_path.value_or(options.bundle_root / prep::layout::kRubric);
    if (!options.generate_rubric && !fs::is_regular_file(rubric_path)) {
        throw MissingRubric("rubric.json not found at " + rubric_path.string() +
                            "; provide one or pass --generate-rubric");
    }
    if (!fs::is_regular_file(bundle.gt_tex)) throw prep::BundleError("gt_main.tex missing in " + options.bundle_root.string());
    if (!fs::is_regular_file(options.pred_tex)) throw Error("generated paper not found: " + options.pred_tex.string());

    EvaluateResult result;
    StageClock clock(result.timings);
    Diagnostics diags;
    const auto paper_id = options.paper_id.empty() ? fs::absolute(options.bundle_root).lexically_normal().filename().string()
                                                   : options.paper_id;

    struct Parsed {
        latex::LatexDocument gt;
        latex::LatexDocument pred;
        bib::BibDatabase bib;
    };
    auto parsed = clock.run("parse", [&] {
        Parsed p{latex::load_document(bundle.gt_tex), latex::load_document(options.pred_tex), {}};
        if (fs::is_regular_file(bundle.references_bib)) {
            p.bib = bib::load_bib(bundle.references_bib);
        } else {
            add_diagnostic(diags, "missing_bib", "references.bib missing; every generated citation counts as hallucinated");
        }
        for (const auto& d : p.gt.diagnostics) add_diagnostic(diags, "gt_" + d.code, d.message, d.offset);
        for (const auto& d : p.pred.diagnostics) add_diagnostic(diags, "pred_" + d.code, d.message, d.offset);
        return p;
    });
    const auto& gt = parsed.gt;
    const auto& pred = parsed.pred;

    align::AlignOptions align_opts;
    align_opts.parallelism = options.parallelism;
    align_opts.prompts = &prompts;
    const auto map = clock.run("section_map", [&] { return align::build_section_map(gt, pred, judge, align_opts); });
    diags.insert(diags.end(), map.diagnostics.begin(), map.diagnostics.end());

    assets::AssetOptions asset_opts;
    asset_opts.parallelism = options.parallelism;
    asset_opts.prompts = &prompts;
    std::vector<assets::FigureScore> figures;
    assets::TableResult tables;
    clock.run("assets", [&] {
        figures = assets::score_figures(gt, pred, map, judge, diags, asset_opts);
        tables = assets::score_tables(gt, pred, map, judge, diags, asset_opts);
        return 0;
    });

    std::vector<rubric::SectionScore> sections;
    clock.run("rubric", [&] {
        if (options.generate_rubric) {
            rubric::RubricOptions ro;
            ro.parallelism = options.parallelism;
            ro.prompts = &prompts;
            result.rubric = rubric::generate_rubric(paper_id, map.gt, judge, diags, ro);
            result.rubric_generated = true;
        } else {
            result.rubric = rubric::load_rubric(rubric_path);
        }
        struct Out {
            std::optional<rubric::SectionScore> score;
            Diagnostics diagnostics;
        };
        const auto& cats = align::kScoredCategories;
        auto outs = parallel_map<Out>(cats.size(), options.parallelism, [&](std::size_t i) {
            Out o;
            const auto c = cats[i];
            const auto elements = result.rubric.for_section(c);
            auto figs = only(figures, c);
            auto tabs = only(tables.matches, c);
            if (elements.empty() && figs.empty() && tabs.empty()) return o;
            std::optional<std::string> pred_text;
            if (const auto* t = map.pred.text(c)) pred_text = *t;
            auto text_scores = rubric::score_section(c, elements, pred_text, rubric::asset_context(c, figs, tabs), judge,
                                                     o.diagnostics, prompts);
            o.score = rubric::fold_section(c, std::move(text_scores), std::move(figs), std::move(tabs));
            return o;
        });
        for (auto& o : outs) {
            if (o.score) sections.push_back(std::move(*o.score));
            diags.insert(diags.end(), o.diagnostics.begin(), o.diagnostics.end());
        }
        if (sections.empty()) {
            add_diagnostic(diags, report::kRubricUnavailable, "no rubric elements or GT assets for any scored section");
        }
        return 0;
    });

    claims::HallucinationReport hallucination;
    clock.run("claims", [&] {
        std::vector<Category> cats;
        for (auto c : align::kScoredCategories) {
            if (map.pred.has(c)) cats.push_back(c);
        }
        struct Out {
            std::vector<claims::Claim> claims;
            Diagnostics diagnostics;
        };
        auto outs = parallel_map<Out>(cats.size(), options.parallelism, [&](std::size_t i) {
            Out o;
            o.claims = claims::extract_claims(cats[i], *map.pred.text(cats[i]), gt.raw_text, judge, o.diagnostics, prompts);
            return o;
        });
        for (auto& o : outs) {
            result.stage1_claims.insert(result.stage1_claims.end(), o.claims.begin(), o.claims.end());
            diags.insert(diags.end(), o.diagnostics.begin(), o.diagnostics.end());
        }
        auto verified = claims::verify_claims(result.stage1_claims, options.bundle_root, verifier, prompts);
        diags.insert(diags.end(), verified.diagnostics.begin(), verified.diagnostics.end());
        hallucination = claims::tally(verified.claims, verified.unverified);
        if (hallucination.escalations > 0) {
            add_diagnostic(diags, "severity_escalated",
                           std::to_string(hallucination.escalations) + " claims raised from minor to major in verification");
        }
        return 0;
    });

    auto citation = clock.run("citations", [&] { return citations::score_citations(gt, pred, parsed.bib); });
    diags.insert(diags.end(), citation.diagnostics.begin(), citation.diagnostics.end());

    clock.run("report", [&] {
        report::Provenance prov;
        prov.judge_backend = judge.backend_id();
        prov.verifier_backend = verifier.backend_id();
        Sha256 h;
        h.update_field(judge.responses_hash());
        h.update_field(verifier.responses_hash());
        prov.cassette_hash = h.hex_digest();
        prov.prompt_versions = prompts.versions();
        prov.stage_order = stage_order();
        result.report = report::assemble(paper_id, std::move(sections), hallucination, citation, std::move(prov),
                                         std::move(diags), options.average_mode);
        result.report.labels = options.labels;
        return 0;
    });
    return result;
}

std::string claims_json_text(const EvaluateResult& result) {
    return claims::claims_document(result.stage1_claims, *result.report.hallucination).dump(2) + "\n";
}

void write_outputs(const EvaluateResult& result, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    text::write_file(out_dir / "report.json", report::serialize(result.report));
    if (result.report.hallucination) text::write_file(out_dir / "claims.json", claims_json_text(result));
    Json timings = Json::array();
    for (const auto& t : result.timings) timings.push_back({{"stage", t.stage}, {"milliseconds", t.milliseconds}});
    text::write_file(out_dir / "timings.json", Json{{"stages", timings}}.dump(2) + "\n");
    if (result.rubric_generated) rubric::save_rubric(result.rubric, out_dir / prep::layout::kRubric);
}

}  // namespace papereval::pipeline
