#include "papereval/assets.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "papereval/parallel.hpp"
#include "papereval/text_util.hpp"

namespace papereval::assets {

namespace {

const Json kScoreSchema = {{"type", "object"},
                           {"required", {"score"}},
                           {"properties",
                            {{"score", {{"type", "integer"}, {"minimum", 1}, {"maximum", 5}}},
                             {"reasoning", {{"type", "string"}}}}}};

std::vector<std::size_t> label_refs(const latex::LatexDocument& doc, const std::optional<std::string>& label) {
    std::vector<std::size_t> out;
    if (!label) return out;
    for (const auto& r : doc.refs) {
        if (r.label == *label) out.push_back(r.offset);
    }
    return out;
}

std::set<std::string> keys_of(const latex::FigureBlock& f) {
    std::set<std::string> keys;
    for (const auto& p : f.asset_paths) keys.insert(latex::asset_key(p));
    return keys;
}

Rational caption_similarity(const std::optional<std::string>& a, const std::optional<std::string>& b) {
    if (!a || !b) return Rational(0);
    return text::token_jaccard(text::caption_tokens(*a), text::caption_tokens(*b));
}

std::string context_around(const std::string& raw, std::size_t offset, std::size_t radius = 400) {
    const auto b = offset > radius ? offset - radius : 0;
    return text::collapse_whitespace(raw.substr(b, std::min(raw.size() - b, radius * 2)));
}

std::string figure_name(const latex::FigureBlock& f, std::size_t index) {
    if (!f.asset_paths.empty()) return f.asset_paths.front();
    if (f.label) return *f.label;
    return "figure " + std::to_string(index + 1);
}

std::string table_name(const latex::TableBlock& t, std::size_t index) {
    if (t.label) return *t.label;
    if (t.caption_first_line) return *t.caption_first_line;
    return "table " + std::to_string(index + 1);
}

const PromptLibrary& prompts_of(const AssetOptions& o) {
    return o.prompts != nullptr ? *o.prompts : PromptLibrary::embedded();
}

}  // namespace

std::string to_string(FigureBasis b) {
    switch (b) {
        case FigureBasis::SameSection: return "SameSection";
        case FigureBasis::JudgeContext: return "JudgeContext";
        case FigureBasis::Unreferenced: return "Unreferenced";
    }
    return "";
}

std::string to_string(MatchMethod m) {
    switch (m) {
        case MatchMethod::Label: return "Label";
        case MatchMethod::Caption: return "Caption";
        case MatchMethod::Judge: return "Judge";
        case MatchMethod::None: return "None";
    }
    return "";
}

std::vector<std::size_t> figure_locations(const latex::LatexDocument& doc, std::size_t figure_index) {
    const auto& f = doc.figures.at(figure_index);
    std::vector<std::size_t> out{f.byte_range.begin};
    auto refs = label_refs(doc, f.label);
    out.insert(out.end(), refs.begin(), refs.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> table_locations(const latex::LatexDocument& doc, std::size_t table_index) {
    const auto& t = doc.tables.at(table_index);
    std::vector<std::size_t> out{t.byte_range.begin};
    auto refs = label_refs(doc, t.label);
    out.insert(out.end(), refs.begin(), refs.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<Category> attribute(const latex::LatexDocument& doc, const align::DocumentSections& sections,
                                  std::vector<std::size_t> locations) {
    std::sort(locations.begin(), locations.end());
    for (auto off : locations) {
        auto c = sections.category_at(doc, off);
        if (c && align::is_scored(*c)) return c;
    }
    return std::nullopt;
}

std::vector<std::size_t> matching_pred_figures(const latex::LatexDocument& gt, std::size_t gt_index,
                                               const latex::LatexDocument& pred) {
    const auto& g = gt.figures.at(gt_index);
    const auto gkeys = keys_of(g);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pred.figures.size(); ++i) {
        const auto pkeys = keys_of(pred.figures[i]);
        if (std::any_of(pkeys.begin(), pkeys.end(), [&](const auto& k) { return gkeys.count(k) != 0; })) out.push_back(i);
    }
    if (!out.empty()) return out;
    // Renamed paths: fall back to the most similar caption above threshold.
    std::optional<std::size_t> best;
    Rational best_sim(0);
    for (std::size_t i = 0; i < pred.figures.size(); ++i) {
        const auto sim = caption_similarity(g.caption, pred.figures[i].caption);
        if (sim >= kCaptionThreshold && (!best || sim > best_sim)) {
            best = i;
            best_sim = sim;
        }
    }
    if (best) out.push_back(*best);
    return out;
}

std::vector<FigureScore> score_figures(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                                       const align::SectionMap& map, judge::JudgeGateway& judge,
                                       Diagnostics& diagnostics, const AssetOptions& options) {
    const auto& prompts = prompts_of(options);
    struct Out {
        FigureScore score;
        Diagnostics diagnostics;
    };
    const auto results = parallel_map<Out>(gt.figures.size(), options.parallelism, [&](std::size_t i) {
        Out out;
        auto& fs = out.score;
        const auto& g = gt.figures[i];
        fs.gt_index = i;
        fs.name = figure_name(g, i);
        const auto gt_locs = figure_locations(gt, i);
        fs.attributed = attribute(gt, map.gt, gt_locs);

        std::vector<std::size_t> pred_locs;
        for (auto p : matching_pred_figures(gt, i, pred)) {
            auto locs = figure_locations(pred, p);
            pred_locs.insert(pred_locs.end(), locs.begin(), locs.end());
        }
        std::sort(pred_locs.begin(), pred_locs.end());
        if (pred_locs.empty()) {
            fs.score = 1;
            fs.basis = FigureBasis::Unreferenced;
            fs.reasoning = "figure is not included or referenced in the generated paper";
            return out;
        }

        // Locations outside any section (front matter) compare equal to each
        // other, so a teaser figure kept in place still counts as same-section.
        std::vector<std::optional<Category>> gt_cats;
        for (auto off : gt_locs) gt_cats.push_back(map.gt.category_at(gt, off));
        std::vector<std::optional<Category>> pred_cats;
        for (auto off : pred_locs) pred_cats.push_back(map.pred.category_at(pred, off));
        for (const auto& c : gt_cats) {
            if (std::find(pred_cats.begin(), pred_cats.end(), c) != pred_cats.end()) {
                fs.score = 5;
                fs.basis = FigureBasis::SameSection;
                fs.pred_section = c;
                fs.reasoning = "referenced in " + (c ? align::display_name(*c) : std::string("the front matter")) +
                               " by both papers";
                return out;
            }
        }

        fs.basis = FigureBasis::JudgeContext;
        for (const auto& c : pred_cats) {
            if (c) {
                fs.pred_section = c;
                break;
            }
        }
        const auto gt_section = fs.attributed ? align::display_name(*fs.attributed) : std::string("unclassified");
        const auto pred_section = fs.pred_section ? align::display_name(*fs.pred_section) : std::string("unclassified");
        judge::JudgeRequest req;
        req.task_tag = "figure_context";
        req.system_prompt = prompts.get("figure_context_system");
        req.user_prompt = prompts.render("figure_context_user",
                                         {{"figure", fs.name},
                                          {"caption", g.caption.value_or("")},
                                          {"gt_section", gt_section},
                                          {"gt_context", context_around(gt.raw_text, gt_locs.front())},
                                          {"pred_section", pred_section},
                                          {"pred_context", context_around(pred.raw_text, pred_locs.front())}});
        req.response_schema = kScoreSchema.dump();
        req.payload = {{"figure", fs.name}, {"gt_section", gt_section}, {"pred_section", pred_section}};
        try {
            const auto resp = judge.submit(req);
            fs.score = resp.parsed["score"].get<int>();
            fs.reasoning = resp.parsed.value("reasoning", "");
        } catch (const Error& e) {
            fs.score = 1;
            fs.reasoning = "judge unavailable; scored conservatively";
            add_diagnostic(out.diagnostics, "figure_judge_failed", fs.name + ": " + e.what());
        }
        return out;
    });
    std::vector<FigureScore> scores;
    for (const auto& r : results) {
        scores.push_back(r.score);
        diagnostics.insert(diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
    }
    return scores;
}

TableResult match_tables(const std::vector<latex::TableBlock>& gt_tables,
                         const std::vector<latex::TableBlock>& pred_tables, judge::JudgeGateway& judge,
                         Diagnostics& diagnostics, const AssetOptions& options) {
    TableResult result;
    result.matches.resize(gt_tables.size());
    std::vector<bool> pred_used(pred_tables.size(), false);
    for (std::size_t i = 0; i < gt_tables.size(); ++i) {
        result.matches[i].gt_index = i;
        result.matches[i].name = table_name(gt_tables[i], i);
    }
    auto assign = [&](std::size_t g, std::size_t p, MatchMethod m) {
        result.matches[g].pred_index = p;
        result.matches[g].method = m;
        pred_used[p] = true;
    };

    // Pass 1: exact label equality.
    for (std::size_t g = 0; g < gt_tables.size(); ++g) {
        if (!gt_tables[g].label) continue;
        for (std::size_t p = 0; p < pred_tables.size(); ++p) {
            if (!pred_used[p] && pred_tables[p].label == gt_tables[g].label) {
                assign(g, p, MatchMethod::Label);
                break;
            }
        }
    }

    // Pass 2: caption similarity, most similar pairs first.
    std::vector<std::tuple<Rational, std::size_t, std::size_t>> candidates;
    for (std::size_t g = 0; g < gt_tables.size(); ++g) {
        if (result.matches[g].pred_index) continue;
        for (std::size_t p = 0; p < pred_tables.size(); ++p) {
            if (pred_used[p]) continue;
            const auto sim = caption_similarity(gt_tables[g].caption, pred_tables[p].caption);
            if (sim >= kCaptionThreshold) candidates.emplace_back(sim, g, p);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });
    for (const auto& [sim, g, p] : candidates) {
        if (result.matches[g].pred_index || pred_used[p]) continue;
        assign(g, p, MatchMethod::Caption);
    }

    // Pass 3: one batched judge call over the leftovers.
    std::vector<std::size_t> gt_left;
    std::vector<std::size_t> pred_left;
    for (std::size_t g = 0; g < gt_tables.size(); ++g) {
        if (!result.matches[g].pred_index) gt_left.push_back(g);
    }
    for (std::size_t p = 0; p < pred_tables.size(); ++p) {
        if (!pred_used[p]) pred_left.push_back(p);
    }
    if (!gt_left.empty() && !pred_left.empty()) {
        const auto& prompts = prompts_of(options);
        auto describe = [](const std::vector<latex::TableBlock>& tables, const std::vector<std::size_t>& idx,
                           Json& payload) {
            std::string out;
            for (auto i : idx) {
                const auto& t = tables[i];
                out += "[" + std::to_string(i) + "] caption: " + t.caption.value_or("(none)") + "\n" +
                       text::utf8_prefix(t.body_tex, 1200) + "\n\n";
                payload.push_back({{"index", i}, {"caption", t.caption.value_or("")}, {"body", t.body_tex}});
            }
            return out;
        };
        Json gt_payload = Json::array();
        Json pred_payload = Json::array();
        judge::JudgeRequest req;
        req.task_tag = "table_match";
        req.system_prompt = prompts.get("table_match_system");
        req.user_prompt = prompts.render("table_match_user", {{"gt_tables", describe(gt_tables, gt_left, gt_payload)},
                                                              {"pred_tables", describe(pred_tables, pred_left, pred_payload)}});
        const Json schema = {
            {"type", "object"},
            {"required", {"matches"}},
            {"properties",
             {{"matches",
               {{"type", "array"},
                {"items",
                 {{"type", "object"},
                  {"required", {"gt", "pred"}},
                  {"properties", {{"gt", {{"type", "integer"}}}, {"pred", {{"type", "integer"}}}}}}}}}}}};
        req.response_schema = schema.dump();
        req.payload = {{"gt", gt_payload}, {"pred", pred_payload}};
        const std::set<std::size_t> gt_ok(gt_left.begin(), gt_left.end());
        const std::set<std::size_t> pred_ok(pred_left.begin(), pred_left.end());
        auto check = [&](const Json& parsed) -> std::optional<std::string> {
            std::set<long long> seen_g;
            std::set<long long> seen_p;
            for (const auto& m : parsed["matches"]) {
                const auto g = m["gt"].get<long long>();
                const auto p = m["pred"].get<long long>();
                if (g < 0 || p < 0 || gt_ok.count(static_cast<std::size_t>(g)) == 0 ||
                    pred_ok.count(static_cast<std::size_t>(p)) == 0) {
                    return "match refers to an index outside the listed tables";
                }
                if (!seen_g.insert(g).second || !seen_p.insert(p).second) return "a table appears in two matches";
            }
            return std::nullopt;
        };
        try {
            const auto resp = judge.submit(req, check);
            for (const auto& m : resp.parsed["matches"]) {
                assign(m["gt"].get<std::size_t>(), m["pred"].get<std::size_t>(), MatchMethod::Judge);
            }
        } catch (const Error& e) {
            add_diagnostic(diagnostics, "table_match_judge_failed", std::string("judge matching pass skipped: ") + e.what());
        }
    }

    for (std::size_t p = 0; p < pred_tables.size(); ++p) {
        if (!pred_used[p]) result.extras.push_back(p);
    }
    for (auto& m : result.matches) {
        if (!m.pred_index) {
            m.score = 1;
            m.reasoning = "table is missing from the generated paper";
        }
    }
    return result;
}

PairScore score_table_pair(const latex::TableBlock& gt, const latex::TableBlock& pred, judge::JudgeGateway& judge,
                           const PromptLibrary& prompts) {
    judge::JudgeRequest req;
    req.task_tag = "table_score";
    req.system_prompt = prompts.get("table_score_system");
    req.user_prompt = prompts.render("table_score_user", {{"gt_table", gt.body_tex}, {"pred_table", pred.body_tex}});
    req.response_schema = kScoreSchema.dump();
    req.payload = {{"gt_table", gt.body_tex}, {"pred_table", pred.body_tex}};
    const auto resp = judge.submit(req);
    return PairScore{resp.parsed["score"].get<int>(), resp.parsed.value("reasoning", "")};
}

TableResult score_tables(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                         const align::SectionMap& map, judge::JudgeGateway& judge, Diagnostics& diagnostics,
                         const AssetOptions& options) {
    auto result = match_tables(gt.tables, pred.tables, judge, diagnostics, options);
    const auto& prompts = prompts_of(options);
    struct Out {
        PairScore score;
        std::optional<std::string> error;
    };
    const auto scored = parallel_map<Out>(result.matches.size(), options.parallelism, [&](std::size_t i) {
        Out out;
        const auto& m = result.matches[i];
        if (!m.pred_index) return out;
        try {
            out.score = score_table_pair(gt.tables[m.gt_index], pred.tables[*m.pred_index], judge, prompts);
        } catch (const Error& e) {
            out.score = PairScore{1, "judge failed; scored conservatively"};
            out.error = e.what();
        }
        return out;
    });
    for (std::size_t i = 0; i < result.matches.size(); ++i) {
        auto& m = result.matches[i];
        m.attributed = attribute(gt, map.gt, table_locations(gt, m.gt_index));
        if (!m.pred_index) continue;
        m.score = scored[i].score.score;
        m.reasoning = scored[i].score.reasoning;
        if (scored[i].error) add_diagnostic(diagnostics, "table_judge_failed", m.name + ": " + *scored[i].error);
    }
    return result;
}

}  // namespace papereval::assets
