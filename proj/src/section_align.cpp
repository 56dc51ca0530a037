#include "papereval/section_align.hpp"

#include "papereval/parallel.hpp"
#include "papereval/text_util.hpp"

namespace papereval::align {

std::string id_name(Category c) {
    switch (c) {
        case Category::Abstract: return "Abstract";
        case Category::Introduction: return "Introduction";
        case Category::RelatedWork: return "RelatedWork";
        case Category::Method: return "Method";
        case Category::BenchmarkConstruction: return "BenchmarkConstruction";
        case Category::Experiment: return "Experiment";
        case Category::Conclusion: return "Conclusion";
    }
    return "";
}

std::string display_name(Category c) {
    switch (c) {
        case Category::RelatedWork: return "Related Work";
        case Category::BenchmarkConstruction: return "Benchmark Construction";
        default: return id_name(c);
    }
}

std::string short_name(Category c) {
    switch (c) {
        case Category::Abstract: return "Abs.";
        case Category::Introduction: return "Intro.";
        case Category::RelatedWork: return "Rel.";
        case Category::Method: return "Meth.";
        case Category::BenchmarkConstruction: return "Bench.";
        case Category::Experiment: return "Exp.";
        case Category::Conclusion: return "Concl.";
    }
    return "";
}

std::optional<Category> parse_category(std::string_view s) {
    const auto want = text::to_lower(text::trim(s));
    for (auto c : kAllCategories) {
        if (want == text::to_lower(id_name(c)) || want == text::to_lower(display_name(c))) return c;
    }
    return std::nullopt;
}

RuleTable RuleTable::parse(const std::string& tsv) {
    RuleTable table;
    std::size_t lineno = 0;
    for (const auto& raw : text::split_lines(tsv)) {
        ++lineno;
        const auto line = text::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto tab = raw.find('\t');
        if (tab == std::string::npos) throw ConfigError("section rules line " + std::to_string(lineno) + ": missing tab");
        const auto keyword = text::normalize_heading(raw.substr(0, tab));
        const auto cat = parse_category(raw.substr(tab + 1));
        if (keyword.empty() || !cat) {
            throw ConfigError("section rules line " + std::to_string(lineno) + ": bad keyword or category");
        }
        table.rules_.push_back(Rule{keyword, *cat});
    }
    return table;
}

RuleTable RuleTable::load(const fs::path& path) {
    if (!fs::exists(path)) return embedded();
    return parse(text::read_file(path));
}

const RuleTable& RuleTable::embedded() {
    static const RuleTable table = parse(embedded_section_rules());
    return table;
}

std::optional<Category> RuleTable::classify(std::string_view heading) const {
    const auto h = text::normalize_heading(heading);
    for (const auto& r : rules_) {
        if (h.find(r.keyword) != std::string::npos) return r.category;
    }
    return std::nullopt;
}

std::optional<Category> classify_by_rules(std::string_view heading, const RuleTable& rules) {
    return rules.classify(heading);
}

std::optional<Category> classify_with_judge(const latex::RawSection& section, judge::JudgeGateway& judge,
                                            const PromptLibrary& prompts, Diagnostics& diagnostics) {
    Json names = Json::array();
    for (auto c : kAllCategories) names.push_back(display_name(c));
    const Json schema = {{"type", "object"},
                         {"required", {"category"}},
                         {"properties", {{"category", {{"type", "string"}, {"enum", names}}}}}};
    const auto excerpt = text::utf8_prefix(text::trim(section.body), kJudgeBodyChars);

    judge::JudgeRequest req;
    req.task_tag = "classify_section";
    req.system_prompt = prompts.get("classify_section_system");
    req.user_prompt = prompts.render("classify_section_user", {{"heading", section.heading}, {"body_excerpt", excerpt}});
    req.response_schema = schema.dump();
    req.payload = {{"heading", section.heading}, {"body", excerpt}};
    try {
        const auto resp = judge.submit(req);
        return parse_category(resp.parsed["category"].get<std::string>());
    } catch (const JudgeUnavailable& e) {
        add_diagnostic(diagnostics, "judge_unavailable", "section '" + section.heading + "' left unclassified: " + e.what());
    } catch (const JudgeMalformed& e) {
        add_diagnostic(diagnostics, "judge_malformed", "section '" + section.heading + "' left unclassified: " + e.what());
    }
    return std::nullopt;
}

const std::string* DocumentSections::text(Category c) const {
    auto it = categories.find(c);
    return it == categories.end() ? nullptr : &it->second.text;
}

std::optional<Category> DocumentSections::category_at(const latex::LatexDocument& doc, std::size_t offset) const {
    const auto idx = doc.section_at(offset);
    if (!idx || *idx >= section_category.size()) return std::nullopt;
    return section_category[*idx];
}

DocumentSections classify_document(const latex::LatexDocument& doc, judge::JudgeGateway& judge,
                                   const AlignOptions& options, Diagnostics& diagnostics) {
    const RuleTable& rules = options.rules != nullptr ? *options.rules : RuleTable::embedded();
    const PromptLibrary& prompts = options.prompts != nullptr ? *options.prompts : PromptLibrary::embedded();

    DocumentSections out;
    const auto& sections = doc.sections;
    out.section_category.assign(sections.size(), std::nullopt);

    // Depth-1 sections outside the appendix are the classification units.
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& s = sections[i];
        if (s.depth != 1 || s.in_appendix) continue;
        if (s.is_abstract_env) {
            out.section_category[i] = Category::Abstract;
        } else if (auto c = rules.classify(s.heading)) {
            out.section_category[i] = c;
        } else {
            pending.push_back(i);
        }
    }

    struct JudgeResult {
        std::optional<Category> category;
        Diagnostics diagnostics;
    };
    const auto results = parallel_map<JudgeResult>(pending.size(), options.parallelism, [&](std::size_t k) {
        JudgeResult r;
        r.category = classify_with_judge(sections[pending[k]], judge, prompts, r.diagnostics);
        return r;
    });
    out.judge_calls = pending.size();
    for (std::size_t k = 0; k < pending.size(); ++k) {
        out.section_category[pending[k]] = results[k].category;
        diagnostics.insert(diagnostics.end(), results[k].diagnostics.begin(), results[k].diagnostics.end());
        if (!results[k].category) out.unclassified.push_back(sections[pending[k]].heading);
    }

    // Subsections inherit from the nearest preceding depth-1 section.
    std::optional<Category> parent;
    bool parent_seen = false;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (sections[i].depth == 1) {
            parent = out.section_category[i];
            parent_seen = !sections[i].in_appendix;
        } else if (parent_seen && !sections[i].in_appendix) {
            out.section_category[i] = parent;
        }
    }

    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& cat = out.section_category[i];
        if (!cat) continue;
        auto& slot = out.categories[*cat];
        const auto& range = sections[i].byte_range;
        slot.text += doc.raw_text.substr(range.begin, range.end - range.begin);
        slot.headings.push_back(sections[i].heading);
        slot.ranges.push_back(range);
    }
    return out;
}

SectionMap build_section_map(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                             judge::JudgeGateway& judge, const AlignOptions& options) {
    if (gt.empty()) throw EmptyDocumentError("ground-truth document has no sections");
    SectionMap map;
    map.gt = classify_document(gt, judge, options, map.diagnostics);
    if (pred.empty()) {
        add_diagnostic(map.diagnostics, "empty_document", "generated document has no sections; every category is missing");
        map.pred.section_category.assign(pred.sections.size(), std::nullopt);
    } else {
        map.pred = classify_document(pred, judge, options, map.diagnostics);
    }
    return map;
}

}  // namespace papereval::align
