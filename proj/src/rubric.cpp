#include "papereval/rubric.hpp"

#include <map>

#include "papereval/parallel.hpp"
#include "papereval/text_util.hpp"

namespace papereval::rubric {

namespace {

const Json kExtractSchema = {
    {"type", "object"},
    {"required", {"elements"}},
    {"properties",
     {{"elements",
       {{"type", "array"},
        {"items",
         {{"type", "object"},
          {"required", {"element", "importance", "description", "evidence"}},
          {"properties",
           {{"element", {{"type", "string"}}},
            {"importance", {{"type", "string"}, {"enum", {"high", "medium", "low"}}}},
            {"description", {{"type", "string"}}},
            {"evidence", {{"type", "string"}}}}}}}}}}}};

const Json kScoreSchema = {
    {"type", "object"},
    {"required", {"scores"}},
    {"properties",
     {{"scores",
       {{"type", "array"},
        {"items",
         {{"type", "object"},
          {"required", {"element", "score"}},
          {"properties",
           {{"element", {{"type", "string"}}},
            {"score", {{"type", "integer"}, {"minimum", 1}, {"maximum", 5}}},
            {"reasoning", {{"type", "string"}}}}}}}}}}}};

}  // namespace

std::string to_string(Importance i) {
    switch (i) {
        case Importance::High: return "high";
        case Importance::Medium: return "medium";
        case Importance::Low: return "low";
    }
    return "medium";
}

std::optional<Importance> parse_importance(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "high") return Importance::High;
    if (v == "medium") return Importance::Medium;
    if (v == "low") return Importance::Low;
    return std::nullopt;
}

std::vector<RubricElement> Rubric::for_section(Category c) const {
    std::vector<RubricElement> out;
    for (const auto& e : elements) {
        if (e.section == c) out.push_back(e);
    }
    return out;
}

OrderedJson to_json(const Rubric& rubric) {
    OrderedJson elements = OrderedJson::array();
    for (const auto& e : rubric.elements) {
        elements.push_back({{"section", align::id_name(e.section)},
                            {"name", e.name},
                            {"importance", to_string(e.importance)},
                            {"description", e.description},
                            {"evidence", e.evidence}});
    }
    return OrderedJson{{"schema", kRubricSchema}, {"paper_id", rubric.paper_id}, {"elements", elements}};
}

Rubric rubric_from_json(const Json& j) {
    if (!j.is_object() || j.value("schema", "") != kRubricSchema) {
        throw SchemaMismatch(std::string("rubric schema must be \"") + kRubricSchema + "\"");
    }
    Rubric r;
    r.paper_id = j.value("paper_id", "");
    if (!j.contains("elements") || !j["elements"].is_array()) throw SchemaMismatch("rubric has no elements array");
    std::size_t i = 0;
    for (const auto& e : j["elements"]) {
        const auto where = "rubric element " + std::to_string(i++);
        if (!e.is_object()) throw SchemaMismatch(where + " is not an object");
        RubricElement el;
        const auto cat = align::parse_category(e.value("section", ""));
        if (!cat) throw SchemaMismatch(where + ": unknown section '" + e.value("section", "") + "'");
        if (!align::is_scored(*cat)) throw SchemaMismatch(where + ": Conclusion is never scored");
        el.section = *cat;
        el.name = text::trim(e.value("name", ""));
        if (el.name.empty()) throw SchemaMismatch(where + ": empty name");
        const auto imp = parse_importance(e.value("importance", ""));
        if (!imp) throw SchemaMismatch(where + ": importance must be high, medium or low");
        el.importance = *imp;
        el.description = e.value("description", "");
        el.evidence = e.value("evidence", "");
        r.elements.push_back(std::move(el));
    }
    return r;
}

void save_rubric(const Rubric& rubric, const fs::path& path) {
    text::write_file(path, to_json(rubric).dump(2) + "\n");
}

Rubric load_rubric(const fs::path& path) {
    if (!fs::exists(path)) throw Error("rubric.json not found: " + path.string());
    auto j = Json::parse(text::read_file(path), nullptr, false);
    if (j.is_discarded()) throw SchemaMismatch("rubric.json is not valid JSON: " + path.string());
    return rubric_from_json(j);
}

std::vector<RubricElement> extract_section_elements(Category section, const std::string& section_text,
                                                    judge::JudgeGateway& judge, const PromptLibrary& prompts,
                                                    Diagnostics& diagnostics) {
    if (text::trim(section_text).empty()) {
        add_diagnostic(diagnostics, "empty_section", align::display_name(section) + " has no text; no rubric elements");
        return {};
    }
    judge::JudgeRequest req;
    req.task_tag = "rubric_extract";
    req.system_prompt = prompts.get("rubric_extract_system");
    req.user_prompt = prompts.render("rubric_extract_user",
                                     {{"section_name", align::display_name(section)}, {"section_text", section_text}});
    req.response_schema = kExtractSchema.dump();
    req.payload = {{"section", align::display_name(section)}, {"text", section_text}};
    std::vector<RubricElement> out;
    try {
        const auto resp = judge.submit(req);
        for (const auto& e : resp.parsed["elements"]) {
            RubricElement el;
            el.section = section;
            el.name = text::trim(e["element"].get<std::string>());
            el.importance = parse_importance(e["importance"].get<std::string>()).value_or(Importance::Medium);
            el.description = e["description"].get<std::string>();
            el.evidence = e["evidence"].get<std::string>();
            if (el.name.empty()) {
                add_diagnostic(diagnostics, "empty_element_name", align::display_name(section) + ": element without a name dropped");
                continue;
            }
            out.push_back(std::move(el));
        }
    } catch (const JudgeMalformed& e) {
        add_diagnostic(diagnostics, "rubric_section_omitted", align::display_name(section) + ": " + e.what());
        return {};
    }
    if (out.size() > kMaxElementsPerSection) {
        add_diagnostic(diagnostics, "rubric_truncated",
                       align::display_name(section) + ": " + std::to_string(out.size()) + " elements truncated to " +
                           std::to_string(kMaxElementsPerSection));
        out.resize(kMaxElementsPerSection);
    }
    // Short sections cannot always support the minimum; keep what there is.
    if (!out.empty() && out.size() < kMinElementsPerSection) {
        add_diagnostic(diagnostics, "rubric_below_minimum",
                       align::display_name(section) + ": only " + std::to_string(out.size()) + " elements (expected at least " +
                           std::to_string(kMinElementsPerSection) + ")");
    }
    return out;
}

Rubric generate_rubric(const std::string& paper_id, const align::DocumentSections& gt, judge::JudgeGateway& judge,
                       Diagnostics& diagnostics, const RubricOptions& options) {
    const PromptLibrary& prompts = options.prompts != nullptr ? *options.prompts : PromptLibrary::embedded();
    std::vector<Category> sections;
    for (auto c : align::kScoredCategories) {
        if (gt.has(c)) sections.push_back(c);
    }
    struct Out {
        std::vector<RubricElement> elements;
        Diagnostics diagnostics;
    };
    const auto results = parallel_map<Out>(sections.size(), options.parallelism, [&](std::size_t i) {
        Out out;
        out.elements = extract_section_elements(sections[i], *gt.text(sections[i]), judge, prompts, out.diagnostics);
        return out;
    });
    Rubric rubric;
    rubric.paper_id = paper_id;
    for (const auto& r : results) {
        rubric.elements.insert(rubric.elements.end(), r.elements.begin(), r.elements.end());
        diagnostics.insert(diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
    }
    return rubric;
}

std::vector<RubricScore> score_section(Category section, const std::vector<RubricElement>& elements,
                                       const std::optional<std::string>& pred_text, const std::string& asset_context,
                                       judge::JudgeGateway& judge, Diagnostics& diagnostics,
                                       const PromptLibrary& prompts) {
    std::vector<RubricScore> out;
    for (const auto& e : elements) out.push_back(RubricScore{e.name, 1, ""});
    if (elements.empty()) return out;
    if (!pred_text || text::trim(*pred_text).empty()) {
        for (auto& s : out) s.reasoning = "section is absent from the generated paper";
        return out;
    }

    std::string items;
    Json payload_elements = Json::array();
    for (const auto& e : elements) {
        if (!items.empty()) items += "\n";
        items += text::render_template(kRubricItem, {{"element_name", e.name},
                                                     {"importance", to_string(e.importance)},
                                                     {"description", e.description}});
        payload_elements.push_back({{"element", e.name}, {"description", e.description}, {"evidence", e.evidence}});
    }
    auto user = prompts.render("rubric_score_user", {{"section_name", align::display_name(section)},
                                                     {"pred_content", *pred_text},
                                                     {"figure_table_context", asset_context}});
    judge::JudgeRequest req;
    req.task_tag = "rubric_score";
    req.system_prompt = prompts.get("rubric_score_system");
    req.user_prompt = expand_block(user, kRubricItemBlock, items);
    req.response_schema = kScoreSchema.dump();
    req.payload = {{"section", align::display_name(section)}, {"elements", payload_elements}, {"pred_text", *pred_text}};

    try {
        const auto resp = judge.submit(req);
        std::map<std::string, std::pair<int, std::string>> by_name;
        for (const auto& s : resp.parsed["scores"]) {
            by_name.emplace(text::trim(s["element"].get<std::string>()),
                            std::make_pair(s["score"].get<int>(), s.value("reasoning", "")));
        }
        for (auto& s : out) {
            auto it = by_name.find(s.element);
            if (it == by_name.end()) {
                add_diagnostic(diagnostics, "rubric_score_missing",
                               align::display_name(section) + ": no score for '" + s.element + "'; scored 1");
                continue;
            }
            s.score = it->second.first;
            s.reasoning = it->second.second;
        }
    } catch (const Error& e) {
        add_diagnostic(diagnostics, "rubric_score_failed",
                       align::display_name(section) + ": elements scored 1 after judge failure: " + e.what());
        for (auto& s : out) s.reasoning = "judge failure";
    }
    return out;
}

SectionScore fold_section(Category section, std::vector<RubricScore> text_scores,
                          std::vector<assets::FigureScore> figure_scores, std::vector<assets::TableMatch> table_scores) {
    SectionScore s;
    s.section = section;
    for (const auto& t : text_scores) s.sum += t.score;
    for (const auto& f : figure_scores) s.sum += f.score;
    for (const auto& t : table_scores) s.sum += t.score;
    s.count = text_scores.size() + figure_scores.size() + table_scores.size();
    if (s.count == 0) throw NoElements(align::display_name(section) + " has no rubric elements and no assets");
    s.average = s.sum / static_cast<std::int64_t>(s.count);
    s.text_scores = std::move(text_scores);
    s.figure_scores = std::move(figure_scores);
    s.table_scores = std::move(table_scores);
    return s;
}

std::string asset_context(Category section, const std::vector<assets::FigureScore>& figures,
                          const std::vector<assets::TableMatch>& tables) {
    std::string out;
    for (const auto& f : figures) {
        if (f.attributed != section) continue;
        out += "- Figure " + f.name + ": ";
        switch (f.basis) {
            case assets::FigureBasis::SameSection: out += "PRESENT in this section"; break;
            case assets::FigureBasis::JudgeContext:
                out += "present elsewhere (" + (f.pred_section ? align::display_name(*f.pred_section) : std::string("unclassified")) +
                       "), context score " + std::to_string(f.score) + "/5";
                break;
            case assets::FigureBasis::Unreferenced: out += "MISSING"; break;
        }
        out += "\n";
    }
    for (const auto& t : tables) {
        if (t.attributed != section) continue;
        out += "- Table " + t.name + ": ";
        if (!t.pred_index) {
            out += "MISSING";
        } else {
            out += "matched by " + assets::to_string(t.method) + ", match score " + std::to_string(t.score) + "/5";
        }
        out += "\n";
    }
    if (out.empty()) out = "No figures or tables are attributed to this section.\n";
    return out;
}

}  // namespace papereval::rubric
