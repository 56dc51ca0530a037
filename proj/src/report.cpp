#include "papereval/report.hpp"

#include "papereval/text_util.hpp"

namespace papereval::report {

namespace {

constexpr int kRubricDecimals = 2;
constexpr int kHallucinationDecimals = 1;
constexpr int kCitationDecimals = 2;
constexpr int kJsonDecimals = 4;

bool has_code(const Diagnostics& d, const std::string& code) {
    for (const auto& x : d) {
        if (x.code == code) return true;
    }
    return false;
}

Json diagnostics_json(const Diagnostics& diagnostics) {
    Json out = Json::array();
    for (const auto& d : diagnostics) {
        Json j = {{"code", d.code}, {"message", d.message}};
        if (d.offset) j["offset"] = *d.offset;
        out.push_back(std::move(j));
    }
    return out;
}

Json section_json(const rubric::SectionScore& s) {
    Json text = Json::array();
    for (const auto& t : s.text_scores) text.push_back({{"element", t.element}, {"score", t.score}, {"reasoning", t.reasoning}});
    Json figures = Json::array();
    for (const auto& f : s.figure_scores) {
        figures.push_back({{"figure", f.name},
                           {"score", f.score},
                           {"basis", assets::to_string(f.basis)},
                           {"pred_section", f.pred_section ? Json(align::id_name(*f.pred_section)) : Json()},
                           {"reasoning", f.reasoning}});
    }
    Json tables = Json::array();
    for (const auto& t : s.table_scores) {
        tables.push_back({{"table", t.name},
                          {"score", t.score},
                          {"method", assets::to_string(t.method)},
                          {"pred_index", t.pred_index ? Json(*t.pred_index) : Json()},
                          {"reasoning", t.reasoning}});
    }
    return {{"section", align::id_name(s.section)},
            {"average", rational_json(s.average)},
            {"sum", format_exact(s.sum)},
            {"count", s.count},
            {"text_scores", text},
            {"figure_scores", figures},
            {"table_scores", tables}};
}

Json hallucination_json(const claims::HallucinationReport& h) {
    Json per_section = Json::object();
    for (auto c : align::kScoredCategories) {
        auto it = h.per_section.find(c);
        per_section[align::id_name(c)] = claims::counts_to_json(it == h.per_section.end() ? claims::Counts{} : it->second);
    }
    return {{"per_section", per_section},
            {"total", claims::counts_to_json(h.total)},
            {"headline", h.headline},
            {"unverified", h.unverified},
            {"escalations", h.escalations}};
}

Rational exact_of(const Json& j) {
    if (j.is_object()) return parse_exact(j.at("exact").get<std::string>());
    return parse_exact(j.get<std::string>());
}

std::optional<Rational> mean(const std::vector<Rational>& values) {
    if (values.empty()) return std::nullopt;
    Rational sum = 0;
    for (const auto& v : values) sum += v;
    return sum / static_cast<std::int64_t>(values.size());
}

std::string cell_text(const Cell& c, int decimals) { return c.value ? format_fixed(*c.value, decimals) : "-"; }

Json cell_json(const Cell& c) { return c.value ? rational_json(*c.value) : Json(); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

std::string md_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out = "| " + join(header, " | ") + " |\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out += i < 2 ? "---|" : "---:|";
    out += "\n";
    for (const auto& r : rows) out += "| " + join(r, " | ") + " |\n";
    return out;
}

}  // namespace

std::string to_string(AverageMode m) { return m == AverageMode::Pooled ? "pooled" : "sectionwise"; }

Json rational_json(const Rational& r) {
    return {{"exact", format_exact(r)}, {"decimal", format_fixed(r, kJsonDecimals)}};
}

EvaluationReport assemble(std::string paper_id, std::vector<rubric::SectionScore> sections,
                          std::optional<claims::HallucinationReport> hallucination,
                          std::optional<citations::CitationReport> citation, Provenance provenance,
                          Diagnostics diagnostics, AverageMode mode) {
    if (sections.empty() && !has_code(diagnostics, kRubricUnavailable)) {
        throw IncompleteRun("rubric scores are missing and no diagnostic explains why");
    }
    if (!hallucination && !has_code(diagnostics, kClaimsUnavailable)) {
        throw IncompleteRun("hallucination counts are missing and no diagnostic explains why");
    }
    if (!citation && !has_code(diagnostics, kCitationsUnavailable)) {
        throw IncompleteRun("citation metrics are missing and no diagnostic explains why");
    }
    if (provenance.judge_backend.empty() || provenance.verifier_backend.empty() || provenance.cassette_hash.empty() ||
        provenance.prompt_versions.empty() || provenance.engine_version.empty() || provenance.stage_order.empty()) {
        throw IncompleteRun("provenance is incomplete");
    }

    EvaluationReport r;
    r.paper_id = std::move(paper_id);
    r.average_mode = mode;
    Rational mean_sum = 0;
    for (const auto& s : sections) {
        r.element_sum += s.sum;
        r.element_count += s.count;
        mean_sum += s.average;
    }
    if (mode == AverageMode::Pooled) {
        if (r.element_count > 0) r.avg_rubric = r.element_sum / static_cast<std::int64_t>(r.element_count);
    } else if (!sections.empty()) {
        r.avg_rubric = mean_sum / static_cast<std::int64_t>(sections.size());
    }
    r.sections = std::move(sections);
    r.hallucination = std::move(hallucination);
    r.citation = std::move(citation);
    r.diagnostics = std::move(diagnostics);
    r.provenance = std::move(provenance);
    return r;
}

Json to_json(const EvaluationReport& r) {
    Json sections = Json::array();
    for (const auto& s : r.sections) sections.push_back(section_json(s));
    Json prov = {{"judge_backend", r.provenance.judge_backend},
                 {"verifier_backend", r.provenance.verifier_backend},
                 {"cassette_hash", r.provenance.cassette_hash},
                 {"prompt_versions", r.provenance.prompt_versions},
                 {"engine_version", r.provenance.engine_version},
                 {"stage_order", r.provenance.stage_order}};
    return {{"schema", kReportSchema},
            {"paper_id", r.paper_id},
            {"labels", {{"agent", r.labels.agent}, {"model", r.labels.model}}},
            {"average_mode", to_string(r.average_mode)},
            {"avg_rubric", rational_json(r.avg_rubric)},
            {"element_sum", format_exact(r.element_sum)},
            {"element_count", r.element_count},
            {"sections", sections},
            {"hallucination", r.hallucination ? hallucination_json(*r.hallucination) : Json()},
            {"citation", r.citation ? citations::to_json(*r.citation) : Json()},
            {"diagnostics", diagnostics_json(r.diagnostics)},
            {"provenance", prov}};
}

std::string serialize(const EvaluationReport& report) { return to_json(report).dump(2) + "\n"; }

ReportSummary summarize(const EvaluationReport& r) {
    ReportSummary s;
    s.paper_id = r.paper_id;
    s.labels = r.labels;
    for (const auto& sec : r.sections) s.section_average[sec.section] = sec.average;
    s.avg_rubric = r.avg_rubric;
    if (r.hallucination) {
        s.has_hallucination = true;
        for (const auto& [cat, counts] : r.hallucination->per_section) s.section_major[cat] = counts.major;
        s.major_total = r.hallucination->headline;
    }
    if (r.citation) {
        s.has_citation = true;
        s.precision = r.citation->precision;
        s.recall = r.citation->recall;
        s.f1 = r.citation->f1;
        s.hallucinated_citations = r.citation->hallucination_count();
    }
    return s;
}

ReportSummary summary_from_json(const Json& j) {
    if (!j.is_object() || j.value("schema", "") != kReportSchema) {
        throw SchemaMismatch(std::string("expected schema \"") + kReportSchema + "\", found \"" +
                             (j.is_object() ? j.value("schema", "") : std::string()) + "\"");
    }
    ReportSummary s;
    try {
        s.paper_id = j.value("paper_id", "");
        if (j.contains("labels")) {
            s.labels.agent = j["labels"].value("agent", "");
            s.labels.model = j["labels"].value("model", "");
        }
        for (const auto& sec : j.at("sections")) {
            const auto cat = align::parse_category(sec.at("section").get<std::string>());
            if (!cat) throw SchemaMismatch("unknown section " + sec.at("section").dump());
            s.section_average[*cat] = exact_of(sec.at("average"));
        }
        s.avg_rubric = exact_of(j.at("avg_rubric"));
        if (j.contains("hallucination") && !j["hallucination"].is_null()) {
            const auto& h = j["hallucination"];
            s.has_hallucination = true;
            for (const auto& [name, counts] : h.at("per_section").items()) {
                const auto cat = align::parse_category(name);
                if (!cat) throw SchemaMismatch("unknown section " + name);
                s.section_major[*cat] = counts.at("major").get<std::size_t>();
            }
            s.major_total = h.at("headline").get<std::size_t>();
        }
        if (j.contains("citation") && !j["citation"].is_null()) {
            const auto& c = j["citation"];
            s.has_citation = true;
            s.precision = exact_of(c.at("precision"));
            s.recall = exact_of(c.at("recall"));
            s.f1 = exact_of(c.at("f1"));
            s.hallucinated_citations = c.at("hallucination_count").get<std::size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("malformed report: ") + e.what());
    }
    return s;
}

ReportSummary load_summary(const fs::path& path) {
    auto j = Json::parse(text::read_file(path), nullptr, false);
    if (j.is_discarded()) throw SchemaMismatch("not valid JSON: " + path.string());
    return summary_from_json(j);
}

Leaderboard leaderboard(const std::vector<ReportSummary>& reports) {
    std::map<std::pair<std::string, std::string>, std::vector<const ReportSummary*>> groups;
    for (const auto& r : reports) groups[{r.labels.agent, r.labels.model}].push_back(&r);

    Leaderboard board;
    for (const auto& [key, members] : groups) {
        LeaderboardRow row;
        row.labels = {key.first, key.second};
        row.papers = members.size();
        std::vector<Rational> avg;
        std::vector<Rational> total;
        std::vector<Rational> p;
        std::vector<Rational> rc;
        std::vector<Rational> f;
        std::vector<Rational> hal;
        for (auto c : align::kScoredCategories) {
            std::vector<Rational> rub;
            std::vector<Rational> maj;
            for (const auto* m : members) {
                if (auto it = m->section_average.find(c); it != m->section_average.end()) rub.push_back(it->second);
                if (m->has_hallucination) {
                    auto it = m->section_major.find(c);
                    maj.push_back(static_cast<std::int64_t>(it == m->section_major.end() ? 0 : it->second));
                }
            }
            row.rubric[c].value = mean(rub);
            row.hallucination[c].value = mean(maj);
        }
        for (const auto* m : members) {
            avg.push_back(m->avg_rubric);
            if (m->has_hallucination) total.push_back(static_cast<std::int64_t>(m->major_total));
            if (m->has_citation) {
                p.push_back(m->precision);
                rc.push_back(m->recall);
                f.push_back(m->f1);
                hal.push_back(static_cast<std::int64_t>(m->hallucinated_citations));
            }
        }
        row.rubric_avg.value = mean(avg);
        row.hallucination_total.value = mean(total);
        row.precision.value = mean(p);
        row.recall.value = mean(rc);
        row.f1.value = mean(f);
        row.citation_hallucination.value = mean(hal);
        board.rows.push_back(std::move(row));
    }
    return board;
}

std::string rubric_row_text(const LeaderboardRow& row) {
    std::vector<std::string> cells;
    for (auto c : align::kScoredCategories) cells.push_back(cell_text(row.rubric.at(c), kRubricDecimals));
    cells.push_back(cell_text(row.rubric_avg, kRubricDecimals));
    return join(cells, " ");
}

std::string hallucination_row_text(const LeaderboardRow& row) {
    std::vector<std::string> cells;
    for (auto c : align::kScoredCategories) cells.push_back(cell_text(row.hallucination.at(c), kHallucinationDecimals));
    cells.push_back(cell_text(row.hallucination_total, kHallucinationDecimals));
    return join(cells, " ");
}

std::string citation_row_text(const LeaderboardRow& row) {
    return join({cell_text(row.precision, kCitationDecimals), cell_text(row.recall, kCitationDecimals),
                 cell_text(row.f1, kCitationDecimals), cell_text(row.citation_hallucination, kHallucinationDecimals)},
                " ");
}

std::string render_markdown(const Leaderboard& board) {
    std::vector<std::string> section_cols;
    for (auto c : align::kScoredCategories) section_cols.push_back(align::short_name(c));

    auto header = [&](std::vector<std::string> tail) {
        std::vector<std::string> h = {"Agent", "Model"};
        h.insert(h.end(), tail.begin(), tail.end());
        return h;
    };
    auto rows = [&](auto cells_of) {
        std::vector<std::vector<std::string>> out;
        for (const auto& r : board.rows) {
            std::vector<std::string> cells = {r.labels.agent, r.labels.model};
            for (auto& c : cells_of(r)) cells.push_back(std::move(c));
            out.push_back(std::move(cells));
        }
        return out;
    };
    auto rubric_cols = section_cols;
    rubric_cols.push_back("Avg.");
    auto hall_cols = section_cols;
    hall_cols.push_back("Total");

    std::string out = "## Rubric evaluation\n\n";
    out += md_table(header(rubric_cols), rows([](const LeaderboardRow& r) {
        std::vector<std::string> v;
        for (auto c : align::kScoredCategories) v.push_back(cell_text(r.rubric.at(c), kRubricDecimals));
        v.push_back(cell_text(r.rubric_avg, kRubricDecimals));
        return v;
    }));
    out += "\n## Hallucination (major contradictory claims per paper)\n\n";
    out += md_table(header(hall_cols), rows([](const LeaderboardRow& r) {
        std::vector<std::string> v;
        for (auto c : align::kScoredCategories) v.push_back(cell_text(r.hallucination.at(c), kHallucinationDecimals));
        v.push_back(cell_text(r.hallucination_total, kHallucinationDecimals));
        return v;
    }));
    out += "\n## Citation evaluation\n\n";
    out += md_table(header({"Prec.", "Recall", "F1", "Hal."}), rows([](const LeaderboardRow& r) {
        return std::vector<std::string>{cell_text(r.precision, kCitationDecimals), cell_text(r.recall, kCitationDecimals),
                                        cell_text(r.f1, kCitationDecimals),
                                        cell_text(r.citation_hallucination, kHallucinationDecimals)};
    }));
    return out;
}

Json leaderboard_json(const Leaderboard& board) {
    Json rows = Json::array();
    for (const auto& r : board.rows) {
        Json rubric = Json::object();
        Json hall = Json::object();
        for (auto c : align::kScoredCategories) {
            rubric[align::short_name(c)] = cell_json(r.rubric.at(c));
            hall[align::short_name(c)] = cell_json(r.hallucination.at(c));
        }
        rubric["Avg."] = cell_json(r.rubric_avg);
        hall["Total"] = cell_json(r.hallucination_total);
        rows.push_back({{"agent", r.labels.agent},
                        {"model", r.labels.model},
                        {"papers", r.papers},
                        {"rubric", rubric},
                        {"hallucination", hall},
                        {"citation",
                         {{"Prec.", cell_json(r.precision)},
                          {"Recall", cell_json(r.recall)},
                          {"F1", cell_json(r.f1)},
                          {"Hal.", cell_json(r.citation_hallucination)}}}});
    }
    return {{"schema", kLeaderboardSchema}, {"rows", rows}};
}

}  // namespace papereval::report
