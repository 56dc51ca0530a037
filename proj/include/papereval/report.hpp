#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papereval/citations.hpp"
#include "papereval/claims.hpp"
#include "papereval/common.hpp"
#include "papereval/json_schema.hpp"
#include "papereval/rubric.hpp"

namespace papereval::report {

using align::Category;

inline constexpr const char* kReportSchema = "report/1";
inline constexpr const char* kLeaderboardSchema = "leaderboard/1";
inline constexpr const char* kEngineVersion = "papereval 0.3.0";

class IncompleteRun : public Error {
public:
    using Error::Error;
};

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

enum class AverageMode { Pooled, Sectionwise };
std::string to_string(AverageMode m);

struct Provenance {
    std::string judge_backend;
    std::string verifier_backend;
    /// Hash over every judge and verifier response the run consumed.
    std::string cassette_hash;
    std::map<std::string, std::string> prompt_versions;
    std::string engine_version = kEngineVersion;
    std::vector<std::string> stage_order;
};

struct Labels {
    std::string agent;
    std::string model;
};

struct EvaluationReport {
    std::string paper_id;
    Labels labels;
    AverageMode average_mode = AverageMode::Pooled;
    std::vector<rubric::SectionScore> sections;
    Rational avg_rubric{0};
    Rational element_sum{0};
    std::size_t element_count = 0;
    std::optional<claims::HallucinationReport> hallucination;
    std::optional<citations::CitationReport> citation;
    Diagnostics diagnostics;
    Provenance provenance;
};

/// Diagnostic codes that explain a missing metric family.
inline constexpr const char* kRubricUnavailable = "rubric_unavailable";
inline constexpr const char* kClaimsUnavailable = "claims_unavailable";
inline constexpr const char* kCitationsUnavailable = "citations_unavailable";

/// Pooled mode averages every element score across sections; sectionwise
/// mode averages the section means. Throws IncompleteRun when a family is
/// missing with no diagnostic explaining it, or provenance is incomplete.
EvaluationReport assemble(std::string paper_id, std::vector<rubric::SectionScore> sections,
                          std::optional<claims::HallucinationReport> hallucination,
                          std::optional<citations::CitationReport> citation, Provenance provenance,
                          Diagnostics diagnostics, AverageMode mode = AverageMode::Pooled);

/// report.json body. Stable key order; rationals as {exact, decimal}.
Json to_json(const EvaluationReport& report);
std::string serialize(const EvaluationReport& report);

Json rational_json(const Rational& r);

/// The slice of a report the leaderboard needs, readable back from
/// report.json.
struct ReportSummary {
    std::string paper_id;
    Labels labels;
    std::map<Category, Rational> section_average;
    Rational avg_rubric{0};
    bool has_hallucination = false;
    std::map<Category, std::size_t> section_major;
    std::size_t major_total = 0;
    bool has_citation = false;
    Rational precision{0};
    Rational recall{0};
    Rational f1{0};
    std::size_t hallucinated_citations = 0;
};

ReportSummary summarize(const EvaluationReport& report);
/// Throws SchemaMismatch when the schema tag is not report/1.
ReportSummary summary_from_json(const Json& json);
ReportSummary load_summary(const fs::path& path);

struct Cell {
    std::optional<Rational> value;
};

struct LeaderboardRow {
    Labels labels;
    std::size_t papers = 0;
    std::map<Category, Cell> rubric;
    Cell rubric_avg;
    std::map<Category, Cell> hallucination;
    Cell hallucination_total;
    Cell precision;
    Cell recall;
    Cell f1;
    Cell citation_hallucination;
};

struct Leaderboard {
    std::vector<LeaderboardRow> rows;  ///< ordered by (agent, model)
};

/// Cell = arithmetic mean over the reports in the row that carry it.
Leaderboard leaderboard(const std::vector<ReportSummary>& reports);

std::string render_markdown(const Leaderboard& board);
Json leaderboard_json(const Leaderboard& board);

/// One table row as printed, e.g. "4.00 3.58 2.32 2.89 3.25 3.53 3.26".
std::string rubric_row_text(const LeaderboardRow& row);
std::string hallucination_row_text(const LeaderboardRow& row);
std::string citation_row_text(const LeaderboardRow& row);

}  // namespace papereval::report
