#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "papereval/bibtex.hpp"
#include "papereval/common.hpp"
#include "papereval/judge.hpp"
#include "papereval/latex.hpp"
#include "papereval/prompts.hpp"

namespace papereval::prep {

/// Fixed bundle layout.
namespace layout {
inline constexpr const char* kGtTex = "gt_main.tex";
inline constexpr const char* kTemplate = "template.tex";
inline constexpr const char* kBib = "references.bib";
inline constexpr const char* kFigures = "figures";
inline constexpr const char* kTables = "tables";
inline constexpr const char* kCode = "code";
inline constexpr const char* kFigureSummary = "figure_summary.txt";
inline constexpr const char* kTableSummary = "table_summary.txt";
inline constexpr const char* kOverview = "research_overview.md";
inline constexpr const char* kRubric = "rubric.json";
}  // namespace layout

struct PaperBundle {
    fs::path root;
    fs::path gt_tex;
    fs::path references_bib;
    fs::path figures_dir;
    fs::path tables_dir;
    std::optional<fs::path> code_dir;
    fs::path template_tex;
    fs::path figure_summary;
    fs::path table_summary;
    fs::path research_overview;
    std::optional<fs::path> rubric_json;

    static PaperBundle at(const fs::path& root);
};

/// A bundle or source directory that cannot be used; the message names the
/// offending file.
class BundleError : public Error {
public:
    using Error::Error;
};

class ResolverUnavailable : public Error {
public:
    using Error::Error;
};

/// Headings the template must carry: every non-appendix \section,
/// \subsection and \subsubsection, as (depth, heading).
std::vector<std::pair<int, std::string>> structural_headings(const latex::LatexDocument& doc);

/// Preamble, front matter and headings of `gt` with every body emptied; the
/// abstract environment is kept empty and the bibliography points at
/// references.bib.
std::string build_template(const latex::LatexDocument& gt);

struct AssetExtraction {
    std::vector<std::string> table_files;
    std::vector<std::string> figure_files;
    Diagnostics diagnostics;
};

/// File name used for a GT table: "table_<label suffix>" or
/// "table_<index+1>" when unlabeled.
std::string table_file_stem(const latex::TableBlock& table, std::size_t index);

/// Writes tables/ and figures/ plus both summary files under `bundle_root`,
/// replacing earlier contents. Missing graphics are reported and skipped.
AssetExtraction extract_assets(const latex::LatexDocument& gt, const fs::path& source_dir,
                               const fs::path& bundle_root);

/// External abstract lookup by title or identifier.
class AbstractResolver {
public:
    virtual ~AbstractResolver() = default;
    virtual std::string id() const = 0;
    /// nullopt on a miss; throws ResolverUnavailable when the service
    /// cannot be reached.
    virtual std::optional<std::string> lookup(const bib::BibEntry& entry) = 0;
};

/// Fixture resolver: citation key or lowercased title to abstract.
class MapResolver : public AbstractResolver {
public:
    explicit MapResolver(std::map<std::string, std::string> abstracts) : abstracts_(std::move(abstracts)) {}
    std::string id() const override { return "map"; }
    std::optional<std::string> lookup(const bib::BibEntry& entry) override;

private:
    std::map<std::string, std::string> abstracts_;
};

/// Scholarly metadata service (Semantic Scholar graph API). DOI or arXiv
/// identifiers are tried first, then a title match.
struct ScholarConfig {
    std::string base_url = "https://api.semanticscholar.org";
    /// Optional key, read from this environment variable when set.
    std::string api_key_env = "S2_API_KEY";
    double requests_per_second = 1.0;
    int timeout_seconds = 30;
};

class ScholarResolver : public AbstractResolver {
public:
    explicit ScholarResolver(ScholarConfig config);
    std::string id() const override { return "scholar"; }
    std::optional<std::string> lookup(const bib::BibEntry& entry) override;

private:
    std::optional<std::string> get_abstract(const std::string& path);
    void pace();

    ScholarConfig config_;
    std::mutex pace_mu_;
    std::chrono::steady_clock::time_point next_slot_{};
};

struct AugmentResult {
    std::string text;
    std::size_t augmented = 0;
    Diagnostics diagnostics;
};

/// Adds an abstract field to entries that lack one and that the resolver
/// knows. Other entries are byte-identical; running twice equals once.
AugmentResult augment_bib(const bib::BibDatabase& bib, AbstractResolver& resolver, std::size_t parallelism = 1);

enum class PaperKind { Method, Benchmark, Both };
enum class OverviewLength { Default, Long };
PaperKind parse_paper_kind(const std::string& s);
OverviewLength parse_overview_length(const std::string& s);
std::string to_string(PaperKind k);
std::string to_string(OverviewLength l);

/// Heading lines mandated by the chosen overview prompt, annotations
/// stripped ("## 1. Motivation"). The first entry is the "# ..." title line.
std::vector<std::string> overview_skeleton(PaperKind kind, OverviewLength length,
                                           const PromptLibrary& prompts = PromptLibrary::embedded());

/// Checks the title line and the H2 headings in order; returns the first
/// violation.
std::optional<std::string> check_overview(const std::string& markdown, const std::vector<std::string>& skeleton);

/// Inclusive character bounds with the 30% slack applied.
std::pair<std::size_t, std::size_t> overview_length_bounds(OverviewLength length);

std::string generate_overview(const std::string& gt_full_text, PaperKind kind, OverviewLength length,
                              judge::JudgeGateway& judge, Diagnostics& diagnostics,
                              const PromptLibrary& prompts = PromptLibrary::embedded());

struct ValidationResult {
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

ValidationResult validate(const fs::path& bundle_root);

struct PrepOptions {
    /// GT main file inside the source directory; found automatically when empty.
    fs::path main_tex;
    std::optional<fs::path> code_dir;
    PaperKind kind = PaperKind::Method;
    OverviewLength length = OverviewLength::Default;
    AbstractResolver* resolver = nullptr;
    judge::JudgeGateway* judge = nullptr;
    bool regenerate_overview = false;
    std::size_t parallelism = 4;
};

struct PrepResult {
    PaperBundle bundle;
    ValidationResult validation;
    Diagnostics diagnostics;
};

/// Locates the GT main file: the only .tex with \begin{document}, or
/// main.tex among several.
fs::path find_main_tex(const fs::path& source_dir);

PrepResult prepare_bundle(const fs::path& source_dir, const fs::path& bundle_root, const PrepOptions& options);

}  // namespace papereval::prep
