#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papereval/common.hpp"
#include "papereval/judge.hpp"
#include "papereval/latex.hpp"
#include "papereval/prompts.hpp"

namespace papereval::align {

enum class Category { Abstract, Introduction, RelatedWork, Method, BenchmarkConstruction, Experiment, Conclusion };

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::Abstract,   Category::Introduction,          Category::RelatedWork, Category::Method,
    Category::BenchmarkConstruction, Category::Experiment, Category::Conclusion};

/// Scored categories in leaderboard column order.
inline constexpr std::array<Category, 6> kScoredCategories = {
    Category::Abstract, Category::Introduction,          Category::RelatedWork,
    Category::Method,   Category::BenchmarkConstruction, Category::Experiment};

/// Conclusion is classified but never scored.
inline bool is_scored(Category c) { return c != Category::Conclusion; }

std::string id_name(Category c);       ///< "RelatedWork"
std::string display_name(Category c);  ///< "Related Work"
std::string short_name(Category c);    ///< "Rel."
/// Accepts the id or display name, case-insensitively.
std::optional<Category> parse_category(std::string_view s);

struct Rule {
    std::string keyword;
    Category category;
};

class RuleTable {
public:
    /// Parses "keyword<TAB>Category" lines; '#' starts a comment line.
    static RuleTable parse(const std::string& tsv);
    static RuleTable load(const fs::path& path);
    static const RuleTable& embedded();

    /// First rule whose keyword is a substring of the normalized heading.
    std::optional<Category> classify(std::string_view heading) const;
    const std::vector<Rule>& rules() const { return rules_; }

private:
    std::vector<Rule> rules_;
};

std::optional<Category> classify_by_rules(std::string_view heading, const RuleTable& rules = RuleTable::embedded());

/// Characters of the section body sent to the judge with the heading.
inline constexpr std::size_t kJudgeBodyChars = 1500;

/// Judge fallback. Returns nullopt (section left unclassified) when the
/// judge is unavailable or keeps answering outside the category set.
std::optional<Category> classify_with_judge(const latex::RawSection& section, judge::JudgeGateway& judge,
                                            const PromptLibrary& prompts, Diagnostics& diagnostics);

struct CategoryText {
    /// Member section slices concatenated in byte order.
    std::string text;
    std::vector<std::string> headings;
    std::vector<latex::ByteRange> ranges;
};

struct DocumentSections {
    /// Categories without members are absent.
    std::map<Category, CategoryText> categories;
    /// Category of each RawSection by index, inherited for depth >= 2.
    std::vector<std::optional<Category>> section_category;
    /// Depth-1 headings that neither rules nor judge could place.
    std::vector<std::string> unclassified;
    std::size_t judge_calls = 0;

    bool has(Category c) const { return categories.count(c) != 0; }
    const std::string* text(Category c) const;
    /// Category of the section containing `offset`, if it has one.
    std::optional<Category> category_at(const latex::LatexDocument& doc, std::size_t offset) const;
};

struct SectionMap {
    DocumentSections gt;
    DocumentSections pred;
    Diagnostics diagnostics;
};

struct AlignOptions {
    std::size_t parallelism = 4;
    const RuleTable* rules = nullptr;
    const PromptLibrary* prompts = nullptr;
};

DocumentSections classify_document(const latex::LatexDocument& doc, judge::JudgeGateway& judge,
                                   const AlignOptions& options, Diagnostics& diagnostics);

/// Throws EmptyDocumentError when the GT has no sections. An empty
/// generated paper yields an empty map (everything missing).
SectionMap build_section_map(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                             judge::JudgeGateway& judge, const AlignOptions& options = {});

}  // namespace papereval::align
