#pragma once

#include <optional>
#include <string>
#include <vector>

#include "papereval/assets.hpp"
#include "papereval/common.hpp"
#include "papereval/judge.hpp"
#include "papereval/prompts.hpp"
#include "papereval/section_align.hpp"

namespace papereval::rubric {

using align::Category;

enum class Importance { High, Medium, Low };

std::string to_string(Importance i);
std::optional<Importance> parse_importance(std::string_view s);

struct RubricElement {
    Category section = Category::Abstract;
    std::string name;
    Importance importance = Importance::Medium;
    std::string description;
    std::string evidence;
};

struct Rubric {
    std::string paper_id;
    std::vector<RubricElement> elements;

    std::vector<RubricElement> for_section(Category c) const;
};

inline constexpr const char* kRubricSchema = "rubric/1";
inline constexpr std::size_t kMinElementsPerSection = 5;
inline constexpr std::size_t kMaxElementsPerSection = 15;

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

class NoElements : public Error {
public:
    using Error::Error;
};

OrderedJson to_json(const Rubric& rubric);
/// Throws SchemaMismatch on a wrong schema tag or invalid element.
Rubric rubric_from_json(const Json& json);
void save_rubric(const Rubric& rubric, const fs::path& path);
Rubric load_rubric(const fs::path& path);

struct RubricOptions {
    std::size_t parallelism = 4;
    const PromptLibrary* prompts = nullptr;
};

/// One judge call per scored GT category.
Rubric generate_rubric(const std::string& paper_id, const align::DocumentSections& gt, judge::JudgeGateway& judge,
                       Diagnostics& diagnostics, const RubricOptions& options = {});

/// Elements for a single section. Exposed for tests of the bounds.
std::vector<RubricElement> extract_section_elements(Category section, const std::string& text,
                                                    judge::JudgeGateway& judge, const PromptLibrary& prompts,
                                                    Diagnostics& diagnostics);

struct RubricScore {
    std::string element;
    int score = 1;
    std::string reasoning;
};

/// One score per element, input order. A missing pred section scores every
/// element 1 without calling the judge.
std::vector<RubricScore> score_section(Category section, const std::vector<RubricElement>& elements,
                                       const std::optional<std::string>& pred_text, const std::string& asset_context,
                                       judge::JudgeGateway& judge, Diagnostics& diagnostics,
                                       const PromptLibrary& prompts = PromptLibrary::embedded());

struct SectionScore {
    Category section = Category::Abstract;
    std::vector<RubricScore> text_scores;
    std::vector<assets::FigureScore> figure_scores;
    std::vector<assets::TableMatch> table_scores;
    Rational sum{0};
    std::size_t count = 0;
    Rational average{0};
};

/// Plain mean over text, figure and table scores. Throws NoElements when
/// all three are empty.
SectionScore fold_section(Category section, std::vector<RubricScore> text_scores,
                          std::vector<assets::FigureScore> figure_scores,
                          std::vector<assets::TableMatch> table_scores);

/// "Figure/Table Context" text for the scoring prompt.
std::string asset_context(Category section, const std::vector<assets::FigureScore>& figures,
                          const std::vector<assets::TableMatch>& tables);

}  // namespace papereval::rubric
