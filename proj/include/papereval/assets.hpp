#pragma once

#include <optional>
#include <string>
#include <vector>

#include "papereval/common.hpp"
#include "papereval/judge.hpp"
#include "papereval/latex.hpp"
#include "papereval/prompts.hpp"
#include "papereval/section_align.hpp"

namespace papereval::assets {

using align::Category;

enum class FigureBasis { SameSection, JudgeContext, Unreferenced };
enum class MatchMethod { Label, Caption, Judge, None };

std::string to_string(FigureBasis b);
std::string to_string(MatchMethod m);

struct FigureScore {
    std::size_t gt_index = 0;  ///< into gt.figures
    std::string name;          ///< first asset path, label, or "figure <n>"
    int score = 1;
    FigureBasis basis = FigureBasis::Unreferenced;
    /// GT category the figure is attributed to for averaging.
    std::optional<Category> attributed;
    std::optional<Category> pred_section;
    std::string reasoning;
};

struct TableMatch {
    std::size_t gt_index = 0;  ///< into gt.tables
    std::optional<std::size_t> pred_index;
    MatchMethod method = MatchMethod::None;
    int score = 1;
    std::string reasoning;
    std::optional<Category> attributed;
    std::string name;  ///< label or caption first line
};

struct TableResult {
    std::vector<TableMatch> matches;  ///< one per GT table, GT order
    std::vector<std::size_t> extras;  ///< unmatched pred table indices
};

/// Minimum caption token Jaccard for a caption-based match.
inline const Rational kCaptionThreshold{1, 2};

/// Byte offsets where `doc` places or references the given figure or table.
std::vector<std::size_t> figure_locations(const latex::LatexDocument& doc, std::size_t figure_index);
std::vector<std::size_t> table_locations(const latex::LatexDocument& doc, std::size_t table_index);

/// The first scored category among the locations, in byte order.
std::optional<Category> attribute(const latex::LatexDocument& doc, const align::DocumentSections& sections,
                                  std::vector<std::size_t> locations);

/// Pred figures sharing an asset key with GT figure `gt_index`, falling
/// back to caption similarity when no path matches.
std::vector<std::size_t> matching_pred_figures(const latex::LatexDocument& gt, std::size_t gt_index,
                                               const latex::LatexDocument& pred);

struct AssetOptions {
    std::size_t parallelism = 4;
    const PromptLibrary* prompts = nullptr;
};

std::vector<FigureScore> score_figures(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                                       const align::SectionMap& map, judge::JudgeGateway& judge,
                                       Diagnostics& diagnostics, const AssetOptions& options = {});

/// Label, caption and judge passes. Scores are left at 1 here; see
/// score_tables for the full operation.
TableResult match_tables(const std::vector<latex::TableBlock>& gt_tables,
                         const std::vector<latex::TableBlock>& pred_tables, judge::JudgeGateway& judge,
                         Diagnostics& diagnostics, const AssetOptions& options = {});

struct PairScore {
    int score = 1;
    std::string reasoning;
};

/// Throws JudgeMalformed / JudgeUnavailable from the gateway.
PairScore score_table_pair(const latex::TableBlock& gt, const latex::TableBlock& pred, judge::JudgeGateway& judge,
                           const PromptLibrary& prompts);

/// Matches, scores every matched pair and attributes GT tables to
/// categories.
TableResult score_tables(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                         const align::SectionMap& map, judge::JudgeGateway& judge, Diagnostics& diagnostics,
                         const AssetOptions& options = {});

}  // namespace papereval::assets
