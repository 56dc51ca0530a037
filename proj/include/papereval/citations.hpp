#pragma once

#include <set>
#include <string>
#include <vector>

#include "papereval/bibtex.hpp"
#include "papereval/common.hpp"
#include "papereval/json_schema.hpp"
#include "papereval/latex.hpp"

namespace papereval::citations {

using KeySet = std::set<std::string>;

struct CitationReport {
    KeySet gt_keys;
    KeySet pred_keys;
    KeySet bib_keys;
    KeySet valid;         ///< pred ∩ gt
    KeySet hallucinated;  ///< pred \ bib
    KeySet missing;       ///< gt \ pred
    KeySet extra;         ///< (pred ∩ bib) \ gt
    Rational precision{0};
    Rational recall{0};
    Rational f1{0};
    Diagnostics diagnostics;

    std::size_t hallucination_count() const { return hallucinated.size(); }
};

/// Set-level scoring. Keys are trimmed; comparison is otherwise exact.
/// Hallucinated keys stay in the precision denominator.
CitationReport score_key_sets(const KeySet& gt, const KeySet& pred, const KeySet& bib);

CitationReport score_citations(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                               const bib::BibDatabase& bib);

KeySet key_set(const std::vector<latex::CiteKey>& occurrences);

Json to_json(const CitationReport& report);

}  // namespace papereval::citations
