#include "papereval/citations.hpp"

#include <algorithm>
#include <iterator>

#include "papereval/text_util.hpp"

namespace papereval::citations {

namespace {

KeySet intersect(const KeySet& a, const KeySet& b) {
    KeySet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

KeySet minus(const KeySet& a, const KeySet& b) {
    KeySet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

KeySet trimmed(const KeySet& in) {
    KeySet out;
    for (const auto& k : in) {
        auto t = text::trim(k);
        if (!t.empty()) out.insert(std::move(t));
    }
    return out;
}

Json rational_json(const Rational& r) { return {{"exact", format_exact(r)}, {"decimal", format_fixed(r, 4)}}; }

}  // namespace

KeySet key_set(const std::vector<latex::CiteKey>& occurrences) {
    KeySet out;
    for (const auto& c : occurrences) out.insert(c.key);
    return trimmed(out);
}

CitationReport score_key_sets(const KeySet& gt_in, const KeySet& pred_in, const KeySet& bib_in) {
    CitationReport r;
    r.gt_keys = trimmed(gt_in);
    r.pred_keys = trimmed(pred_in);
    r.bib_keys = trimmed(bib_in);
    r.valid = intersect(r.pred_keys, r.gt_keys);
    r.hallucinated = minus(r.pred_keys, r.bib_keys);
    r.missing = minus(r.gt_keys, r.pred_keys);
    r.extra = minus(intersect(r.pred_keys, r.bib_keys), r.gt_keys);

    const auto v = static_cast<std::int64_t>(r.valid.size());
    if (!r.pred_keys.empty()) r.precision = Rational(v, static_cast<std::int64_t>(r.pred_keys.size()));
    if (!r.gt_keys.empty()) r.recall = Rational(v, static_cast<std::int64_t>(r.gt_keys.size()));
    if (r.precision + r.recall != 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);

    if (r.pred_keys.empty()) add_diagnostic(r.diagnostics, "no_pred_citations", "generated paper cites nothing; precision is 0");
    if (r.gt_keys.empty()) add_diagnostic(r.diagnostics, "no_gt_citations", "reference paper cites nothing; recall is 0");
    return r;
}

CitationReport score_citations(const latex::LatexDocument& gt, const latex::LatexDocument& pred,
                               const bib::BibDatabase& bib) {
    KeySet bib_keys;
    for (const auto& [k, _] : bib.entries) bib_keys.insert(k);
    auto r = score_key_sets(key_set(gt.cite_keys), key_set(pred.cite_keys), bib_keys);
    if (pred.malformed_cites > 0) {
        add_diagnostic(r.diagnostics, "malformed_cites",
                       std::to_string(pred.malformed_cites) + " malformed citation commands skipped in the generated paper");
    }
    return r;
}

Json to_json(const CitationReport& r) {
    auto list = [](const KeySet& s) { return Json(std::vector<std::string>(s.begin(), s.end())); };
    return {{"gt_count", r.gt_keys.size()},
            {"pred_count", r.pred_keys.size()},
            {"valid", list(r.valid)},
            {"hallucinated", list(r.hallucinated)},
            {"missing", list(r.missing)},
            {"extra", list(r.extra)},
            {"precision", rational_json(r.precision)},
            {"recall", rational_json(r.recall)},
            {"f1", rational_json(r.f1)},
            {"hallucination_count", r.hallucinated.size()}};
}

}  // namespace papereval::citations
