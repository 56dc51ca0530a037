#include "papereval/claims.hpp"

#include "papereval/text_util.hpp"

namespace papereval::claims {

namespace {

const Json kStage1Schema = {
    {"type", "object"},
    {"required", {"claims"}},
    {"properties",
     {{"claims",
       {{"type", "array"},
        {"items",
         {{"type", "object"},
          {"required", {"claim", "classification"}},
          {"properties",
           {{"claim", {{"type", "string"}}},
            {"classification", {{"type", "string"}, {"enum", {"supported", "neutral", "contradictory"}}}},
            {"evidence", {{"type", "string"}}},
            {"severity", {{"type", {"string", "null"}}}}}}}}}}}}};

/// Contradictory claims need a major/minor severity; anything else is
/// normalized to None.
std::optional<std::string> severity_problem(const Json& item) {
    if (item["classification"] != "contradictory") return std::nullopt;
    const auto sev = item.contains("severity") && item["severity"].is_string()
                         ? parse_severity(item["severity"].get<std::string>())
                         : std::nullopt;
    if (!sev || *sev == Severity::None) return "contradictory claim without a major/minor severity";
    return std::nullopt;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Supported: return "supported";
        case Verdict::Neutral: return "neutral";
        case Verdict::Contradictory: return "contradictory";
    }
    return "";
}

std::string to_string(Severity s) {
    switch (s) {
        case Severity::Major: return "major";
        case Severity::Minor: return "minor";
        case Severity::None: return "none";
    }
    return "";
}

std::string to_string(Stage s) { return s == Stage::Verified ? "verified" : "extracted"; }

std::optional<Verdict> parse_verdict(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "supported") return Verdict::Supported;
    if (v == "neutral") return Verdict::Neutral;
    if (v == "contradictory") return Verdict::Contradictory;
    return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "major") return Severity::Major;
    if (v == "minor") return Severity::Minor;
    if (v == "none" || v == "null" || v.empty()) return Severity::None;
    return std::nullopt;
}

std::vector<Claim> extract_claims(Category section, const std::string& pred_text, const std::string& gt_full_text,
                                  judge::JudgeGateway& judge, Diagnostics& diagnostics, const PromptLibrary& prompts) {
    if (!align::is_scored(section)) return {};
    if (text::trim(pred_text).empty()) return {};
    judge::JudgeRequest req;
    req.task_tag = "claims_extract";
    req.system_prompt = prompts.get("claims_stage1_system");
    req.user_prompt = prompts.render("claims_stage1_user", {{"section_name", align::display_name(section)},
                                                            {"pred_content", pred_text},
                                                            {"gt_full_content", gt_full_text}});
    req.response_schema = kStage1Schema.dump();
    req.payload = {{"section", align::display_name(section)}, {"pred_text", pred_text}, {"gt_text", gt_full_text}};
    auto check = [](const Json& parsed) -> std::optional<std::string> {
        for (const auto& item : parsed["claims"]) {
            if (auto p = severity_problem(item)) return p;
        }
        return std::nullopt;
    };
    std::vector<Claim> out;
    try {
        const auto resp = judge.submit(req, check);
        for (const auto& item : resp.parsed["claims"]) {
            Claim c;
            c.section = section;
            c.ordinal = out.size();
            c.text = item["claim"].get<std::string>();
            c.classification = *parse_verdict(item["classification"].get<std::string>());
            c.severity = c.classification == Verdict::Contradictory
                             ? *parse_severity(item["severity"].get<std::string>())
                             : Severity::None;
            c.evidence = item.value("evidence", "");
            out.push_back(std::move(c));
        }
    } catch (const JudgeMalformed& e) {
        add_diagnostic(diagnostics, "claims_extraction_failed",
                       align::display_name(section) + ": no claims recorded after malformed judge output: " + e.what());
        return {};
    }
    return out;
}

VerifyOutcome verify_claims(const std::vector<Claim>& claims, const fs::path& bundle_root,
                            verifier::VerifierGateway& verifier, const PromptLibrary& prompts) {
    VerifyOutcome outcome;
    outcome.claims = claims;
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < claims.size(); ++i) {
        if (claims[i].classification == Verdict::Contradictory) flagged.push_back(i);
    }
    if (flagged.empty()) return outcome;

    std::string block;
    Json payload = Json::array();
    for (std::size_t k = 0; k < flagged.size(); ++k) {
        const auto& c = claims[flagged[k]];
        if (!block.empty()) block += "\n\n";
        block += text::render_template(kClaimItem, {{"index", std::to_string(k + 1)},
                                                    {"claim_text", c.text},
                                                    {"original_evidence", c.evidence},
                                                    {"original_severity", to_string(c.severity)}});
        payload.push_back({{"section", align::id_name(c.section)},
                           {"ordinal", c.ordinal},
                           {"claim", c.text},
                           {"evidence", c.evidence},
                           {"severity", to_string(c.severity)}});
    }
    verifier::VerifierRequest req;
    req.system_prompt = prompts.get("claims_stage2_system");
    req.user_prompt = expand_block(prompts.render("claims_stage2_user", {{"N", std::to_string(flagged.size())}}),
                                   kClaimItemBlock, block);
    req.payload = {{"claims", payload}};
    req.claim_count = flagged.size();

    verifier::VerifierResult result;
    try {
        result = verifier.run_verifier(req, bundle_root);
    } catch (const VerifierUnavailable& e) {
        outcome.unverified = true;
        add_diagnostic(outcome.diagnostics, "verifier_unavailable",
                       std::string("stage-one verdicts kept; report is unverified: ") + e.what());
        return outcome;
    }
    outcome.diagnostics = result.diagnostics;

    for (std::size_t k = 0; k < flagged.size(); ++k) {
        auto& c = outcome.claims[flagged[k]];
        if (k >= result.results.size()) {
            add_diagnostic(outcome.diagnostics, "verifier_missing_result",
                           align::display_name(c.section) + " claim " + std::to_string(c.ordinal) +
                               ": no verifier result; stage-one verdict kept");
            continue;
        }
        const auto& r = result.results[k];
        const auto verdict = parse_verdict(r["classification"].get<std::string>());
        auto severity = r.contains("severity") && r["severity"].is_string()
                            ? parse_severity(r["severity"].get<std::string>())
                            : std::optional<Severity>(Severity::None);
        if (*verdict == Verdict::Contradictory && (!severity || *severity == Severity::None)) {
            // Confirmation without a usable severity keeps the original one.
            add_diagnostic(outcome.diagnostics, "verifier_severity_missing",
                           align::display_name(c.section) + " claim " + std::to_string(c.ordinal) +
                               ": confirmed without severity; original severity kept");
            severity = c.severity;
        }
        const auto before = c.severity;
        c.classification = *verdict;
        c.severity = *verdict == Verdict::Contradictory ? *severity : Severity::None;
        c.escalated = before == Severity::Minor && c.severity == Severity::Major;
        c.evidence = r.value("evidence", c.evidence);
        c.stage = Stage::Verified;
    }
    return outcome;
}

HallucinationReport tally(const std::vector<Claim>& claims, bool unverified) {
    HallucinationReport rep;
    rep.unverified = unverified;
    rep.claims = claims;
    for (const auto& c : claims) {
        auto& s = rep.per_section[c.section];
        switch (c.classification) {
            case Verdict::Supported:
                ++s.supported;
                ++rep.total.supported;
                break;
            case Verdict::Neutral:
                ++s.neutral;
                ++rep.total.neutral;
                break;
            case Verdict::Contradictory:
                if (c.severity == Severity::Major) {
                    ++s.major;
                    ++rep.total.major;
                } else {
                    ++s.minor;
                    ++rep.total.minor;
                }
                break;
        }
        if (c.escalated) ++rep.escalations;
    }
    rep.headline = rep.total.major;
    return rep;
}

Json claim_to_json(const Claim& c) {
    return {{"section", align::id_name(c.section)},
            {"ordinal", c.ordinal},
            {"claim", c.text},
            {"classification", to_string(c.classification)},
            {"severity", to_string(c.severity)},
            {"evidence", c.evidence},
            {"stage", to_string(c.stage)},
            {"escalated", c.escalated}};
}

Json counts_to_json(const Counts& c) {
    return {{"supported", c.supported}, {"neutral", c.neutral}, {"major", c.major}, {"minor", c.minor}};
}

Json claims_document(const std::vector<Claim>& stage1, const HallucinationReport& report) {
    Json s1 = Json::array();
    for (const auto& c : stage1) s1.push_back(claim_to_json(c));
    Json verified = Json::array();
    for (const auto& c : report.claims) verified.push_back(claim_to_json(c));
    Json per_section = Json::object();
    for (const auto& [cat, counts] : report.per_section) per_section[align::id_name(cat)] = counts_to_json(counts);
    return {{"schema", "claims/1"},
            {"stage1", s1},
            {"verified", verified},
            {"unverified", report.unverified},
            {"counts", {{"total", counts_to_json(report.total)}, {"per_section", per_section}, {"headline", report.headline}}}};
}

}  // namespace papereval::claims
