#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "papereval/common.hpp"
#include "papereval/judge.hpp"
#include "papereval/prompts.hpp"
#include "papereval/section_align.hpp"
#include "papereval/verifier.hpp"

namespace papereval::claims {

using align::Category;

enum class Verdict { Supported, Neutral, Contradictory };
enum class Severity { Major, Minor, None };
enum class Stage { Extracted, Verified };

std::string to_string(Verdict v);
std::string to_string(Severity s);
std::string to_string(Stage s);
std::optional<Verdict> parse_verdict(std::string_view s);
std::optional<Severity> parse_severity(std::string_view s);

struct Claim {
    Category section = Category::Abstract;
    /// Position within its section's stage-one list; with `section` it keys
    /// the claim through verification.
    std::size_t ordinal = 0;
    std::string text;
    Verdict classification = Verdict::Neutral;
    Severity severity = Severity::None;
    std::string evidence;
    Stage stage = Stage::Extracted;
    /// Severity raised from minor to major during verification.
    bool escalated = false;

    bool operator==(const Claim&) const = default;
};

struct ExtractOptions {
    const PromptLibrary* prompts = nullptr;
};

/// Stage one for one section. A judge that keeps answering malformed
/// output yields an empty list plus a diagnostic.
std::vector<Claim> extract_claims(Category section, const std::string& pred_text, const std::string& gt_full_text,
                                  judge::JudgeGateway& judge, Diagnostics& diagnostics,
                                  const PromptLibrary& prompts = PromptLibrary::embedded());

struct VerifyOutcome {
    std::vector<Claim> claims;  ///< same order and length as the input
    bool unverified = false;
    Diagnostics diagnostics;
};

/// Stage two. Only contradictory claims are sent, in a single verifier
/// call; other claims are returned unchanged. No call is made when nothing
/// is flagged.
VerifyOutcome verify_claims(const std::vector<Claim>& claims, const fs::path& bundle_root,
                            verifier::VerifierGateway& verifier,
                            const PromptLibrary& prompts = PromptLibrary::embedded());

struct Counts {
    std::size_t supported = 0;
    std::size_t neutral = 0;
    std::size_t major = 0;
    std::size_t minor = 0;

    bool operator==(const Counts&) const = default;
};

struct HallucinationReport {
    std::map<Category, Counts> per_section;
    Counts total;
    /// Total major contradictory claims.
    std::size_t headline = 0;
    bool unverified = false;
    std::size_t escalations = 0;
    std::vector<Claim> claims;
};

HallucinationReport tally(const std::vector<Claim>& claims, bool unverified = false);

Json claim_to_json(const Claim& c);
Json counts_to_json(const Counts& c);
/// claims.json body: {schema: "claims/1", stage1, verified, counts}.
Json claims_document(const std::vector<Claim>& stage1, const HallucinationReport& report);

}  // namespace papereval::claims
