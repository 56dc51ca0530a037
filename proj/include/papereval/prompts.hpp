#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "papereval/common.hpp"

namespace papereval {

using TemplateValues = std::vector<std::pair<std::string, std::string>>;

/// Prompt templates by name (file stem). The embedded copies can be
/// overridden per file from a directory of `<name>.txt` files.
class PromptLibrary {
public:
    static const PromptLibrary& embedded();
    static PromptLibrary with_overrides(const fs::path& dir);

    const std::string& get(const std::string& name) const;
    /// First 12 hex digits of the template's SHA-256.
    std::string version(const std::string& name) const;
    std::map<std::string, std::string> versions() const;

    std::string render(const std::string& name, const TemplateValues& values) const;

private:
    std::map<std::string, std::string> templates_;
};

/// Embedded section rule table (section_rules.tsv).
const std::string& embedded_section_rules();

/// Repeated-item blocks in the scoring and verification templates. The
/// example item and the "..." line after it are replaced by the rendered
/// items.
inline constexpr const char* kRubricItemBlock = "- {element_name} ({importance}): {description}\n- ...";
inline constexpr const char* kRubricItem = "- {element_name} ({importance}): {description}";
inline constexpr const char* kClaimItemBlock =
    "### Claim 1\n- Claim: {claim_text}\n- Original evidence: {original_evidence}\n"
    "- Original severity: {original_severity}\n...";
inline constexpr const char* kClaimItem =
    "### Claim {index}\n- Claim: {claim_text}\n- Original evidence: {original_evidence}\n"
    "- Original severity: {original_severity}";

/// Replaces `block` in `tmpl` with `expansion`; throws ConfigError when an
/// overridden template no longer contains the block.
std::string expand_block(const std::string& tmpl, const std::string& block, const std::string& expansion);

}  // namespace papereval
