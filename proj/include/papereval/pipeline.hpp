#pragma once

#include <optional>
#include <string>
#include <vector>

#include "papereval/claims.hpp"
#include "papereval/common.hpp"
#include "papereval/judge.hpp"
#include "papereval/prompts.hpp"
#include "papereval/report.hpp"
#include "papereval/rubric.hpp"
#include "papereval/verifier.hpp"

namespace papereval::pipeline {

/// Raised before any work when neither a rubric file nor generation was
/// requested.
class MissingRubric : public Error {
public:
    using Error::Error;
};

/// parse → section_map → assets → rubric → claims → citations → report.
const std::vector<std::string>& stage_order();

struct EvaluateOptions {
    fs::path bundle_root;
    fs::path pred_tex;
    /// Defaults to <bundle>/rubric.json.
    std::optional<fs::path> rubric_path;
    bool generate_rubric = false;
    std::size_t parallelism = 4;
    report::AverageMode average_mode = report::AverageMode::Pooled;
    report::Labels labels;
    /// Defaults to the bundle directory name.
    std::string paper_id;
    const PromptLibrary* prompts = nullptr;
};

struct StageTiming {
    std::string stage;
    double milliseconds = 0;
};

struct EvaluateResult {
    report::EvaluationReport report;
    std::vector<claims::Claim> stage1_claims;
    rubric::Rubric rubric;
    bool rubric_generated = false;
    std::vector<StageTiming> timings;
};

EvaluateResult evaluate(const EvaluateOptions& options, judge::JudgeGateway& judge,
                        verifier::VerifierGateway& verifier);

/// report.json, claims.json and timings.json (plus rubric.json when it was
/// generated) under `out_dir`.
void write_outputs(const EvaluateResult& result, const fs::path& out_dir);

std::string claims_json_text(const EvaluateResult& result);

}  // namespace papereval::pipeline
