#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "papereval/judge.hpp"
#include "papereval/rubric.hpp"
#include "papereval/section_align.hpp"
#include "papereval/verifier.hpp"

namespace papereval::testing {

using align::Category;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

/// Six-section paper whose prose is known sentence by sentence, so rubric
/// evidence can be quoted exactly. One figure (in Method) and one table (in
/// Experiments).
struct SamplePaper {
    std::string tex;
    std::string bib;
    std::map<Category, std::vector<std::string>> sentences;
    std::vector<std::string> cited_keys;
};

SamplePaper sample_paper();

/// Elements per scored section in sample_rubric.
const std::map<Category, std::size_t>& sample_element_counts();

/// Evidence for element k of a section is the k-th sentence of that section.
rubric::Rubric sample_rubric(const SamplePaper& paper);

/// Drops the `\section{heading}` slice up to the next \section or the
/// bibliography.
std::string remove_section(const std::string& tex, const std::string& heading);

std::string replace_all(std::string s, const std::string& from, const std::string& to);

/// Twenty-section paper with 6 tables, 5 figures and 40 numeric claims. The
/// generated counterpart changes the numbers of `contradicted` claims,
/// relabels one table and moves one figure reference.
struct LargePaper {
    std::string gt;
    std::string pred;
    std::string bib;
    std::size_t claims = 0;
    std::size_t contradicted = 0;
};

LargePaper large_paper();

/// gt_main.tex, references.bib and, when given, rubric.json.
void write_bundle(const fs::path& dir, const std::string& gt_tex, const std::string& bib,
                  const std::optional<rubric::Rubric>& rubric = std::nullopt);

struct Judges {
    std::shared_ptr<judge::Cassette> cassette;
    std::unique_ptr<judge::JudgeGateway> judge;
    std::unique_ptr<verifier::VerifierGateway> verifier;
};

/// Gateway settings with millisecond backoff so retry tests stay fast.
judge::GatewayConfig fast_gateway(std::size_t max_in_flight = 4);

Judges heuristic_judges(std::shared_ptr<judge::Cassette> cassette = nullptr);
Judges scripted_judges(judge::ScriptedBackend::Handler judge_handler,
                       verifier::ScriptedVerifier::Handler verifier_handler = {});

/// Reply helper for scripted handlers.
judge::BackendReply reply(const Json& body);

/// Directory holding the static fixtures (arXiv-style source tree, corpus
/// files).
fs::path fixture_dir();

}  // namespace papereval::testing
