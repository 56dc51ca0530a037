#include <algorithm>
#include <map>
#include <set>

#include "papereval/judge.hpp"
#include "papereval/text_util.hpp"
#include "papereval/verifier.hpp"

namespace papereval {

namespace {

using StringSet = std::set<std::string>;

StringSet as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

/// Rough LaTeX-to-prose: drops comments, command names, braces and math
/// delimiters so sentences can be split and compared.
std::string plain_text(std::string_view tex) {
    std::string out;
    out.reserve(tex.size());
    for (std::size_t i = 0; i < tex.size(); ++i) {
        const char c = tex[i];
        if (c == '%' && (i == 0 || tex[i - 1] != '\\')) {
            while (i < tex.size() && tex[i] != '\n') ++i;
            out += ' ';
            continue;
        }
        if (c == '\\') {
            std::size_t j = i + 1;
            while (j < tex.size() && std::isalpha(static_cast<unsigned char>(tex[j]))) ++j;
            if (j == i + 1 && j < tex.size()) {
                // control symbol such as \% or \&; a line break reads as space
                out += tex[j] == '\\' ? ' ' : tex[j];
                i = j;
                continue;
            }
            const auto name = tex.substr(i + 1, j - i - 1);
            // Arguments of these never read as prose.
            if (name == "label" || name == "ref" || name == "cite" || name == "citep" || name == "citet" ||
                name == "begin" || name == "end" || name == "includegraphics" || name == "eqref" ||
                name == "cref" || name == "vspace" || name == "hspace") {
                std::size_t k = j;
                while (k < tex.size() && tex[k] == '[') {
                    while (k < tex.size() && tex[k] != ']') ++k;
                    ++k;
                }
                if (k < tex.size() && tex[k] == '{') {
                    int depth = 0;
                    for (; k < tex.size(); ++k) {
                        if (tex[k] == '{') ++depth;
                        if (tex[k] == '}' && --depth == 0) break;
                    }
                    j = k + 1;
                }
                if (name == "begin") {
                    // Float placement and tabular column specs are not prose.
                    const auto env = tex.substr(i, j - i);
                    std::size_t k2 = j;
                    if (k2 < tex.size() && tex[k2] == '[') {
                        while (k2 < tex.size() && tex[k2] != ']') ++k2;
                        j = std::min(tex.size(), k2 + 1);
                    }
                    if (env.find("{tabular") != std::string_view::npos || env.find("{array}") != std::string_view::npos) {
                        k2 = j;
                        if (k2 < tex.size() && tex[k2] == '{') {
                            while (k2 < tex.size() && tex[k2] != '}') ++k2;
                            j = std::min(tex.size(), k2 + 1);
                        }
                    }
                }
            }
            out += ' ';
            i = j - 1;
            continue;
        }
        if (c == '{' || c == '}' || c == '$' || c == '&') {
            out += ' ';
            continue;
        }
        out += c == '~' ? ' ' : c;
    }
    return text::collapse_whitespace(out);
}

std::vector<std::string> prose_sentences(std::string_view tex) {
    std::vector<std::string> out;
    for (auto& s : text::split_sentences(plain_text(tex))) {
        auto t = text::trim(s);
        if (t.size() >= 20) out.push_back(std::move(t));
    }
    return out;
}

Rational overlap(const StringSet& a, const StringSet& b) {
    if (a.empty() && b.empty()) return 0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const auto uni = a.size() + b.size() - inter;
    return Rational(static_cast<std::int64_t>(inter), static_cast<std::int64_t>(uni));
}

/// Fraction of `needed` present in `have`; 1 when nothing is needed.
Rational coverage(const StringSet& needed, const StringSet& have) {
    if (needed.empty()) return 1;
    std::size_t hit = 0;
    for (const auto& x : needed) hit += have.count(x);
    return Rational(static_cast<std::int64_t>(hit), static_cast<std::int64_t>(needed.size()));
}

judge::BackendReply ok(const Json& j) { return {judge::ReplyStatus::Ok, j.dump(), {}}; }

const std::vector<std::pair<std::string, std::vector<std::string>>>& category_keywords() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
        {"Abstract", {"abstract", "we present", "in this paper"}},
        {"Introduction", {"introduction", "motivation", "we propose", "contributions"}},
        {"Related Work", {"related", "prior work", "previous work", "literature", "background"}},
        {"Method", {"method", "approach", "model", "architecture", "algorithm", "framework"}},
        {"Benchmark Construction", {"benchmark", "dataset", "data collection", "annotation", "curation"}},
        {"Experiment", {"experiment", "results", "evaluation", "ablation", "baseline", "accuracy"}},
        {"Conclusion", {"conclusion", "future work", "limitation", "we conclude"}},
    };
    return table;
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

Json classify(const Json& payload) {
    const auto heading = text::to_lower(payload.value("heading", ""));
    const auto body = text::to_lower(payload.value("body", ""));
    std::string best = "Method";
    std::size_t best_score = 0;
    for (const auto& [name, words] : category_keywords()) {
        std::size_t score = 0;
        for (const auto& w : words) score += 5 * count_occurrences(heading, w) + count_occurrences(body, w);
        if (score > best_score) {
            best = name;
            best_score = score;
        }
    }
    return {{"category", best}};
}

Json extract_rubric(const Json& payload) {
    Json elements = Json::array();
    const auto sentences = prose_sentences(payload.value("text", ""));
    std::set<std::string> names;
    for (const auto& s : sentences) {
        if (elements.size() == 8) break;
        const auto words = text::word_tokens(s);
        if (words.size() < 4) continue;
        std::string name;
        for (std::size_t i = 0; i < std::min<std::size_t>(6, words.size()); ++i) name += (i ? " " : "") + words[i];
        if (!names.insert(name).second) continue;
        const auto rank = elements.size();
        elements.push_back({{"element", name},
                            {"importance", rank < 3 ? "high" : rank < 6 ? "medium" : "low"},
                            {"description", s},
                            {"evidence", s}});
    }
    return {{"elements", elements}};
}

int coverage_score(const Rational& c) {
    if (c >= Rational(19, 20)) return 5;
    if (c >= Rational(3, 4)) return 4;
    if (c >= Rational(1, 2)) return 3;
    if (c >= Rational(1, 4)) return 2;
    return 1;
}

Json score_rubric(const Json& payload) {
    const auto pred = plain_text(payload.value("pred_text", ""));
    const auto pred_words = as_set(text::word_tokens(pred));
    const auto pred_numbers = as_set(text::number_tokens(pred));
    Json scores = Json::array();
    for (const auto& e : payload["elements"]) {
        const auto evidence = plain_text(e.value("evidence", ""));
        int score = coverage_score(coverage(as_set(text::word_tokens(evidence)), pred_words));
        const bool numbers_ok = coverage(as_set(text::number_tokens(evidence)), pred_numbers) == 1;
        if (!numbers_ok) score = std::min(score, 2);
        scores.push_back({{"element", e.value("element", "")},
                          {"score", score},
                          {"reasoning", numbers_ok ? "evidence wording coverage" : "reported numbers missing"}});
    }
    return {{"scores", scores}};
}

Json score_table(const Json& payload) {
    const auto gt = text::collapse_whitespace(payload.value("gt_table", ""));
    const auto pred = text::collapse_whitespace(payload.value("pred_table", ""));
    if (gt == pred) return {{"score", 5}, {"reasoning", "identical content"}};
    if (pred.empty()) return {{"score", 1}, {"reasoning", "generated table is empty"}};
    if (as_set(text::number_tokens(gt)) != as_set(text::number_tokens(pred))) {
        return {{"score", 2}, {"reasoning", "numerical accuracy: values differ from the reference"}};
    }
    if (as_set(text::word_tokens(gt)) == as_set(text::word_tokens(pred))) {
        return {{"score", 4}, {"reasoning", "same values and labels, different layout"}};
    }
    return {{"score", 3}, {"reasoning", "same values, different structure or labels"}};
}

Json match_tables(const Json& payload) {
    struct Cand {
        Rational sim;
        long long g;
        long long p;
    };
    std::vector<Cand> cands;
    for (const auto& g : payload["gt"]) {
        const auto gn = as_set(text::number_tokens(g.value("body", "")));
        for (const auto& p : payload["pred"]) {
            const auto sim = overlap(gn, as_set(text::number_tokens(p.value("body", ""))));
            if (sim >= Rational(1, 2)) cands.push_back({sim, g["index"].get<long long>(), p["index"].get<long long>()});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.sim > b.sim; });
    std::set<long long> used_g;
    std::set<long long> used_p;
    Json matches = Json::array();
    for (const auto& c : cands) {
        if (used_g.count(c.g) || used_p.count(c.p)) continue;
        used_g.insert(c.g);
        used_p.insert(c.p);
        matches.push_back({{"gt", c.g}, {"pred", c.p}});
    }
    return {{"matches", matches}};
}

/// Verdict for one claim sentence against reference text.
Json judge_claim(const std::string& claim, const StringSet& ref_numbers,
                 const std::vector<std::string>& ref_sentences) {
    const auto numbers = as_set(text::number_tokens(claim));
    if (coverage(numbers, ref_numbers) == 1) {
        return {{"claim", claim}, {"classification", "supported"}, {"severity", nullptr},
                {"evidence", "every reported number occurs in the reference"}};
    }
    const auto words = as_set(text::word_tokens(claim));
    for (const auto& s : ref_sentences) {
        if (overlap(words, as_set(text::word_tokens(s))) >= Rational(1, 2)) {
            return {{"claim", claim}, {"classification", "contradictory"}, {"severity", "major"},
                    {"evidence", "reference states: " + s}};
        }
    }
    return {{"claim", claim}, {"classification", "neutral"}, {"severity", nullptr},
            {"evidence", "no corresponding statement in the reference"}};
}

Json extract_claims(const Json& payload) {
    const auto ref = plain_text(payload.value("gt_text", ""));
    const auto ref_numbers = as_set(text::number_tokens(ref));
    const auto ref_sentences = prose_sentences(ref);
    Json claims = Json::array();
    for (const auto& s : prose_sentences(payload.value("pred_text", ""))) {
        if (text::number_tokens(s).empty()) continue;
        claims.push_back(judge_claim(s, ref_numbers, ref_sentences));
    }
    return {{"claims", claims}};
}

std::string overview(const Json& payload) {
    std::string source = payload.value("text", "");
    std::string title;
    if (const auto t = source.find("\\title{"); t != std::string::npos) {
        const auto close = source.find('}', t);
        if (close != std::string::npos) title = text::collapse_whitespace(source.substr(t + 7, close - t - 7));
    }
    // Only the document body reads as prose.
    if (const auto b = source.find("\\begin{document}"); b != std::string::npos) source = source.substr(b);
    for (const auto* stop : {"\\bibliography{", "\\appendix", "\\end{document}"}) {
        if (const auto e = source.find(stop); e != std::string::npos) source.resize(e);
    }
    const auto sentences = prose_sentences(source);
    const auto target = payload.value("min_chars", std::size_t{1500});
    std::vector<std::string> headings;
    for (const auto& h : payload["headings"]) headings.push_back(h.get<std::string>());
    std::string name = "Paper";
    const auto title_words = text::collapse_whitespace(plain_text(title));
    if (!title_words.empty()) {
        name = title_words.substr(0, title_words.find_first_of(" :"));
    } else if (!sentences.empty()) {
        const auto words = text::word_tokens(sentences.front());
        if (!words.empty()) name = words.front();
    }
    std::vector<std::string> bodies(headings.size());
    std::size_t total = 0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < headings.size(); ++i) {
        if (headings[i] == "## Title" && !title_words.empty()) {
            bodies[i] = title_words;
            total += title_words.size();
        }
    }
    // Deal sentences round-robin to the H2 sections until the length target is met.
    while (total < target && next < sentences.size()) {
        bool placed = false;
        for (std::size_t i = 0; i < headings.size() && next < sentences.size() && total < target; ++i) {
            if (headings[i].rfind("## ", 0) != 0 || (headings[i] == "## Title" && !title_words.empty())) continue;
            bodies[i] += sentences[next] + " ";
            total += sentences[next].size() + 1;
            ++next;
            placed = true;
        }
        if (!placed) break;
    }
    std::string out = "# " + name + ": Research Overview\n";
    for (std::size_t i = 0; i < headings.size(); ++i) {
        out += "\n" + headings[i] + "\n";
        if (!bodies[i].empty()) out += text::trim(bodies[i]) + "\n";
    }
    return out;
}

}  // namespace

namespace judge {

BackendReply HeuristicJudge::complete(const JudgeRequest& request) {
    const auto& p = request.payload;
    const auto& tag = request.task_tag;
    if (tag == "classify_section") return ok(classify(p));
    if (tag == "rubric_extract") return ok(extract_rubric(p));
    if (tag == "rubric_score") return ok(score_rubric(p));
    if (tag == "figure_context") return ok({{"score", 3}, {"reasoning", "referenced outside its original section"}});
    if (tag == "table_score") return ok(score_table(p));
    if (tag == "table_match") return ok(match_tables(p));
    if (tag == "claims_extract") return ok(extract_claims(p));
    if (tag == "overview") return {ReplyStatus::Ok, overview(p), {}};
    return {ReplyStatus::Unavailable, {}, "heuristic judge has no rule for task '" + tag + "'"};
}

}  // namespace judge

namespace verifier {

judge::BackendReply HeuristicVerifier::run(const VerifierRequest& request, const fs::path& workdir) {
    std::string corpus;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(workdir)) {
        if (e.is_regular_file() && e.path().extension() == ".tex") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) corpus += text::read_file(f) + "\n";
    const auto ref = plain_text(corpus);
    const auto ref_numbers = as_set(text::number_tokens(ref));
    const auto ref_sentences = prose_sentences(ref);

    Json results = Json::array();
    for (const auto& c : request.payload.value("claims", Json::array())) {
        auto verdict = judge_claim(c.value("claim", ""), ref_numbers, ref_sentences);
        if (verdict["classification"] == "contradictory") {
            // Keep the stage-one severity when the conflict is confirmed.
            const auto sev = c.value("severity", "major");
            verdict["severity"] = sev == "minor" ? "minor" : "major";
        }
        verdict.erase("claim");
        results.push_back(verdict);
    }
    return {judge::ReplyStatus::Ok, Json{{"results", results}}.dump(), {}};
}

}  // namespace verifier

}  // namespace papereval
