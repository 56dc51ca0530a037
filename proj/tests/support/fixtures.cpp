#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <random>

#include "papereval/text_util.hpp"

#ifndef PAPEREVAL_FIXTURE_DIR
#define PAPEREVAL_FIXTURE_DIR "tests/fixtures"
#endif

namespace papereval::testing {

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("papereval-test-" + std::to_string(rd()) + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

namespace {

std::string join_sentences(const std::vector<std::string>& s) {
    std::string out;
    for (const auto& x : s) {
        if (!out.empty()) out += " ";
        out += x;
    }
    return out;
}

}  // namespace

SamplePaper sample_paper() {
    SamplePaper p;
    p.sentences[Category::Abstract] = {
        "Retrieval agents spend most of their budget on irrelevant passages.",
        "We introduce a sparse router that selects 12 passages per query instead of 100.",
        "The router improves exact match on NQ by 2.7 points.",
    };
    p.sentences[Category::Introduction] = {
        "Open-domain question answering requires finding evidence in large corpora.",
        "Dense retrievers return a fixed number of passages regardless of difficulty.",
        "This wastes computation on easy questions and starves hard ones.",
        "Our sparse router predicts how many passages each query needs.",
    };
    p.sentences[Category::RelatedWork] = {
        "Dense passage retrieval encodes questions and passages with two encoders.",
        "Fusion-in-decoder readers attend over all retrieved passages jointly.",
        "Adaptive computation has been studied for language model depth.",
    };
    p.sentences[Category::Method] = {
        "The router reads the question embedding and outputs a passage budget.",
        "The budget is chosen from a small set of candidate sizes.",
        "We train the router with a cost-sensitive objective on held-out questions.",
        "At inference the reader consumes only the selected passages.",
    };
    p.sentences[Category::Experiment] = {
        "We evaluate on Natural Questions and TriviaQA with the standard splits.",
        "The sparse router reaches 44.2 exact match on NQ compared with 41.5 for the baseline.",
        "On TriviaQA the router scores 60.3 against 57.9 for the baseline.",
    };
    p.sentences[Category::Conclusion] = {
        "Sparse routing lowers retrieval cost while improving accuracy.",
        "Future work will extend the router to multi-hop questions.",
    };
    p.cited_keys = {"lewis2020rag", "karpukhin2020dpr", "izacard2021fid", "kwiatkowski2019nq"};
    const auto& s = p.sentences;
    p.tex = "\\documentclass{article}\n"
            "\\usepackage{graphicx}\n"
            "\\usepackage{booktabs}\n"
            "% \\section{Commented Out}\n"
            "\\title{Sparse Routing for Retrieval Agents}\n"
            "\\author{A. Writer}\n"
            "\\begin{document}\n"
            "\\maketitle\n"
            "\\begin{abstract}\n" +
            join_sentences(s.at(Category::Abstract)) +
            "\n\\end{abstract}\n\n"
            "\\section{Introduction}\n" +
            join_sentences(s.at(Category::Introduction)) +
            "\nRetrieval-augmented generation~\\cite{lewis2020rag} motivates this line of work.\n\n"
            "\\section{Related Work}\n" +
            join_sentences(s.at(Category::RelatedWork)) +
            "\nWe build on~\\cite{karpukhin2020dpr,izacard2021fid}.\n\n"
            "\\section{Method}\n" +
            join_sentences(s.at(Category::Method)) +
            "\nFigure~\\ref{fig:arch} shows the router.\n"
            "\\begin{figure}[t]\n\\centering\n\\includegraphics[width=\\linewidth]{figures/arch.pdf}\n"
            "\\caption{Overview of the sparse router.}\n\\label{fig:arch}\n\\end{figure}\n\n"
            "\\section{Experiments}\n" +
            join_sentences(s.at(Category::Experiment)) +
            "\nTable~\\ref{tab:main} lists the main results on the benchmarks of~\\cite{kwiatkowski2019nq}.\n"
            "\\begin{table}[t]\n\\centering\n\\caption{Main results on open-domain benchmarks.}\n\\label{tab:main}\n"
            "\\begin{tabular}{lcc}\n\\toprule\nMethod & NQ & TQA \\\\\n\\midrule\n"
            "Baseline & 41.5 & 57.9 \\\\\nSparse router & 44.2 & 60.3 \\\\\n\\bottomrule\n\\end{tabular}\n"
            "\\end{table}\n\n"
            "\\section{Conclusion}\n" +
            join_sentences(s.at(Category::Conclusion)) +
            "\n\n\\bibliographystyle{plain}\n\\bibliography{refs}\n\\end{document}\n";
    p.bib = "@inproceedings{lewis2020rag,\n  title = {Retrieval-Augmented Generation for Knowledge-Intensive NLP Tasks},\n"
            "  author = {Lewis, Patrick},\n  year = {2020}\n}\n\n"
            "@inproceedings{karpukhin2020dpr,\n  title = {Dense Passage Retrieval for Open-Domain Question Answering},\n"
            "  author = {Karpukhin, Vladimir},\n  year = {2020}\n}\n\n"
            "@inproceedings{izacard2021fid,\n  title = {Leveraging Passage Retrieval with Generative Models},\n"
            "  author = {Izacard, Gautier},\n  year = {2021}\n}\n\n"
            "@article{kwiatkowski2019nq,\n  title = {Natural Questions: A Benchmark for Question Answering Research},\n"
            "  author = {Kwiatkowski, Tom},\n  year = {2019}\n}\n\n"
            "@misc{unused2018,\n  title = {An Entry Nobody Cites},\n  year = {2018}\n}\n";
    return p;
}

const std::map<Category, std::size_t>& sample_element_counts() {
    static const std::map<Category, std::size_t> counts = {
        {Category::Abstract, 2}, {Category::Introduction, 3}, {Category::RelatedWork, 2},
        {Category::Method, 4},   {Category::Experiment, 3},
    };
    return counts;
}

rubric::Rubric sample_rubric(const SamplePaper& paper) {
    rubric::Rubric r;
    r.paper_id = "sample";
    for (const auto& [cat, n] : sample_element_counts()) {
        const auto& sentences = paper.sentences.at(cat);
        for (std::size_t k = 0; k < n; ++k) {
            rubric::RubricElement e;
            e.section = cat;
            e.name = align::display_name(cat) + " point " + std::to_string(k + 1);
            e.importance = k == 0 ? rubric::Importance::High : rubric::Importance::Medium;
            e.description = "States: " + sentences[k];
            e.evidence = sentences[k];
            r.elements.push_back(e);
        }
    }
    return r;
}

std::string remove_section(const std::string& tex, const std::string& heading) {
    const auto start = tex.find("\\section{" + heading + "}");
    if (start == std::string::npos) return tex;
    auto end = tex.find("\\section{", start + 1);
    if (end == std::string::npos) end = tex.find("\\bibliographystyle", start);
    if (end == std::string::npos) end = tex.find("\\end{document}", start);
    return tex.substr(0, start) + tex.substr(end);
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
    return s;
}

LargePaper large_paper() {
    static const std::vector<std::string> headings = {
        "Introduction",         "Background",       "Related Work",      "Prior Work on Tool Use",
        "Preliminaries",        "Problem Formulation", "Method",         "Approach Details",
        "Training Method",      "Benchmark Design", "Dataset Construction", "Data Collection Protocol",
        "Experimental Setup",   "Main Results",     "Evaluation Protocol", "Error Analysis",
        "Ablation Studies",     "Discussion",       "Limitations",       "Conclusion",
    };
    static const std::vector<std::string> topics = {
        "planner", "retriever", "verifier", "executor", "memory", "critic", "scheduler", "parser",
        "ranker",  "encoder",   "decoder",  "indexer",  "router", "cache",  "monitor",   "tracker",
        "sampler", "reviewer",  "auditor",  "archivist",
    };
    // Abstract plus the seventeen scored sections carry the claims.
    constexpr std::size_t kScoredSlots = 18;
    constexpr std::size_t kClaims = 40;
    constexpr std::size_t kContradicted = 4;
    std::vector<std::vector<std::string>> gt_claims(kScoredSlots);
    std::vector<std::vector<std::string>> pred_claims(kScoredSlots);
    for (std::size_t i = 0; i < kClaims; ++i) {
        const auto slot = i % kScoredSlots;
        const auto value = std::to_string(30 + i) + "." + std::to_string(i % 10);
        const auto other = std::to_string(130 + i) + "." + std::to_string((i + 3) % 10);
        const auto& topic = topics[i % topics.size()];
        auto sentence = [&](const std::string& v) {
            return "Configuration " + std::to_string(i + 1) + " of the " + topic + " reaches an accuracy of " + v +
                   " percent on the held-out split.";
        };
        gt_claims[slot].push_back(sentence(value));
        pred_claims[slot].push_back(i % 10 == 7 && i / 10 < kContradicted ? sentence(other) : sentence(value));
    }

    auto filler = [&](std::size_t s) {
        std::string out;
        const auto& t = topics[s % topics.size()];
        static const std::vector<std::string> stages = {"first", "second", "third", "fourth",
                                                        "fifth", "sixth", "seventh", "eighth"};
        for (const auto& st : stages) {
            out += "The " + t + " component handles the " + st + " stage of this part by exchanging structured "
                   "messages with its neighbours. ";
        }
        return out;
    };

    // section index -> assets placed there
    std::map<std::size_t, std::vector<int>> table_at = {{9, {1}}, {13, {2, 3}}, {15, {4}}, {16, {5, 6}}};
    std::map<std::size_t, std::vector<int>> figure_at = {{0, {1}}, {6, {2}}, {7, {3}}, {9, {4}}, {13, {5}}};

    auto topics_word = [](int n) { return topics[static_cast<std::size_t>(n) % topics.size()]; };
    auto table_tex = [&](int t, bool pred) {
        const auto label = pred && t == 3 ? std::string("tab:renamed3") : "tab:t" + std::to_string(t);
        std::string body = "\\begin{tabular}{lcc}\n\\toprule\nVariant & Dev & Test \\\\\n\\midrule\n";
        for (int r = 0; r < 3; ++r) {
            body += "Row " + std::to_string(r + 1) + " & " + std::to_string(t * 10 + r) + ".5 & " +
                    std::to_string(t * 10 + r + 1) + ".25 \\\\\n";
        }
        body += "\\bottomrule\n\\end{tabular}\n";
        return "\\begin{table}[t]\n\\centering\n\\caption{Results for the " + topics_word(t) +
               " study across variants.}\n\\label{" + label + "}\n" + body + "\\end{table}\n";
    };
    auto figure_tex = [&](int f) {
        return "\\begin{figure}[t]\n\\centering\n\\includegraphics[width=\\linewidth]{figures/f" + std::to_string(f) +
               ".pdf}\n\\caption{Diagram of the " + topics_word(f) + " pipeline.}\n\\label{fig:f" +
               std::to_string(f) + "}\n\\end{figure}\n";
    };

    auto build = [&](const std::vector<std::vector<std::string>>& claims, bool pred) {
        std::string tex = "\\documentclass{article}\n\\usepackage{graphicx}\n\\usepackage{booktabs}\n"
                          "\\begin{document}\n\\begin{abstract}\nWe study a modular agent pipeline. " +
                          join_sentences(claims[0]) + "\n\\end{abstract}\n\n";
        std::size_t slot = 1;
        for (std::size_t s = 0; s < headings.size(); ++s) {
            tex += "\\section{" + headings[s] + "}\n" + filler(s) + "\n";
            if (s < 17) tex += join_sentences(claims[slot++]) + "\n";
            tex += "Prior systems~\\cite{ref" + std::to_string(s % 12) + "} motivate this part.\n";
            if (auto it = figure_at.find(s); it != figure_at.end()) {
                for (int f : it->second) {
                    // The generated paper discusses figure 4 in the results instead.
                    if (!(pred && f == 4)) tex += "Figure~\\ref{fig:f" + std::to_string(f) + "} illustrates this.\n";
                    tex += figure_tex(f);
                }
            }
            if (pred && s == 13) tex += "Figure~\\ref{fig:f4} is revisited here.\n";
            if (auto it = table_at.find(s); it != table_at.end()) {
                for (int t : it->second) {
                    tex += "Table~\\ref{" + std::string(pred && t == 3 ? "tab:renamed3" : "tab:t" + std::to_string(t)) +
                           "} reports the numbers.\n" + table_tex(t, pred);
                }
            }
            tex += "\n";
        }
        tex += "\\bibliographystyle{plain}\n\\bibliography{references}\n\\end{document}\n";
        return tex;
    };

    LargePaper p;
    p.gt = build(gt_claims, false);
    p.pred = build(pred_claims, true);
    for (int r = 0; r < 12; ++r) {
        p.bib += "@article{ref" + std::to_string(r) + ",\n  title = {Reference Work Number " + std::to_string(r) +
                 "},\n  year = {20" + std::to_string(10 + r) + "}\n}\n\n";
    }
    p.claims = kClaims;
    p.contradicted = kContradicted;
    return p;
}

void write_bundle(const fs::path& dir, const std::string& gt_tex, const std::string& bib,
                  const std::optional<rubric::Rubric>& rubric) {
    fs::create_directories(dir);
    text::write_file(dir / "gt_main.tex", gt_tex);
    text::write_file(dir / "references.bib", bib);
    if (rubric) rubric::save_rubric(*rubric, dir / "rubric.json");
}

judge::GatewayConfig fast_gateway(std::size_t max_in_flight) {
    judge::GatewayConfig c;
    c.max_in_flight = max_in_flight;
    c.backoff_base = std::chrono::milliseconds(1);
    c.backoff_max = std::chrono::milliseconds(4);
    return c;
}

Judges heuristic_judges(std::shared_ptr<judge::Cassette> cassette) {
    Judges j;
    j.cassette = cassette ? cassette : std::make_shared<judge::Cassette>(judge::CassetteMode::Passthrough);
    j.judge = std::make_unique<judge::JudgeGateway>(std::make_shared<judge::HeuristicJudge>(), j.cassette,
                                                    fast_gateway());
    j.verifier = std::make_unique<verifier::VerifierGateway>(std::make_shared<verifier::HeuristicVerifier>(),
                                                             j.cassette);
    return j;
}

Judges scripted_judges(judge::ScriptedBackend::Handler judge_handler,
                       verifier::ScriptedVerifier::Handler verifier_handler) {
    Judges j;
    j.cassette = std::make_shared<judge::Cassette>(judge::CassetteMode::Passthrough);
    j.judge = std::make_unique<judge::JudgeGateway>(std::make_shared<judge::ScriptedBackend>(std::move(judge_handler)),
                                                    j.cassette, fast_gateway());
    if (!verifier_handler) {
        verifier_handler = [](const verifier::VerifierRequest&, const fs::path&) {
            return judge::BackendReply{judge::ReplyStatus::Unavailable, {}, "no verifier scripted"};
        };
    }
    j.verifier = std::make_unique<verifier::VerifierGateway>(
        std::make_shared<verifier::ScriptedVerifier>(std::move(verifier_handler)), j.cassette);
    return j;
}

judge::BackendReply reply(const Json& body) { return {judge::ReplyStatus::Ok, body.dump(), {}}; }

fs::path fixture_dir() { return PAPEREVAL_FIXTURE_DIR; }

}  // namespace papereval::testing
