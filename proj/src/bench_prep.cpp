#include "papereval/bench_prep.hpp"

#include <algorithm>
#include <atomic>
#include <set>

#include "papereval/parallel.hpp"
#include "papereval/text_util.hpp"

namespace papereval::prep {

namespace {

const std::vector<std::string> kImageExtensions = {".pdf", ".png", ".jpg", ".jpeg", ".eps", ".svg"};

std::string sanitize_stem(std::string_view s) {
    std::string out;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        out += (std::isalnum(u) || c == '_' || c == '-') ? c : '_';
    }
    return out;
}

/// Finds the argument of the first `\name{...}` in `masked`.
std::optional<std::string> command_argument(const std::string& masked, const std::string& raw, std::string_view name) {
    const std::string needle = "\\" + std::string(name);
    for (auto pos = masked.find(needle); pos != std::string::npos; pos = masked.find(needle, pos + 1)) {
        auto p = pos + needle.size();
        if (p < masked.size() && std::isalpha(static_cast<unsigned char>(masked[p]))) continue;
        while (p < masked.size() && std::isspace(static_cast<unsigned char>(masked[p]))) ++p;
        if (p >= masked.size() || masked[p] != '{') continue;
        const auto close = masked.find('}', p);
        if (close == std::string::npos) return std::nullopt;
        return raw.substr(p + 1, close - p - 1);
    }
    return std::nullopt;
}

std::size_t body_start(const latex::LatexDocument& doc) {
    constexpr std::string_view kBegin = "\\begin{document}";
    const auto p = doc.masked_text.find(kBegin);
    return p == std::string::npos ? 0 : p + kBegin.size();
}

std::string summary_line(const std::string& file, const std::optional<std::string>& first_line) {
    const auto caption = first_line ? text::trim(*first_line) : std::string();
    return caption.empty() ? file + ":" : file + ": " + caption;
}

std::vector<std::string> parse_summary_names(const fs::path& path) {
    std::vector<std::string> names;
    for (const auto& line : text::split_lines(text::read_file(path))) {
        const auto t = text::trim(line);
        if (t.empty()) continue;
        const auto colon = t.find(':');
        names.push_back(text::trim(colon == std::string::npos ? t : t.substr(0, colon)));
    }
    return names;
}

std::vector<std::string> directory_files(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void check_summary(const fs::path& summary, const fs::path& dir, std::vector<std::string>& failures) {
    const auto name = summary.filename().string();
    auto listed = parse_summary_names(summary);
    std::set<std::string> seen;
    for (const auto& n : listed) {
        if (!seen.insert(n).second) failures.push_back(name + " lists " + n + " twice");
    }
    const auto files = directory_files(dir);
    const std::set<std::string> present(files.begin(), files.end());
    for (const auto& n : seen) {
        if (present.count(n) == 0) failures.push_back(name + " lists " + n + " but " + dir.filename().string() + "/ has no such file");
    }
    for (const auto& f : present) {
        if (seen.count(f) == 0) failures.push_back(dir.filename().string() + "/" + f + " is missing from " + name);
    }
}

std::string sanitize_abstract(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '{' || c == '}') continue;
        out += c;
    }
    return text::collapse_whitespace(out);
}

std::string prompt_name(PaperKind kind, OverviewLength length) {
    return "overview_" + to_string(length) + "_" + to_string(kind);
}

std::string normalize_md_heading(std::string_view s) { return text::to_lower(text::collapse_whitespace(s)); }

fs::path locate_bib(const latex::LatexDocument& gt, const fs::path& source_dir) {
    std::vector<std::string> names;
    if (auto arg = command_argument(gt.masked_text, gt.raw_text, "bibliography")) {
        std::string cur;
        for (char c : *arg + ",") {
            if (c == ',') {
                if (!text::trim(cur).empty()) names.push_back(text::trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
    } else if (auto res = command_argument(gt.masked_text, gt.raw_text, "addbibresource")) {
        names.push_back(text::trim(*res));
    }
    for (auto n : names) {
        if (fs::path(n).extension() != ".bib") n += ".bib";
        const auto candidate = source_dir / n;
        if (fs::is_regular_file(candidate)) return candidate;
    }
    std::vector<fs::path> bibs;
    for (const auto& e : fs::directory_iterator(source_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".bib") bibs.push_back(e.path());
    }
    if (names.empty() && bibs.size() == 1) return bibs.front();
    const auto expected = names.empty() ? std::string("a .bib file") : names.front() + ".bib";
    throw BundleError("references.bib: bibliography source not found in " + source_dir.string() + " (expected " +
                      expected + ")");
}

void replace_directory(const fs::path& from, const fs::path& to) {
    fs::remove_all(to);
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive);
}

}  // namespace

PaperBundle PaperBundle::at(const fs::path& root) {
    PaperBundle b;
    b.root = root;
    b.gt_tex = root / layout::kGtTex;
    b.references_bib = root / layout::kBib;
    b.figures_dir = root / layout::kFigures;
    b.tables_dir = root / layout::kTables;
    if (fs::is_directory(root / layout::kCode)) b.code_dir = root / layout::kCode;
    b.template_tex = root / layout::kTemplate;
    b.figure_summary = root / layout::kFigureSummary;
    b.table_summary = root / layout::kTableSummary;
    b.research_overview = root / layout::kOverview;
    if (fs::is_regular_file(root / layout::kRubric)) b.rubric_json = root / layout::kRubric;
    return b;
}

std::vector<std::pair<int, std::string>> structural_headings(const latex::LatexDocument& doc) {
    std::vector<std::pair<int, std::string>> out;
    for (const auto& s : doc.sections) {
        if (s.in_appendix || s.is_abstract_env) continue;
        out.emplace_back(s.depth, s.heading);
    }
    return out;
}

std::string build_template(const latex::LatexDocument& gt) {
    if (gt.empty()) throw EmptyDocumentError("ground-truth document has no sections and no abstract");
    const auto start = body_start(gt);
    std::string out = gt.raw_text.substr(0, start);

    // Front matter stays (title block, \maketitle) minus any floats.
    const auto first = gt.sections.front().byte_range.begin;
    std::string front = gt.raw_text.substr(start, first - start);
    auto blank = [&](const latex::ByteRange& r) {
        if (r.begin >= start && r.end <= first) {
            for (std::size_t k = r.begin; k < r.end; ++k) {
                if (front[k - start] != '\n') front[k - start] = ' ';
            }
        }
    };
    for (const auto& t : gt.tables) blank(t.byte_range);
    for (const auto& f : gt.figures) blank(f.byte_range);
    std::string kept;
    for (const auto& line : text::split_lines(front)) {
        if (!text::trim(line).empty()) kept += text::trim(line) + "\n";
    }
    out += "\n" + kept + "\n";

    for (const auto& s : gt.sections) {
        if (s.in_appendix) continue;
        if (s.is_abstract_env) {
            out += "\\begin{abstract}\n\\end{abstract}\n\n";
        } else {
            out += gt.raw_text.substr(s.heading_range.begin, s.heading_range.end - s.heading_range.begin) + "\n\n";
        }
    }
    if (gt.masked_text.find("\\printbibliography") != std::string::npos) {
        out += "\\printbibliography\n\n";
    } else {
        if (auto style = command_argument(gt.masked_text, gt.raw_text, "bibliographystyle")) {
            out += "\\bibliographystyle{" + *style + "}\n";
        }
        out += "\\bibliography{references}\n\n";
    }
    out += "\\end{document}\n";
    return out;
}

std::string table_file_stem(const latex::TableBlock& table, std::size_t index) {
    if (table.label && !table.label->empty()) {
        const auto colon = table.label->rfind(':');
        const auto suffix = colon == std::string::npos ? *table.label : table.label->substr(colon + 1);
        if (!suffix.empty()) return "table_" + sanitize_stem(suffix);
    }
    return "table_" + std::to_string(index + 1);
}

AssetExtraction extract_assets(const latex::LatexDocument& gt, const fs::path& source_dir, const fs::path& bundle_root) {
    AssetExtraction out;
    const auto tables_dir = bundle_root / layout::kTables;
    const auto figures_dir = bundle_root / layout::kFigures;
    fs::remove_all(tables_dir);
    fs::remove_all(figures_dir);
    fs::create_directories(tables_dir);
    fs::create_directories(figures_dir);

    std::string table_summary;
    std::set<std::string> used;
    for (std::size_t i = 0; i < gt.tables.size(); ++i) {
        const auto& t = gt.tables[i];
        if (t.environment == "tabular") continue;  // bare tabulars belong to figures or inline layout
        auto stem = table_file_stem(t, i);
        if (used.count(stem)) stem += "_" + std::to_string(i + 1);
        used.insert(stem);
        const auto file = stem + ".tex";
        text::write_file(tables_dir / file, t.body_tex + "\n");
        out.table_files.push_back(file);
        table_summary += summary_line(file, t.caption_first_line) + "\n";
    }

    std::string figure_summary;
    std::set<std::string> copied;
    for (const auto& f : gt.figures) {
        for (const auto& asset : f.asset_paths) {
            std::optional<fs::path> found;
            const auto base = source_dir / asset;
            if (fs::is_regular_file(base)) {
                found = base;
            } else if (!fs::path(asset).has_extension()) {
                for (const auto& ext : kImageExtensions) {
                    auto candidate = base;
                    candidate += ext;
                    if (fs::is_regular_file(candidate)) {
                        found = candidate;
                        break;
                    }
                }
            }
            if (!found) {
                add_diagnostic(out.diagnostics, "missing_asset", "graphic not found in source: " + asset);
                continue;
            }
            const auto name = found->filename().string();
            if (!copied.insert(name).second) continue;
            fs::copy_file(*found, figures_dir / name, fs::copy_options::overwrite_existing);
            out.figure_files.push_back(name);
            figure_summary += summary_line(name, f.caption_first_line) + "\n";
        }
    }
    text::write_file(bundle_root / layout::kTableSummary, table_summary);
    text::write_file(bundle_root / layout::kFigureSummary, figure_summary);
    return out;
}

std::optional<std::string> MapResolver::lookup(const bib::BibEntry& entry) {
    if (auto it = abstracts_.find(entry.key); it != abstracts_.end()) return it->second;
    if (auto t = entry.fields.find("title"); t != entry.fields.end()) {
        if (auto it = abstracts_.find(text::to_lower(bib::plain_value(t->second))); it != abstracts_.end()) {
            return it->second;
        }
    }
    return std::nullopt;
}

AugmentResult augment_bib(const bib::BibDatabase& bib, AbstractResolver& resolver, std::size_t parallelism) {
    AugmentResult out;
    std::vector<const bib::BibEntry*> todo;
    for (const auto& [key, entry] : bib.entries) {
        if (!entry.abstract && entry.fields.count("abstract") == 0) todo.push_back(&entry);
    }
    std::atomic<bool> down{false};
    struct Lookup {
        std::optional<std::string> abstract;
        bool skipped = false;
        std::string error;
    };
    auto results = parallel_map<Lookup>(todo.size(), parallelism, [&](std::size_t i) {
        Lookup l;
        if (down) {
            l.skipped = true;
            return l;
        }
        try {
            l.abstract = resolver.lookup(*todo[i]);
        } catch (const ResolverUnavailable& e) {
            down = true;
            l.skipped = true;
            l.error = e.what();
        }
        return l;
    });

    std::map<std::size_t, std::string> inserts;  // close offset -> text
    for (std::size_t i = 0; i < todo.size(); ++i) {
        const auto& e = *todo[i];
        const auto& r = results[i];
        if (!r.error.empty()) {
            add_diagnostic(out.diagnostics, "resolver_unavailable",
                           resolver.id() + " unreachable; remaining entries left unchanged: " + r.error);
        }
        if (r.skipped) continue;
        const auto abstract = r.abstract ? sanitize_abstract(*r.abstract) : std::string();
        if (abstract.empty()) {
            add_diagnostic(out.diagnostics, "abstract_not_found", "no abstract for " + e.key);
            continue;
        }
        // Insert before the closing delimiter, after any trailing comma.
        std::size_t k = e.close;
        while (k > e.begin && std::isspace(static_cast<unsigned char>(bib.source[k - 1]))) --k;
        const bool comma = k > e.begin && bib.source[k - 1] == ',';
        // Existing whitespace before the delimiter is kept as the line break.
        inserts[k] = std::string(comma ? "" : ",") + "\n  abstract = {" + abstract + "}" + (comma ? "," : "") +
                     (k == e.close ? "\n" : "");
        ++out.augmented;
    }
    std::size_t pos = 0;
    for (const auto& [at, add] : inserts) {
        out.text.append(bib.source, pos, at - pos);
        out.text += add;
        pos = at;
    }
    out.text.append(bib.source, pos, std::string::npos);
    return out;
}

PaperKind parse_paper_kind(const std::string& s) {
    const auto v = text::to_lower(s);
    if (v == "method") return PaperKind::Method;
    if (v == "benchmark") return PaperKind::Benchmark;
    if (v == "both") return PaperKind::Both;
    throw ConfigError("paper kind must be method, benchmark or both: " + s);
}

OverviewLength parse_overview_length(const std::string& s) {
    const auto v = text::to_lower(s);
    if (v == "default") return OverviewLength::Default;
    if (v == "long") return OverviewLength::Long;
    throw ConfigError("overview length must be default or long: " + s);
}

std::string to_string(PaperKind k) {
    switch (k) {
        case PaperKind::Method: return "method";
        case PaperKind::Benchmark: return "benchmark";
        case PaperKind::Both: return "both";
    }
    return "method";
}

std::string to_string(OverviewLength l) { return l == OverviewLength::Long ? "long" : "default"; }

std::vector<std::string> overview_skeleton(PaperKind kind, OverviewLength length, const PromptLibrary& prompts) {
    std::vector<std::string> out;
    bool in_structure = false;
    for (const auto& line : text::split_lines(prompts.get(prompt_name(kind, length)))) {
        auto t = text::trim(line);
        if (t.rfind("Follow this structure", 0) == 0) {
            in_structure = true;
            continue;
        }
        if (!in_structure || t.empty() || t[0] != '#') continue;
        if (const auto paren = t.find('('); paren != std::string::npos) t = text::trim(t.substr(0, paren));
        out.push_back(text::collapse_whitespace(t));
    }
    if (out.empty() || out.front().rfind("# ", 0) != 0) {
        throw ConfigError("overview prompt " + prompt_name(kind, length) + " has no heading skeleton");
    }
    return out;
}

std::optional<std::string> check_overview(const std::string& markdown, const std::vector<std::string>& skeleton) {
    std::vector<std::string> h2;
    std::optional<std::string> first;
    for (const auto& line : text::split_lines(markdown)) {
        const auto t = text::trim(line);
        if (t.empty()) continue;
        if (!first) first = t;
        if (t.rfind("## ", 0) == 0) h2.push_back(normalize_md_heading(t));
    }
    if (!first || first->rfind("# ", 0) != 0) return "the overview must start with a '# ' title line";
    std::size_t cursor = 0;
    for (const auto& want_raw : skeleton) {
        if (want_raw.rfind("## ", 0) != 0) continue;
        const auto want = normalize_md_heading(want_raw);
        // Bracketed headings are placeholders; only their number is fixed.
        const auto bracket = want.find('[');
        const auto prefix = bracket == std::string::npos ? want : text::trim(want.substr(0, bracket));
        bool found = false;
        while (cursor < h2.size()) {
            const auto& have = h2[cursor++];
            if (have.rfind(prefix, 0) == 0) {
                found = true;
                break;
            }
        }
        if (!found) return "missing or out-of-order heading '" + want_raw + "'";
    }
    return std::nullopt;
}

std::pair<std::size_t, std::size_t> overview_length_bounds(OverviewLength length) {
    // Targets from the prompts, widened by 30% on both sides.
    return length == OverviewLength::Long ? std::pair<std::size_t, std::size_t>{2800, 10400}
                                          : std::pair<std::size_t, std::size_t>{1050, 3250};
}

std::string generate_overview(const std::string& gt_full_text, PaperKind kind, OverviewLength length,
                              judge::JudgeGateway& judge, Diagnostics& diagnostics, const PromptLibrary& prompts) {
    const auto skeleton = overview_skeleton(kind, length, prompts);
    Json headings = Json::array();
    for (std::size_t i = 1; i < skeleton.size(); ++i) headings.push_back(skeleton[i]);

    judge::JudgeRequest req;
    req.task_tag = "overview";
    req.system_prompt = prompts.get("overview_system");
    req.user_prompt = prompts.get(prompt_name(kind, length)) + "\n\n" + gt_full_text;
    req.payload = {{"headings", headings},
                   {"text", gt_full_text},
                   {"min_chars", length == OverviewLength::Long ? 4000 : 1500}};
    auto check = [&](const Json& parsed) { return check_overview(parsed.get<std::string>(), skeleton); };
    const auto resp = judge.submit(req, check);
    auto md = text::trim(resp.parsed.get<std::string>()) + "\n";
    const auto [lo, hi] = overview_length_bounds(length);
    if (md.size() < lo || md.size() > hi) {
        add_diagnostic(diagnostics, "overview_length",
                       "research overview has " + std::to_string(md.size()) + " characters; expected " +
                           std::to_string(lo) + "-" + std::to_string(hi));
    }
    return md;
}

ValidationResult validate(const fs::path& root) {
    ValidationResult v;
    const auto b = PaperBundle::at(root);
    for (const auto& f : {b.gt_tex, b.template_tex, b.references_bib, b.figure_summary, b.table_summary,
                          b.research_overview}) {
        if (!fs::is_regular_file(f)) v.failures.push_back("missing file " + f.filename().string());
    }
    for (const auto& d : {b.figures_dir, b.tables_dir}) {
        if (!fs::is_directory(d)) v.failures.push_back("missing directory " + d.filename().string() + "/");
    }
    if (fs::is_regular_file(b.gt_tex) && fs::is_regular_file(b.template_tex)) {
        const auto gt = structural_headings(latex::parse_document(text::read_file(b.gt_tex)));
        const auto tpl = structural_headings(latex::parse_document(text::read_file(b.template_tex)));
        if (gt != tpl) {
            std::size_t i = 0;
            while (i < gt.size() && i < tpl.size() && gt[i] == tpl[i]) ++i;
            v.failures.push_back("template.tex headings differ from gt_main.tex at heading " + std::to_string(i + 1) +
                                 " (" + std::to_string(tpl.size()) + " vs " + std::to_string(gt.size()) + " headings)");
        }
    }
    if (fs::is_regular_file(b.figure_summary) && fs::is_directory(b.figures_dir)) {
        check_summary(b.figure_summary, b.figures_dir, v.failures);
    }
    if (fs::is_regular_file(b.table_summary) && fs::is_directory(b.tables_dir)) {
        check_summary(b.table_summary, b.tables_dir, v.failures);
    }
    if (fs::is_regular_file(b.references_bib)) {
        const auto db = bib::load_bib(b.references_bib);
        for (const auto& d : db.diagnostics) {
            if (d.code == "malformed_entry") {
                v.failures.push_back("references.bib does not parse: " + d.message);
                break;
            }
        }
    }
    if (fs::is_regular_file(b.research_overview) && text::trim(text::read_file(b.research_overview)).empty()) {
        v.failures.push_back("research_overview.md is empty");
    }
    return v;
}

fs::path find_main_tex(const fs::path& source_dir) {
    if (!fs::is_directory(source_dir)) throw BundleError("source directory not found: " + source_dir.string());
    std::vector<fs::path> mains;
    for (const auto& e : fs::directory_iterator(source_dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".tex") continue;
        const auto masked = latex::mask_comments_and_verbatim(text::read_file(e.path()));
        if (masked.find("\\begin{document}") != std::string::npos) mains.push_back(e.path());
    }
    std::sort(mains.begin(), mains.end());
    if (mains.size() == 1) return mains.front();
    for (const auto& m : mains) {
        if (m.filename() == "main.tex") return m;
    }
    if (mains.empty()) throw BundleError("no .tex file with \\begin{document} in " + source_dir.string());
    throw BundleError("several candidate main files in " + source_dir.string() + "; pass one explicitly");
}

PrepResult prepare_bundle(const fs::path& source_dir, const fs::path& bundle_root, const PrepOptions& options) {
    PrepResult result;
    const auto main = options.main_tex.empty() ? find_main_tex(source_dir) : source_dir / options.main_tex;
    if (!fs::is_regular_file(main)) throw BundleError("main file not found: " + main.string());
    if (fs::exists(bundle_root) && fs::equivalent(fs::absolute(source_dir), fs::absolute(bundle_root))) {
        throw BundleError("bundle directory must differ from the source directory");
    }

    Diagnostics diags;
    const auto inlined = latex::inline_inputs(text::read_file(main), main.parent_path(), diags);
    const auto gt = latex::parse_document(inlined, bundle_root / layout::kGtTex);
    if (gt.empty()) throw EmptyDocumentError(main.filename().string() + " has no sections and no abstract");
    const auto bib_source = locate_bib(gt, source_dir);

    fs::create_directories(bundle_root);
    text::write_file(bundle_root / layout::kGtTex, inlined);
    text::write_file(bundle_root / layout::kTemplate, build_template(gt));

    auto assets = extract_assets(gt, source_dir, bundle_root);
    diags.insert(diags.end(), assets.diagnostics.begin(), assets.diagnostics.end());

    auto db = bib::load_bib(bib_source);
    diags.insert(diags.end(), db.diagnostics.begin(), db.diagnostics.end());
    std::string bib_text = db.source;
    if (options.resolver != nullptr) {
        auto aug = augment_bib(db, *options.resolver, options.parallelism);
        diags.insert(diags.end(), aug.diagnostics.begin(), aug.diagnostics.end());
        bib_text = std::move(aug.text);
    }
    text::write_file(bundle_root / layout::kBib, bib_text);

    for (const auto& e : fs::directory_iterator(source_dir)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".sty" || ext == ".cls" || ext == ".bst")) {
            fs::copy_file(e.path(), bundle_root / e.path().filename(), fs::copy_options::overwrite_existing);
        }
    }

    std::optional<fs::path> code = options.code_dir;
    if (!code && fs::is_directory(source_dir / layout::kCode)) code = source_dir / layout::kCode;
    if (code) {
        replace_directory(*code, bundle_root / layout::kCode);
        const auto readme = bundle_root / layout::kCode / "README.md";
        if (fs::is_regular_file(readme)) {
            for (const auto& line : text::split_lines(text::read_file(readme))) {
                const auto t = text::trim(line);
                if (t.empty() || t[0] != '#') continue;
                const auto h = text::normalize_heading(t);
                if (h == "abstract" || h == "introduction") {
                    add_diagnostic(diags, "readme_paper_sections",
                                   "code/README.md has a '" + t + "' heading; remove paper prose before release");
                }
            }
        }
    }

    const auto overview = bundle_root / layout::kOverview;
    if (!fs::exists(overview) || options.regenerate_overview) {
        if (options.judge != nullptr) {
            text::write_file(overview, generate_overview(inlined, options.kind, options.length, *options.judge, diags));
        } else {
            add_diagnostic(diags, "overview_skipped", "no judge configured; research_overview.md not generated");
        }
    }

    result.bundle = PaperBundle::at(bundle_root);
    result.validation = validate(bundle_root);
    result.diagnostics = std::move(diags);
    return result;
}

}  // namespace papereval::prep
