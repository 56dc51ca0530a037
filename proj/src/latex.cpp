#include "papereval/latex.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "papereval/text_util.hpp"

namespace papereval::latex {

namespace {

constexpr std::array kVerbatimEnvs = {"verbatim", "verbatim*", "Verbatim", "lstlisting",
                                      "minted", "comment", "filecontents", "filecontents*"};
constexpr std::array kTableEnvs = {"table", "table*", "sidewaystable", "sidewaystable*", "longtable"};
constexpr std::array kTabularEnvs = {"tabular", "tabular*", "tabularx"};
constexpr std::array kFigureEnvs = {"figure", "figure*", "wrapfigure", "SCfigure"};
constexpr std::array kCiteCommands = {"cite",     "citep",        "citet",       "citealp",
                                      "citealt",  "citeauthor",   "citeyear",    "citeyearpar",
                                      "Cite",     "Citep",        "Citet",       "Citealp",
                                      "Citealt",  "Citeauthor",   "parencite",   "textcite",
                                      "autocite", "Parencite",    "Textcite",    "Autocite"};
constexpr std::array kRefCommands = {"ref",  "cref",  "Cref",     "autoref",  "pageref",
                                     "vref", "Vref",  "cpageref", "Cpageref", "subref",
                                     "eqref", "nameref", "hyperref"};
// Commands whose argument never contributes caption or heading text.
constexpr std::array kDroppedArgCommands = {"label", "ref",  "cref", "Cref", "autoref", "eqref",
                                            "cite",  "citep", "citet", "citealp", "pageref",
                                            "vspace", "hspace", "footnote", "index"};

template <std::size_t N>
bool in_list(const std::array<const char*, N>& list, std::string_view name) {
    return std::any_of(list.begin(), list.end(), [&](const char* s) { return name == s; });
}

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '@'; }

std::size_t skip_ws(std::string_view t, std::size_t i) {
    while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
    return i;
}

/// Reads a command name starting at a backslash. Returns the name ("" for a
/// control symbol) and the position just past it.
std::pair<std::string_view, std::size_t> read_command(std::string_view t, std::size_t i) {
    std::size_t j = i + 1;
    while (j < t.size() && is_letter(t[j])) ++j;
    return {t.substr(i + 1, j - i - 1), j};
}

/// Balanced group starting at t[i] == open. Returns [content_begin, content_end)
/// and the position after the closing delimiter.
struct Group {
    std::size_t content_begin = 0;
    std::size_t content_end = 0;
    std::size_t after = 0;
};

std::optional<Group> read_group(std::string_view t, std::size_t i, char open, char close) {
    if (i >= t.size() || t[i] != open) return std::nullopt;
    int depth = 0;
    for (std::size_t j = i; j < t.size(); ++j) {
        const char c = t[j];
        if (c == '\\') {
            ++j;
            continue;
        }
        if (open == '[' && c == '{') {
            // Brackets inside brace groups do not close the optional argument.
            auto inner = read_group(t, j, '{', '}');
            if (!inner) return std::nullopt;
            j = inner->after - 1;
            continue;
        }
        if (c == open) ++depth;
        if (c == close && --depth == 0) return Group{i + 1, j, j + 1};
    }
    return std::nullopt;
}

struct CommandArgs {
    bool star = false;
    std::optional<Group> required;
    std::size_t end = 0;
};

/// Parses `[*][opt]...{req}` following a command name ending at `i`.
CommandArgs read_args(std::string_view t, std::size_t i, int max_optional = 2) {
    CommandArgs args;
    if (i < t.size() && t[i] == '*') {
        args.star = true;
        ++i;
    }
    for (int k = 0; k < max_optional; ++k) {
        const auto j = skip_ws(t, i);
        auto opt = read_group(t, j, '[', ']');
        if (!opt) break;
        i = opt->after;
    }
    const auto j = skip_ws(t, i);
    args.required = read_group(t, j, '{', '}');
    args.end = args.required ? args.required->after : i;
    return args;
}

std::string_view slice(std::string_view t, std::size_t b, std::size_t e) { return t.substr(b, e - b); }

/// Finds the `\end{env}` matching a `\begin{env}` whose body starts at `from`.
/// Returns the position after `\end{env}`.
std::optional<std::size_t> find_env_end(std::string_view t, std::size_t from, std::string_view env) {
    const std::string begin_tok = "\\begin{" + std::string(env) + "}";
    const std::string end_tok = "\\end{" + std::string(env) + "}";
    int depth = 1;
    std::size_t i = from;
    while (i < t.size()) {
        const auto nb = t.find(begin_tok, i);
        const auto ne = t.find(end_tok, i);
        if (ne == std::string_view::npos) return std::nullopt;
        if (nb != std::string_view::npos && nb < ne) {
            ++depth;
            i = nb + begin_tok.size();
            continue;
        }
        if (--depth == 0) return ne + end_tok.size();
        i = ne + end_tok.size();
    }
    return std::nullopt;
}

struct EnvSpan {
    std::string name;
    std::size_t begin = 0;       // position of "\begin"
    std::size_t body_begin = 0;  // after "\begin{name}"
    std::size_t end = 0;         // after "\end{name}"
};

template <std::size_t N>
std::vector<EnvSpan> find_envs(std::string_view masked, std::size_t from, std::size_t to,
                               const std::array<const char*, N>& names) {
    std::vector<EnvSpan> out;
    std::size_t i = from;
    while (true) {
        const auto b = masked.find("\\begin{", i);
        if (b == std::string_view::npos || b >= to) break;
        const auto g = read_group(masked, b + 6, '{', '}');
        if (!g) {
            i = b + 7;
            continue;
        }
        const auto name = slice(masked, g->content_begin, g->content_end);
        if (!in_list(names, name)) {
            i = g->after;
            continue;
        }
        const auto end = find_env_end(masked, g->after, name);
        if (!end) {
            i = g->after;
            continue;
        }
        out.push_back(EnvSpan{std::string(name), b, g->after, std::min(*end, to)});
        i = *end;  // nested same-family environments stay inside this block
    }
    return out;
}

bool inside_any(const std::vector<EnvSpan>& spans, std::size_t pos) {
    return std::any_of(spans.begin(), spans.end(),
                       [&](const EnvSpan& s) { return pos >= s.begin && pos < s.end; });
}

/// Document body bounds: after \begin{document} up to \end{document}.
std::pair<std::size_t, std::size_t> body_bounds(std::string_view masked) {
    std::size_t start = 0;
    std::size_t end = masked.size();
    const auto b = masked.find("\\begin{document}");
    if (b != std::string_view::npos) start = b + std::string_view("\\begin{document}").size();
    const auto e = masked.find("\\end{document}", start);
    if (e != std::string_view::npos) end = e;
    return {start, end};
}

std::optional<std::string> first_command_arg(std::string_view masked, std::size_t from, std::size_t to,
                                             std::string_view command, std::size_t* arg_begin = nullptr,
                                             std::size_t* arg_end = nullptr) {
    const std::string tok = "\\" + std::string(command);
    std::size_t i = from;
    while (true) {
        const auto p = masked.find(tok, i);
        if (p == std::string_view::npos || p >= to) return std::nullopt;
        const auto after = p + tok.size();
        if (after < masked.size() && is_letter(masked[after])) {
            i = after;
            continue;
        }
        const auto args = read_args(masked, after);
        if (!args.required || args.required->after > to) return std::nullopt;
        if (arg_begin != nullptr) *arg_begin = args.required->content_begin;
        if (arg_end != nullptr) *arg_end = args.required->content_end;
        return std::string(slice(masked, args.required->content_begin, args.required->content_end));
    }
}

std::optional<std::string> valid_label(const std::optional<std::string>& raw, Diagnostics& diags,
                                       std::size_t offset) {
    if (!raw) return std::nullopt;
    auto label = text::trim(*raw);
    if (label.empty() || std::any_of(label.begin(), label.end(),
                                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
        add_diagnostic(diags, "invalid_label", "label '" + *raw + "' is not a valid label token", offset);
        return std::nullopt;
    }
    return label;
}

struct CaptionInfo {
    std::optional<std::string> caption;
    std::optional<std::string> first_line;
};

CaptionInfo read_caption(std::string_view masked, std::size_t from, std::size_t to) {
    CaptionInfo info;
    std::size_t b = 0;
    std::size_t e = 0;
    auto raw = first_command_arg(masked, from, to, "caption", &b, &e);
    if (!raw) return info;
    info.caption = flatten_caption(*raw);
    const auto lines = text::split_lines(*raw);
    for (const auto& line : lines) {
        auto flat = flatten_caption(line);
        if (!flat.empty()) {
            info.first_line = flat;
            break;
        }
    }
    return info;
}

void check_environment_balance(const std::string& masked, std::size_t from, std::size_t to,
                               LatexDocument& doc) {
    std::vector<std::pair<std::string, std::size_t>> stack;
    std::size_t i = from;
    while (i < to) {
        const auto p = masked.find('\\', i);
        if (p == std::string::npos || p >= to) break;
        const auto [name, after] = read_command(masked, p);
        if (name != "begin" && name != "end") {
            i = std::max(after, p + 2);
            continue;
        }
        const auto g = read_group(masked, skip_ws(masked, after), '{', '}');
        if (!g) {
            i = after;
            continue;
        }
        std::string env(slice(masked, g->content_begin, g->content_end));
        if (name == "begin") {
            stack.emplace_back(env, p);
        } else {
            auto it = std::find_if(stack.rbegin(), stack.rend(), [&](const auto& e) { return e.first == env; });
            if (it == stack.rend()) {
                add_diagnostic(doc.diagnostics, "unbalanced_environment",
                               "\\end{" + env + "} without matching \\begin", p);
                doc.malformed = true;
            } else {
                // Everything opened after the match was never closed.
                for (auto open = stack.rbegin(); open != it; ++open) {
                    add_diagnostic(doc.diagnostics, "unbalanced_environment",
                                   "environment '" + open->first + "' is never closed", open->second);
                    doc.malformed = true;
                }
                stack.erase(std::next(it).base(), stack.end());
            }
        }
        i = g->after;
    }
    for (const auto& [env, offset] : stack) {
        add_diagnostic(doc.diagnostics, "unbalanced_environment",
                       "environment '" + env + "' is never closed", offset);
        doc.malformed = true;
    }
}

enum class EventKind { Section, Abstract, Terminator, Appendix };

struct Event {
    EventKind kind;
    std::size_t pos = 0;
    std::size_t heading_end = 0;  // Section: end of heading command; Abstract: body begin
    std::size_t env_end = 0;      // Abstract only: position after \end{abstract}
    std::size_t body_end = 0;     // Abstract only: position of \end{abstract}
    int depth = 1;
    bool star = false;
    std::string heading;
};

Event make_event(EventKind kind, std::size_t pos) {
    Event e;
    e.kind = kind;
    e.pos = pos;
    return e;
}

void scan_sections(LatexDocument& doc) {
    const std::string_view masked = doc.masked_text;
    const auto [start, end] = body_bounds(masked);
    std::vector<Event> events;

    std::size_t i = start;
    while (i < end) {
        const auto p = masked.find('\\', i);
        if (p == std::string_view::npos || p >= end) break;
        const auto [name, after] = read_command(masked, p);
        if (name.empty()) {
            i = p + 2;
            continue;
        }
        int depth = 0;
        if (name == "section") depth = 1;
        else if (name == "subsection") depth = 2;
        else if (name == "subsubsection") depth = 3;

        if (depth > 0) {
            const auto args = read_args(masked, after, 1);
            if (!args.required) {
                add_diagnostic(doc.diagnostics, "malformed_heading",
                               "\\" + std::string(name) + " without a braced title", p);
                i = after;
                continue;
            }
            auto heading = text::collapse_whitespace(flatten_caption(
                slice(masked, args.required->content_begin, args.required->content_end)));
            if (heading.empty()) {
                add_diagnostic(doc.diagnostics, "empty_heading",
                               "\\" + std::string(name) + " with an empty title ignored", p);
                i = args.end;
                continue;
            }
            events.push_back(Event{EventKind::Section, p, args.end, 0, 0, depth, args.star, std::move(heading)});
            i = args.end;
            continue;
        }
        if (name == "begin") {
            const auto g = read_group(masked, skip_ws(masked, after), '{', '}');
            if (g) {
                const auto env = slice(masked, g->content_begin, g->content_end);
                if (env == "abstract") {
                    const auto env_end = find_env_end(masked, g->after, "abstract");
                    Event e{EventKind::Abstract, p, g->after, 0, 0, 1, false, "Abstract"};
                    if (env_end) {
                        e.env_end = std::min(*env_end, end);
                        e.body_end = *env_end - std::string_view("\\end{abstract}").size();
                    } else {
                        add_diagnostic(doc.diagnostics, "unbalanced_environment",
                                       "abstract environment is never closed", p);
                    }
                    events.push_back(std::move(e));
                    i = env_end ? *env_end : g->after;
                    continue;
                }
                if (env == "thebibliography") {
                    events.push_back(make_event(EventKind::Terminator, p));
                }
                i = g->after;
                continue;
            }
        }
        if (name == "bibliography" || name == "printbibliography") {
            events.push_back(make_event(EventKind::Terminator, p));
        } else if (name == "appendix") {
            events.push_back(make_event(EventKind::Appendix, p));
        }
        i = after;
    }

    bool appendix = false;
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& e = events[k];
        const std::size_t next = k + 1 < events.size() ? events[k + 1].pos : end;
        if (e.kind == EventKind::Appendix) {
            appendix = true;
            continue;
        }
        if (e.kind == EventKind::Terminator) continue;
        RawSection s;
        s.heading = e.heading;
        s.depth = e.depth;
        s.starred = e.star;
        s.in_appendix = appendix;
        if (e.kind == EventKind::Abstract) {
            s.is_abstract_env = true;
            const std::size_t range_end = e.env_end != 0 ? std::min(e.env_end, next) : next;
            const std::size_t body_end = e.env_end != 0 ? std::min(e.body_end, range_end) : range_end;
            s.byte_range = {e.pos, range_end};
            s.heading_range = {e.pos, e.heading_end};
            s.body = doc.raw_text.substr(e.heading_end, body_end - e.heading_end);
        } else {
            s.byte_range = {e.pos, next};
            s.heading_range = {e.pos, e.heading_end};
            s.body = doc.raw_text.substr(e.heading_end, next - e.heading_end);
        }
        doc.sections.push_back(std::move(s));
    }
}

void scan_refs(LatexDocument& doc) {
    const std::string_view masked = doc.masked_text;
    const auto [start, end] = body_bounds(masked);
    std::size_t i = start;
    while (i < end) {
        const auto p = masked.find('\\', i);
        if (p == std::string_view::npos || p >= end) break;
        const auto [name, after] = read_command(masked, p);
        if (name.empty() || !in_list(kRefCommands, name)) {
            i = std::max(after, p + 2);
            continue;
        }
        const auto args = read_args(masked, after, 1);
        if (args.required) {
            std::size_t k = args.required->content_begin;
            while (k <= args.required->content_end) {
                auto comma = masked.find(',', k);
                if (comma == std::string_view::npos || comma > args.required->content_end) {
                    comma = args.required->content_end;
                }
                auto label = text::trim(slice(masked, k, comma));
                if (!label.empty()) doc.refs.push_back(LabelRef{label, p});
                k = comma + 1;
            }
        }
        i = args.end > after ? args.end : after;
    }
}

}  // namespace

std::optional<std::size_t> LatexDocument::section_at(std::size_t offset) const {
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (sections[i].byte_range.contains(offset)) return i;
    }
    return std::nullopt;
}

std::string mask_comments_and_verbatim(std::string_view source) {
    std::string out(source);
    auto blank = [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e && k < out.size(); ++k) {
            if (out[k] != '\n') out[k] = ' ';
        }
    };
    std::size_t i = 0;
    while (i < source.size()) {
        const char c = source[i];
        if (c == '%') {
            auto nl = source.find('\n', i);
            if (nl == std::string_view::npos) nl = source.size();
            blank(i, nl);
            i = nl;
            continue;
        }
        if (c != '\\') {
            ++i;
            continue;
        }
        const auto [name, after] = read_command(source, i);
        if (name.empty()) {
            i += 2;  // control symbol such as \% or \\ .
            continue;
        }
        if (name == "verb") {
            std::size_t d = after;
            if (d < source.size() && source[d] == '*') ++d;
            if (d < source.size() && !std::isspace(static_cast<unsigned char>(source[d]))) {
                const char delim = source[d];
                auto close = source.find(delim, d + 1);
                const auto nl = source.find('\n', d + 1);
                if (close == std::string_view::npos || (nl != std::string_view::npos && nl < close)) {
                    close = nl == std::string_view::npos ? source.size() - 1 : nl - 1;
                }
                blank(i, close + 1);
                i = close + 1;
                continue;
            }
        }
        if (name == "begin") {
            const auto g = read_group(source, after, '{', '}');
            if (g) {
                const auto env = slice(source, g->content_begin, g->content_end);
                if (in_list(kVerbatimEnvs, env)) {
                    const std::string end_tok = "\\end{" + std::string(env) + "}";
                    auto e = source.find(end_tok, g->after);
                    const std::size_t stop = e == std::string_view::npos ? source.size() : e + end_tok.size();
                    blank(i, stop);
                    i = stop;
                    continue;
                }
            }
        }
        i = after;
    }
    return out;
}

std::string flatten_caption(std::string_view tex) {
    std::string out;
    std::size_t i = 0;
    while (i < tex.size()) {
        const char c = tex[i];
        if (c == '\\') {
            if (i + 1 >= tex.size()) break;
            const auto [name, after] = read_command(tex, i);
            if (name.empty()) {
                const char sym = tex[i + 1];
                if (sym == '\\' || sym == ',' || sym == ' ' || sym == ';' || sym == '!') {
                    out.push_back(' ');
                } else if (std::string_view("%&_$#{}").find(sym) != std::string_view::npos) {
                    out.push_back(sym);
                }
                i += 2;
                continue;
            }
            // Collect the brace arguments that directly follow.
            std::size_t j = after;
            if (j < tex.size() && tex[j] == '*') ++j;
            while (true) {
                auto opt = read_group(tex, j, '[', ']');
                if (!opt) break;
                j = opt->after;
            }
            std::vector<Group> args;
            while (true) {
                auto g = read_group(tex, j, '{', '}');
                if (!g) break;
                args.push_back(*g);
                j = g->after;
            }
            if (!args.empty() && !in_list(kDroppedArgCommands, name)) {
                const auto& last = args.back();
                out += flatten_caption(slice(tex, last.content_begin, last.content_end));
            }
            i = j;
            continue;
        }
        if (c == '{' || c == '}' || c == '$') {
            ++i;
            continue;
        }
        out.push_back(c == '~' ? ' ' : c);
        ++i;
    }
    return text::collapse_whitespace(out);
}

std::string normalize_asset_path(std::string_view path) {
    std::string p = text::trim(path);
    std::replace(p.begin(), p.end(), '\\', '/');
    while (p.rfind("./", 0) == 0) p.erase(0, 2);
    return p;
}

std::string asset_key(std::string_view path) {
    const fs::path p(normalize_asset_path(path));
    auto stem = p.filename().string();
    static constexpr std::array kExts = {".pdf", ".png", ".jpg", ".jpeg", ".eps", ".svg", ".gif", ".tif", ".tiff"};
    const auto lower = text::to_lower(stem);
    for (const char* ext : kExts) {
        const std::string_view e(ext);
        if (lower.size() > e.size() && lower.compare(lower.size() - e.size(), e.size(), e) == 0) {
            stem.resize(stem.size() - e.size());
            break;
        }
    }
    return text::to_lower(stem);
}

CiteScan extract_cite_keys(const LatexDocument& doc) {
    CiteScan scan;
    const std::string_view masked = doc.masked_text;
    const auto [start, end] = body_bounds(masked);
    std::size_t i = start;
    while (i < end) {
        const auto p = masked.find('\\', i);
        if (p == std::string_view::npos || p >= end) break;
        const auto [name, after] = read_command(masked, p);
        if (name.empty() || !in_list(kCiteCommands, name)) {
            i = std::max(after, p + 2);
            continue;
        }
        const auto args = read_args(masked, after, 2);
        if (!args.required) {
            ++scan.malformed;
            i = after;
            continue;
        }
        std::size_t k = args.required->content_begin;
        const std::size_t stop = args.required->content_end;
        while (k <= stop) {
            auto comma = masked.find(',', k);
            if (comma == std::string_view::npos || comma > stop) comma = stop;
            const auto piece = slice(masked, k, comma);
            const auto first = piece.find_first_not_of(" \t\r\n");
            if (first == std::string_view::npos) {
                ++scan.malformed;
            } else {
                scan.keys.push_back(CiteKey{text::trim(piece), k + first});
            }
            k = comma + 1;
        }
        i = args.end;
    }
    return scan;
}

std::vector<TableBlock> extract_tables(const LatexDocument& doc) {
    const std::string_view masked = doc.masked_text;
    const auto [start, end] = body_bounds(masked);
    Diagnostics scratch;
    std::vector<TableBlock> out;

    const auto tables = find_envs(masked, start, end, kTableEnvs);
    const auto figures = find_envs(masked, start, end, kFigureEnvs);
    auto make_block = [&](const EnvSpan& span, std::string environment) {
        TableBlock block;
        block.environment = std::move(environment);
        block.byte_range = {span.begin, span.end};
        block.body_tex = doc.raw_text.substr(span.begin, span.end - span.begin);
        block.label = valid_label(first_command_arg(masked, span.body_begin, span.end, "label"), scratch, span.begin);
        auto cap = read_caption(masked, span.body_begin, span.end);
        block.caption = cap.caption;
        block.caption_first_line = cap.first_line;
        return block;
    };
    for (const auto& span : tables) out.push_back(make_block(span, span.name));
    for (const auto& span : find_envs(masked, start, end, kTabularEnvs)) {
        if (inside_any(tables, span.begin) || inside_any(figures, span.begin)) continue;
        out.push_back(make_block(span, "tabular"));
    }
    std::sort(out.begin(), out.end(),
              [](const TableBlock& a, const TableBlock& b) { return a.byte_range.begin < b.byte_range.begin; });
    return out;
}

std::vector<FigureBlock> extract_figures(const LatexDocument& doc) {
    const std::string_view masked = doc.masked_text;
    const auto [start, end] = body_bounds(masked);
    Diagnostics scratch;
    std::vector<FigureBlock> out;

    const auto figures = find_envs(masked, start, end, kFigureEnvs);
    const auto tables = find_envs(masked, start, end, kTableEnvs);

    auto graphics_in = [&](std::size_t from, std::size_t to) {
        std::vector<std::pair<std::size_t, std::string>> found;
        std::size_t i = from;
        while (true) {
            const auto p = masked.find("\\includegraphics", i);
            if (p == std::string_view::npos || p >= to) break;
            const auto after = p + std::string_view("\\includegraphics").size();
            const auto args = read_args(masked, after, 1);
            if (args.required) {
                auto path = normalize_asset_path(
                    slice(masked, args.required->content_begin, args.required->content_end));
                if (!path.empty()) found.emplace_back(p, path);
            }
            i = std::max(after, args.end);
        }
        return found;
    };

    for (const auto& span : figures) {
        FigureBlock block;
        block.environment = span.name;
        block.byte_range = {span.begin, span.end};
        for (auto& [pos, path] : graphics_in(span.body_begin, span.end)) block.asset_paths.push_back(path);
        block.label = valid_label(first_command_arg(masked, span.body_begin, span.end, "label"), scratch, span.begin);
        auto cap = read_caption(masked, span.body_begin, span.end);
        block.caption = cap.caption;
        block.caption_first_line = cap.first_line;
        out.push_back(std::move(block));
    }
    // Graphics included outside any float still count as figures.
    for (auto& [pos, path] : graphics_in(start, end)) {
        if (inside_any(figures, pos) || inside_any(tables, pos)) continue;
        FigureBlock block;
        block.environment = "includegraphics";
        const auto args = read_args(masked, pos + std::string_view("\\includegraphics").size(), 1);
        block.byte_range = {pos, args.end};
        block.asset_paths.push_back(path);
        out.push_back(std::move(block));
    }
    std::sort(out.begin(), out.end(),
              [](const FigureBlock& a, const FigureBlock& b) { return a.byte_range.begin < b.byte_range.begin; });
    return out;
}

LatexDocument parse_document(std::string source, fs::path source_path) {
    LatexDocument doc;
    doc.source_path = std::move(source_path);
    doc.raw_text = std::move(source);
    doc.masked_text = mask_comments_and_verbatim(doc.raw_text);

    const auto [start, end] = body_bounds(doc.masked_text);
    check_environment_balance(doc.masked_text, start, end, doc);
    scan_sections(doc);
    scan_refs(doc);

    auto cites = extract_cite_keys(doc);
    doc.cite_keys = std::move(cites.keys);
    doc.malformed_cites = cites.malformed;
    if (cites.malformed > 0) {
        add_diagnostic(doc.diagnostics, "malformed_cite",
                       std::to_string(cites.malformed) + " malformed citation command(s) skipped");
    }
    doc.tables = extract_tables(doc);
    doc.figures = extract_figures(doc);
    for (const auto& t : doc.tables) {
        valid_label(first_command_arg(doc.masked_text, t.byte_range.begin, t.byte_range.end, "label"),
                    doc.diagnostics, t.byte_range.begin);
    }
    if (doc.sections.empty()) {
        add_diagnostic(doc.diagnostics, "empty_document", "no sections and no abstract found");
    }
    return doc;
}

std::string inline_inputs(const std::string& source, const fs::path& base_dir, Diagnostics& diagnostics) {
    const std::string masked = mask_comments_and_verbatim(source);
    std::string out;
    std::size_t copied = 0;
    std::size_t i = 0;
    while (i < masked.size()) {
        const auto p = masked.find('\\', i);
        if (p == std::string::npos) break;
        const auto [name, after] = read_command(masked, p);
        if (name != "input" && name != "include") {
            i = std::max(after, p + 2);
            continue;
        }
        const auto args = read_args(masked, after, 0);
        if (!args.required) {
            i = after;
            continue;
        }
        const auto target = text::trim(slice(masked, args.required->content_begin, args.required->content_end));
        fs::path candidate = base_dir / target;
        if (!fs::is_regular_file(candidate)) candidate = base_dir / (target + ".tex");
        if (!fs::is_regular_file(candidate)) {
            add_diagnostic(diagnostics, "missing_input", "cannot resolve \\" + std::string(name) + "{" + target + "}", p);
            i = args.end;
            continue;
        }
        const auto content = text::read_file(candidate);
        const auto inner_masked = mask_comments_and_verbatim(content);
        if (inner_masked.find("\\input{") != std::string::npos || inner_masked.find("\\include{") != std::string::npos) {
            add_diagnostic(diagnostics, "nested_input",
                           candidate.filename().string() + " has nested \\input/\\include; left unexpanded", p);
        }
        out.append(source, copied, p - copied);
        out += content;
        copied = args.end;
        i = args.end;
    }
    out.append(source, copied, std::string::npos);
    return out;
}

LatexDocument load_document(const fs::path& path) {
    Diagnostics diags;
    auto source = text::read_file(path);
    auto inlined = inline_inputs(source, path.parent_path(), diags);
    auto doc = parse_document(std::move(inlined), path);
    doc.diagnostics.insert(doc.diagnostics.begin(), diags.begin(), diags.end());
    return doc;
}

}  // namespace papereval::latex
