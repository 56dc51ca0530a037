#include "papereval/bibtex.hpp"

#include <algorithm>
#include <cctype>

#include "papereval/text_util.hpp"

namespace papereval::bib {

namespace {

bool is_ident(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || std::string_view("_-:./+'").find(c) != std::string_view::npos;
}

std::size_t skip_ws(std::string_view s, std::size_t i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return i;
}

/// Position just past the delimiter matching s[i] ('{' or '('), honouring
/// nested braces. npos when unterminated.
std::size_t match_close(std::string_view s, std::size_t i) {
    const char open = s[i];
    const char close = open == '{' ? '}' : ')';
    int braces = 0;
    for (std::size_t j = i + 1; j < s.size(); ++j) {
        const char c = s[j];
        if (c == '\\') {
            ++j;
            continue;
        }
        if (c == '{') {
            ++braces;
        } else if (c == '}') {
            if (braces == 0) return close == '}' ? j + 1 : std::string_view::npos;
            --braces;
        } else if (c == close && braces == 0) {
            return j + 1;
        } else if (c == '@' && braces == 0 && open == '{') {
            // A new entry head at depth zero means this one never closed.
            std::size_t k = j + 1;
            while (k < s.size() && std::isalpha(static_cast<unsigned char>(s[k]))) ++k;
            if (k > j + 1 && k < s.size() && (s[k] == '{' || s[k] == '(')) return std::string_view::npos;
        }
    }
    return std::string_view::npos;
}

/// Reads one field value starting at i; returns the raw value and the
/// position after it.
std::pair<std::string, std::size_t> read_value(std::string_view body, std::size_t i) {
    std::string out;
    while (i < body.size()) {
        i = skip_ws(body, i);
        if (i >= body.size()) break;
        const char c = body[i];
        if (c == '{') {
            int depth = 0;
            std::size_t j = i;
            for (; j < body.size(); ++j) {
                if (body[j] == '\\') {
                    ++j;
                    continue;
                }
                if (body[j] == '{') ++depth;
                if (body[j] == '}' && --depth == 0) break;
            }
            out += std::string(body.substr(i + 1, std::min(j, body.size()) - i - 1));
            i = j + 1;
        } else if (c == '"') {
            int depth = 0;
            std::size_t j = i + 1;
            for (; j < body.size(); ++j) {
                if (body[j] == '\\') {
                    ++j;
                    continue;
                }
                if (body[j] == '{') ++depth;
                if (body[j] == '}') --depth;
                if (body[j] == '"' && depth == 0) break;
            }
            out += std::string(body.substr(i + 1, std::min(j, body.size()) - i - 1));
            i = j + 1;
        } else {
            std::size_t j = i;
            while (j < body.size() && body[j] != ',' && body[j] != '#' && !std::isspace(static_cast<unsigned char>(body[j]))) ++j;
            out += std::string(body.substr(i, j - i));  // number or @string macro name, kept unexpanded
            i = j;
        }
        i = skip_ws(body, i);
        if (i < body.size() && body[i] == '#') {
            ++i;
            continue;
        }
        break;
    }
    return {out, i};
}

}  // namespace

std::string plain_value(std::string_view value) {
    std::string out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        const char c = value[i];
        if (c == '{' || c == '}') continue;
        out.push_back(c);
    }
    return text::collapse_whitespace(out);
}

BibDatabase parse_bib(std::string source) {
    BibDatabase db;
    db.source = std::move(source);
    const std::string_view s = db.source;
    std::size_t i = 0;
    while (true) {
        const auto at = s.find('@', i);
        if (at == std::string_view::npos) break;
        std::size_t j = at + 1;
        while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
        const auto type = text::to_lower(s.substr(at + 1, j - at - 1));
        const auto open = skip_ws(s, j);
        if (type.empty() || open >= s.size() || (s[open] != '{' && s[open] != '(')) {
            i = at + 1;  // a stray '@' in free text between entries
            continue;
        }
        const auto end = match_close(s, open);
        if (type == "comment" || type == "preamble" || type == "string") {
            i = end == std::string_view::npos ? j : end;
            continue;
        }
        if (end == std::string_view::npos) {
            add_diagnostic(db.diagnostics, "malformed_entry", "@" + type + " entry is never closed", at);
            i = open + 1;
            continue;
        }
        const auto body = s.substr(open + 1, end - open - 2);
        const auto comma = body.find(',');
        const auto key = text::trim(body.substr(0, comma));
        if (key.empty() || !std::all_of(key.begin(), key.end(), is_ident)) {
            add_diagnostic(db.diagnostics, "malformed_entry", "@" + type + " entry without a valid key", at);
            i = end;
            continue;
        }
        BibEntry entry;
        entry.key = key;
        entry.entry_type = type;
        entry.begin = at;
        entry.end = end;
        entry.close = end - 1;
        std::size_t k = comma == std::string_view::npos ? body.size() : comma + 1;
        while (k < body.size()) {
            k = skip_ws(body, k);
            if (k >= body.size()) break;
            if (body[k] == ',') {
                ++k;
                continue;
            }
            std::size_t n = k;
            while (n < body.size() && is_ident(body[n])) ++n;
            const auto name = text::to_lower(body.substr(k, n - k));
            auto eq = skip_ws(body, n);
            if (name.empty() || eq >= body.size() || body[eq] != '=') {
                add_diagnostic(db.diagnostics, "malformed_field", "unparseable field in entry '" + key + "'", open + 1 + k);
                const auto next = body.find(',', k);
                k = next == std::string_view::npos ? body.size() : next + 1;
                continue;
            }
            auto [value, after] = read_value(body, eq + 1);
            entry.fields[name] = value;
            k = after;
        }
        if (auto it = entry.fields.find("abstract"); it != entry.fields.end()) entry.abstract = it->second;
        if (db.entries.count(key) != 0) {
            add_diagnostic(db.diagnostics, "duplicate_key", "duplicate key '" + key + "'; later entry kept", at);
        }
        db.entries[key] = std::move(entry);
        i = end;
    }
    return db;
}

BibDatabase load_bib(const fs::path& path) { return parse_bib(text::read_file(path)); }

}  // namespace papereval::bib
