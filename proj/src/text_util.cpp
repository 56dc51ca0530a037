#include "papereval/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace papereval {

std::string format_fixed(const Rational& value, int decimals) {
    std::int64_t scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    std::int64_t num = value.numerator();
    const std::int64_t den = value.denominator();
    const bool negative = num < 0;
    if (negative) num = -num;
    // Round half away from zero: floor((2*num*scale + den) / (2*den)).
    const __int128 scaled = static_cast<__int128>(num) * scale * 2 + den;
    const auto q = static_cast<std::int64_t>(scaled / (static_cast<__int128>(den) * 2));
    std::string out = negative && q != 0 ? "-" : "";
    out += std::to_string(q / scale);
    if (decimals > 0) {
        std::string frac = std::to_string(q % scale);
        out += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
    }
    return out;
}

std::string format_exact(const Rational& value) {
    return std::to_string(value.numerator()) + "/" + std::to_string(value.denominator());
}

Rational parse_exact(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(text));
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    } catch (const std::exception&) {
        throw Error("invalid rational value: '" + text + "'");
    }
}

namespace text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct_ascii(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    return to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

std::string normalize_heading(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (is_punct_ascii(c)) c = ' ';
    }
    return collapse_whitespace(to_lower(out));
}

std::vector<std::string> caption_tokens(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s) {
        if (!is_punct_ascii(c)) cleaned.push_back(c);
    }
    std::vector<std::string> tokens;
    std::istringstream in(to_lower(cleaned));
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

Rational token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::set<std::string> sa(a.begin(), a.end());
    const std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    if (uni == 0) return Rational(0);
    return Rational(static_cast<std::int64_t>(inter), static_cast<std::int64_t>(uni));
}

std::string utf8_prefix(std::string_view s, std::size_t max_chars) {
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < s.size() && chars < max_chars) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if (c >= 0xF0) len = 4;
        else if (c >= 0xE0) len = 3;
        else if (c >= 0xC0) len = 2;
        i = std::min(s.size(), i + len);
        ++chars;
    }
    return std::string(s.substr(0, i));
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) lines.emplace_back(s.substr(start));
            break;
        }
        std::string line(s.substr(start, nl - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + path.string());
}

std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto name = tmpl.substr(i + 1, close - i - 1);
                auto it = std::find_if(values.begin(), values.end(),
                                       [&](const auto& kv) { return kv.first == name; });
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        current.push_back(c);
        const bool terminal = c == '.' || c == '!' || c == '?';
        const bool at_break = i + 1 == s.size() || is_space(s[i + 1]);
        // "e.g." / "i.e." / decimal points are not sentence ends.
        bool abbreviation = false;
        if (c == '.' && current.size() >= 3) {
            const auto tail = to_lower(std::string_view(current).substr(current.size() - 3));
            abbreviation = tail == "e.g" || tail == "i.e" || tail == ".g." || tail == ".e." ||
                           tail == "al." || tail == "vs.";
        }
        if (terminal && at_break && !abbreviation) {
            auto sentence = collapse_whitespace(current);
            if (!sentence.empty()) out.push_back(std::move(sentence));
            current.clear();
        } else if (c == '\n' && i + 1 < s.size() && s[i + 1] == '\n') {
            auto sentence = collapse_whitespace(current);
            if (!sentence.empty()) out.push_back(std::move(sentence));
            current.clear();
        }
    }
    auto sentence = collapse_whitespace(current);
    if (!sentence.empty()) out.push_back(std::move(sentence));
    return out;
}

std::vector<std::string> number_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        // Skip digits glued to letters (e.g. "CIFAR10", "fig2").
        const bool glued = i > 0 && std::isalpha(static_cast<unsigned char>(s[i - 1]));
        std::string num;
        while (i < s.size()) {
            const char c = s[i];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                num.push_back(c);
                ++i;
            } else if ((c == '.' || c == ',') && i + 1 < s.size() &&
                       std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
                if (c == '.') num.push_back('.');
                ++i;
            } else {
                break;
            }
        }
        if (!glued) out.push_back(num);
    }
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace text
}  // namespace papereval
