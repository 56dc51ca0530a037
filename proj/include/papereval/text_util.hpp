#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "papereval/common.hpp"

namespace papereval::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses every run of whitespace to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Lowercases, replaces punctuation with spaces and collapses whitespace.
std::string normalize_heading(std::string_view s);

/// Lowercases, deletes punctuation and splits on whitespace.
std::vector<std::string> caption_tokens(std::string_view s);

/// |A ∩ B| / |A ∪ B| over token sets; 0 when both are empty.
Rational token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// First `max_chars` UTF-8 code points of `s`.
std::string utf8_prefix(std::string_view s, std::size_t max_chars);

std::vector<std::string> split_lines(std::string_view s);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);

/// Substitutes `{name}` placeholders present in `values`. Braces that do not
/// name a supplied placeholder are left untouched, so LaTeX survives.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values);

/// Splits prose into sentences on terminal punctuation followed by space.
std::vector<std::string> split_sentences(std::string_view s);

/// Decimal number tokens ("3.58", "2,003", "75") appearing in `s`,
/// thousands separators removed.
std::vector<std::string> number_tokens(std::string_view s);

/// Word tokens for overlap heuristics: lowercase alphanumerics.
std::vector<std::string> word_tokens(std::string_view s);

}  // namespace papereval::text
