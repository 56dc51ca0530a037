#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "papereval/common.hpp"

namespace papereval::bib {

struct BibEntry {
    std::string key;
    std::string entry_type;  ///< lowercase, e.g. "article"
    /// Field names lowercased; values with the outer delimiters removed.
    std::map<std::string, std::string> fields;
    std::optional<std::string> abstract;
    /// Span of the whole entry in BibDatabase::source ("@type{...}").
    std::size_t begin = 0;
    std::size_t end = 0;
    /// Position of the closing delimiter of the entry.
    std::size_t close = 0;
};

struct BibDatabase {
    std::string source;
    std::map<std::string, BibEntry> entries;
    Diagnostics diagnostics;

    bool contains(const std::string& key) const { return entries.count(key) != 0; }
};

/// Tolerant BibTeX reader. @comment, @preamble and @string blocks are
/// skipped; a duplicate key keeps the later entry.
BibDatabase parse_bib(std::string source);
BibDatabase load_bib(const fs::path& path);

/// Strips braces and collapses whitespace, for titles and abstracts.
std::string plain_value(std::string_view value);

}  // namespace papereval::bib
