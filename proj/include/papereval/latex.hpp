#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "papereval/common.hpp"

namespace papereval::latex {

/// Half-open byte range [begin, end) into LatexDocument::raw_text.
struct ByteRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool contains(std::size_t offset) const { return offset >= begin && offset < end; }
    bool operator==(const ByteRange&) const = default;
};

struct RawSection {
    std::string heading;
    int depth = 1;  ///< 1 = \section, 2 = \subsection, 3 = \subsubsection
    /// Text after the heading command up to the next boundary.
    std::string body;
    /// Covers the heading command and the body.
    ByteRange byte_range;
    /// Span of the heading command itself (`\section*[..]{..}`).
    ByteRange heading_range;
    bool starred = false;
    bool in_appendix = false;
    /// True for the depth-1 section synthesised from the abstract environment.
    bool is_abstract_env = false;
};

struct TableBlock {
    std::optional<std::string> label;
    std::optional<std::string> caption;
    /// First line of the caption argument as written, flattened.
    std::optional<std::string> caption_first_line;
    std::string environment;
    std::string body_tex;
    ByteRange byte_range;
};

struct FigureBlock {
    std::optional<std::string> label;
    std::optional<std::string> caption;
    std::optional<std::string> caption_first_line;
    std::string environment;
    std::vector<std::string> asset_paths;
    ByteRange byte_range;
};

struct CiteKey {
    std::string key;
    std::size_t offset = 0;

    bool operator==(const CiteKey&) const = default;
};

/// A `\ref`-family occurrence (\ref, \cref, \Cref, \autoref, ...).
struct LabelRef {
    std::string label;
    std::size_t offset = 0;
};

struct CiteScan {
    std::vector<CiteKey> keys;
    std::size_t malformed = 0;
};

struct LatexDocument {
    fs::path source_path;
    std::string raw_text;
    /// raw_text with comments and verbatim content blanked to spaces.
    /// Same length as raw_text so offsets are shared.
    std::string masked_text;
    std::vector<RawSection> sections;
    std::vector<TableBlock> tables;
    std::vector<FigureBlock> figures;
    std::vector<CiteKey> cite_keys;
    std::vector<LabelRef> refs;
    std::size_t malformed_cites = 0;
    Diagnostics diagnostics;
    /// Set when an environment was left unbalanced.
    bool malformed = false;

    bool empty() const { return sections.empty(); }
    /// Index of the section whose range contains `offset`, if any.
    std::optional<std::size_t> section_at(std::size_t offset) const;
};

/// Parses LaTeX text into its structural model. Never throws on malformed
/// input: problems become diagnostics and the result is best effort.
LatexDocument parse_document(std::string source, fs::path source_path = {});

/// Reads a .tex file, inlines \input/\include one level deep relative to its
/// directory, and parses the result.
LatexDocument load_document(const fs::path& path);

/// Inlining step of load_document, exposed for bundle preparation.
std::string inline_inputs(const std::string& source, const fs::path& base_dir, Diagnostics& diagnostics);

CiteScan extract_cite_keys(const LatexDocument& doc);
std::vector<TableBlock> extract_tables(const LatexDocument& doc);
std::vector<FigureBlock> extract_figures(const LatexDocument& doc);

/// Replaces single-argument commands by their argument text, drops
/// zero-argument commands and strips grouping braces and math delimiters.
std::string flatten_caption(std::string_view tex);

/// Blanks comments and verbatim content; exposed for property tests.
std::string mask_comments_and_verbatim(std::string_view source);

/// Matching key for figure identity: lowercase file stem without directory
/// or extension.
std::string asset_key(std::string_view path);

/// Removes a leading "./" (repeatedly) and normalises separators.
std::string normalize_asset_path(std::string_view path);

}  // namespace papereval::latex
