#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/rational.hpp>

// Boost 1.74's mixed rational/integer equality recurses forever under C++20
// rewritten comparisons. These exact-match overloads are found by ADL and
// take precedence over the templates.
namespace boost {
#define PAPEREVAL_RATIONAL_EQ(T)                                                                              \
    inline bool operator==(const rational<std::int64_t>& a, T b) {                                            \
        return a.denominator() == 1 && a.numerator() == static_cast<std::int64_t>(b);                        \
    }
PAPEREVAL_RATIONAL_EQ(int)
PAPEREVAL_RATIONAL_EQ(long)
PAPEREVAL_RATIONAL_EQ(long long)
PAPEREVAL_RATIONAL_EQ(unsigned)
PAPEREVAL_RATIONAL_EQ(unsigned long)
#undef PAPEREVAL_RATIONAL_EQ
}  // namespace boost

namespace papereval {

namespace fs = std::filesystem;

/// Exact arithmetic for every score aggregate. Rounding happens only when
/// a value is rendered for display.
using Rational = boost::rational<std::int64_t>;

/// A recoverable problem found while processing. Tolerant stages record
/// these instead of throwing.
struct Diagnostic {
    std::string code;
    std::string message;
    std::optional<std::size_t> offset;

    bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

inline void add_diagnostic(Diagnostics& out, std::string code, std::string message,
                           std::optional<std::size_t> offset = std::nullopt) {
    out.push_back(Diagnostic{std::move(code), std::move(message), offset});
}

/// Base class for errors that abort an operation.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyDocumentError : public Error {
public:
    using Error::Error;
};

class JudgeUnavailable : public Error {
public:
    using Error::Error;
};

class JudgeMalformed : public Error {
public:
    using Error::Error;
};

class VerifierUnavailable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Renders a rational as a fixed-point decimal string, rounding half away
/// from zero.
std::string format_fixed(const Rational& value, int decimals);

/// "n/d" form used in serialized reports.
std::string format_exact(const Rational& value);
Rational parse_exact(const std::string& text);

}  // namespace papereval
