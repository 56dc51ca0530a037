#pragma once

#include <string>
#include <string_view>

#include "papereval/common.hpp"

namespace papereval {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Incremental SHA-256.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view data);
    /// Appends a length prefix before `data` so field boundaries are unambiguous.
    void update_field(std::string_view data);
    std::string hex_digest();

private:
    void* ctx_;
};

/// Hash of a directory tree: sorted relative paths, file types and contents.
/// Identical trees hash identically regardless of timestamps.
std::string hash_tree(const fs::path& root);

}  // namespace papereval
