#include "papereval/hash.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include <openssl/evp.h>

#include "papereval/text_util.hpp"

namespace papereval {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
        throw Error("failed to initialise SHA-256");
    }
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(std::string_view data) {
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size());
}

void Sha256::update_field(std::string_view data) {
    update(std::to_string(data.size()));
    update(":");
    update(data);
}

std::string Sha256::hex_digest() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), digest, &len);
    std::string out;
    out.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        out += buf;
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    return h.hex_digest();
}

std::string hash_tree(const fs::path& root) {
    std::vector<fs::path> entries;
    if (fs::exists(root)) {
        for (const auto& e : fs::recursive_directory_iterator(root)) entries.push_back(e.path());
    }
    std::sort(entries.begin(), entries.end());
    Sha256 h;
    for (const auto& p : entries) {
        const auto rel = fs::relative(p, root).generic_string();
        if (fs::is_directory(p)) {
            h.update_field("d");
            h.update_field(rel);
        } else if (fs::is_regular_file(p)) {
            h.update_field("f");
            h.update_field(rel);
            h.update_field(text::read_file(p));
        }
    }
    return h.hex_digest();
}

}  // namespace papereval
