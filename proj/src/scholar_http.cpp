#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "papereval/bench_prep.hpp"
#include "papereval/text_util.hpp"

namespace papereval::prep {

namespace {

constexpr int kRateLimitRetries = 3;

std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

std::optional<std::string> field(const bib::BibEntry& e, const std::string& name) {
    auto it = e.fields.find(name);
    if (it == e.fields.end()) return std::nullopt;
    auto v = bib::plain_value(it->second);
    if (v.empty()) return std::nullopt;
    return v;
}

std::optional<std::string> arxiv_id(const bib::BibEntry& e) {
    if (auto ep = field(e, "eprint")) return ep;
    for (const auto* name : {"journal", "url", "note"}) {
        auto v = field(e, name);
        if (!v) continue;
        const auto lower = text::to_lower(*v);
        for (const auto* marker : {"arxiv:", "arxiv.org/abs/"}) {
            const auto p = lower.find(marker);
            if (p == std::string::npos) continue;
            auto id = text::trim(v->substr(p + std::string_view(marker).size()));
            const auto stop = id.find_first_of(" ,;}");
            if (stop != std::string::npos) id = id.substr(0, stop);
            if (!id.empty()) return id;
        }
    }
    return std::nullopt;
}

std::optional<std::string> abstract_of(const Json& paper) {
    if (paper.is_object() && paper.contains("abstract") && paper["abstract"].is_string()) {
        auto a = text::trim(paper["abstract"].get<std::string>());
        if (!a.empty()) return a;
    }
    return std::nullopt;
}

}  // namespace

ScholarResolver::ScholarResolver(ScholarConfig config) : config_(std::move(config)) {
    if (config_.requests_per_second <= 0) throw ConfigError("requests_per_second must be positive");
}

void ScholarResolver::pace() {
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / config_.requests_per_second));
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(pace_mu_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
}

std::optional<std::string> ScholarResolver::get_abstract(const std::string& path) {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("x-api-key", key);
    }
    for (int attempt = 0;; ++attempt) {
        pace();
        auto res = client.Get(path, headers);
        if (!res) throw ResolverUnavailable("HTTP error: " + httplib::to_string(res.error()));
        if (res->status == 404) return std::nullopt;
        if (res->status == 429 && attempt < kRateLimitRetries) {
            std::this_thread::sleep_for(std::chrono::seconds(1 << attempt));
            continue;
        }
        if (res->status != 200) throw ResolverUnavailable("HTTP " + std::to_string(res->status));
        auto j = Json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw ResolverUnavailable("unexpected response body");
        if (j.contains("data") && j["data"].is_array()) {
            return j["data"].empty() ? std::nullopt : abstract_of(j["data"][0]);
        }
        return abstract_of(j);
    }
}

std::optional<std::string> ScholarResolver::lookup(const bib::BibEntry& entry) {
    if (auto doi = field(entry, "doi")) {
        if (auto a = get_abstract("/graph/v1/paper/DOI:" + url_encode(*doi) + "?fields=abstract")) return a;
    }
    if (auto id = arxiv_id(entry)) {
        if (auto a = get_abstract("/graph/v1/paper/ARXIV:" + url_encode(*id) + "?fields=abstract")) return a;
    }
    if (auto title = field(entry, "title")) {
        return get_abstract("/graph/v1/paper/search/match?query=" + url_encode(*title) + "&fields=abstract");
    }
    return std::nullopt;
}

}  // namespace papereval::prep
