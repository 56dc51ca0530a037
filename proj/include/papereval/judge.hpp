#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "papereval/common.hpp"
#include "papereval/json_schema.hpp"

namespace papereval::judge {

struct JudgeRequest {
    std::string task_tag;
    std::string system_prompt;
    std::string user_prompt;
    /// JSON schema text; empty for free-text responses.
    std::string response_schema;
    /// Structured copy of the inputs for offline backends. Not part of the
    /// idempotency key.
    Json payload;

    /// SHA-256 over the length-prefixed tag, prompts and schema.
    std::string idempotency_key() const;
};

struct JudgeResponse {
    std::string raw_text;
    /// Parsed JSON, or a JSON string holding raw_text in free-text mode.
    Json parsed;
    int attempt_count = 1;
};

enum class ReplyStatus { Ok, RateLimited, Unavailable };

struct BackendReply {
    ReplyStatus status = ReplyStatus::Ok;
    std::string text;
    std::string error;
};

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual std::string id() const = 0;
    virtual BackendReply complete(const JudgeRequest& request) = 0;
};

enum class CassetteMode { Record, Replay, Passthrough };

CassetteMode parse_cassette_mode(const std::string& name);
std::string to_string(CassetteMode mode);

struct CassetteEntry {
    std::string idempotency_key;
    std::string task_tag;
    std::string raw_text;
};

/// Append-only JSONL store of judge responses keyed by request hash.
/// Internally synchronized.
class Cassette {
public:
    /// In-memory cassette with no backing file.
    explicit Cassette(CassetteMode mode = CassetteMode::Passthrough);
    /// Replay requires the file to exist; Record creates it when absent.
    static std::shared_ptr<Cassette> open(const fs::path& path, CassetteMode mode);

    CassetteMode mode() const { return mode_; }
    std::optional<std::string> lookup(const std::string& key) const;
    /// Stores a new entry; an existing key is never overwritten.
    void record(const CassetteEntry& entry);
    std::size_t size() const;

private:
    CassetteMode mode_;
    fs::path path_;
    mutable std::mutex mu_;
    std::map<std::string, CassetteEntry> entries_;
};

struct GatewayConfig {
    int retry_budget = 3;
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds backoff_max{8000};
    /// Rate-limit waits allowed per attempt before it counts as a failure.
    int rate_limit_waits = 5;
};

/// Returns an error message when a parsed response is semantically
/// unacceptable beyond the schema (e.g. an unknown category).
using ResponseCheck = std::function<std::optional<std::string>(const Json&)>;

/// Every judge call goes through here: cassette lookup, bounded
/// concurrency, schema validation and corrective retries.
class JudgeGateway {
public:
    JudgeGateway(std::shared_ptr<JudgeBackend> backend, std::shared_ptr<Cassette> cassette,
                 GatewayConfig config = {});

    JudgeResponse submit(const JudgeRequest& request, const ResponseCheck& check = {});

    std::string backend_id() const;
    /// Hash over every response consumed so far, sorted by key. Equal for a
    /// recording run and its replay.
    std::string responses_hash() const;
    std::size_t backend_calls() const { return backend_calls_; }
    const GatewayConfig& config() const { return config_; }

private:
    std::string fetch(const JudgeRequest& request);
    BackendReply call_backend(const JudgeRequest& request);

    std::shared_ptr<JudgeBackend> backend_;
    std::shared_ptr<Cassette> cassette_;
    GatewayConfig config_;

    mutable std::mutex mu_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;
    std::map<std::string, std::shared_future<BackendReply>> pending_;
    std::map<std::string, std::string> consumed_;
    std::atomic<std::size_t> backend_calls_{0};
};

/// Appended to the user prompt after a rejected response.
std::string corrective_instruction(const std::string& violation, const std::string& schema);

/// Backend answering from a caller-supplied function; used by tests and
/// fixtures.
class ScriptedBackend : public JudgeBackend {
public:
    using Handler = std::function<BackendReply(const JudgeRequest&)>;
    explicit ScriptedBackend(Handler handler, std::string id = "scripted");
    std::string id() const override { return id_; }
    BackendReply complete(const JudgeRequest& request) override;

private:
    Handler handler_;
    std::string id_;
};

/// OpenAI-compatible chat completions endpoint.
struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model;
    /// Name of the environment variable holding the API key.
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.0;
    int timeout_seconds = 180;
    bool json_mode = true;
};

class OpenAiChatBackend : public JudgeBackend {
public:
    explicit OpenAiChatBackend(HttpBackendConfig config);
    std::string id() const override;
    BackendReply complete(const JudgeRequest& request) override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
};

/// Deterministic offline judge. Reads the structured payload attached to
/// each request and answers with lexical-overlap rules: identical text
/// scores 5, a claim whose numbers all occur in the reference is
/// supported, and so on. Used for identity runs and fixture recording.
class HeuristicJudge : public JudgeBackend {
public:
    std::string id() const override { return "heuristic/1"; }
    BackendReply complete(const JudgeRequest& request) override;
};

/// Backend and gateway settings read from a JSON config file:
/// {"backend": "openai-chat"|"heuristic"|"none", "model", "base_url", "path",
///  "api_key_env", "temperature", "timeout_seconds", "max_in_flight",
///  "retry_budget"}.
struct JudgeConfig {
    std::string backend = "heuristic";
    HttpBackendConfig http;
    GatewayConfig gateway;
};

JudgeConfig load_judge_config(const fs::path& path);
JudgeConfig parse_judge_config(const Json& json);
/// Throws ConfigError for unknown backends or missing credentials.
std::shared_ptr<JudgeBackend> make_backend(const JudgeConfig& config);

}  // namespace papereval::judge
