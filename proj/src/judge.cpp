#include "papereval/judge.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "papereval/hash.hpp"
#include "papereval/text_util.hpp"

namespace papereval::judge {

namespace {

class NullBackend : public JudgeBackend {
public:
    std::string id() const override { return "none"; }
    BackendReply complete(const JudgeRequest&) override {
        return {ReplyStatus::Unavailable, {}, "no judge backend configured"};
    }
};

}  // namespace

std::string JudgeRequest::idempotency_key() const {
    Sha256 h;
    h.update_field(task_tag);
    h.update_field(system_prompt);
    h.update_field(user_prompt);
    h.update_field(response_schema);
    return h.hex_digest();
}

CassetteMode parse_cassette_mode(const std::string& name) {
    const auto n = text::to_lower(name);
    if (n == "record") return CassetteMode::Record;
    if (n == "replay") return CassetteMode::Replay;
    if (n == "passthrough" || n == "off") return CassetteMode::Passthrough;
    throw ConfigError("unknown cassette mode: " + name);
}

std::string to_string(CassetteMode mode) {
    switch (mode) {
        case CassetteMode::Record: return "record";
        case CassetteMode::Replay: return "replay";
        case CassetteMode::Passthrough: return "passthrough";
    }
    return "passthrough";
}

Cassette::Cassette(CassetteMode mode) : mode_(mode) {}

std::shared_ptr<Cassette> Cassette::open(const fs::path& path, CassetteMode mode) {
    auto c = std::make_shared<Cassette>(mode);
    c->path_ = path;
    if (mode == CassetteMode::Passthrough) return c;
    if (!fs::exists(path)) {
        if (mode == CassetteMode::Replay) throw ConfigError("replay cassette not found: " + path.string());
        return c;
    }
    std::ifstream in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto j = Json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("idempotency_key") || !j.contains("raw_text")) {
            throw ConfigError("corrupt cassette line " + std::to_string(lineno) + " in " + path.string());
        }
        CassetteEntry e{j["idempotency_key"].get<std::string>(), j.value("task_tag", ""), j["raw_text"].get<std::string>()};
        c->entries_.emplace(e.idempotency_key, std::move(e));  // first record wins
    }
    return c;
}

std::optional<std::string> Cassette::lookup(const std::string& key) const {
    if (mode_ == CassetteMode::Passthrough) return std::nullopt;
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.raw_text;
}

void Cassette::record(const CassetteEntry& entry) {
    if (mode_ != CassetteMode::Record) return;
    std::lock_guard lock(mu_);
    if (!entries_.emplace(entry.idempotency_key, entry).second) return;
    if (path_.empty()) return;
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    Json j = {{"idempotency_key", entry.idempotency_key}, {"task_tag", entry.task_tag}, {"raw_text", entry.raw_text}};
    out << j.dump() << '\n';
    if (!out) throw Error("failed to append to cassette " + path_.string());
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::string corrective_instruction(const std::string& violation, const std::string& schema) {
    std::string out = "Your previous response was rejected: " + violation +
                      ". Respond again with only a JSON value that satisfies the required format.";
    if (!schema.empty()) out += "\nRequired JSON schema:\n" + schema;
    return out;
}

JudgeGateway::JudgeGateway(std::shared_ptr<JudgeBackend> backend, std::shared_ptr<Cassette> cassette,
                           GatewayConfig config)
    : backend_(backend ? std::move(backend) : std::make_shared<NullBackend>()),
      cassette_(cassette ? std::move(cassette) : std::make_shared<Cassette>()),
      config_(config) {
    if (config_.max_in_flight == 0) config_.max_in_flight = 1;
    if (config_.retry_budget < 1) config_.retry_budget = 1;
}

std::string JudgeGateway::backend_id() const { return backend_->id(); }

std::string JudgeGateway::responses_hash() const {
    std::lock_guard lock(mu_);
    Sha256 h;
    for (const auto& [key, raw] : consumed_) {
        h.update_field(key);
        h.update_field(raw);
    }
    return h.hex_digest();
}

BackendReply JudgeGateway::call_backend(const JudgeRequest& request) {
    {
        std::unique_lock lock(mu_);
        slots_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
    }
    BackendReply reply;
    try {
        ++backend_calls_;
        reply = backend_->complete(request);
    } catch (const std::exception& e) {
        reply = {ReplyStatus::Unavailable, {}, e.what()};
    }
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    slots_cv_.notify_one();
    return reply;
}

/// Raw text for one attempt: cassette first, then the backend. Concurrent
/// requests with the same key share a single backend call.
std::string JudgeGateway::fetch(const JudgeRequest& request) {
    const auto key = request.idempotency_key();
    if (auto hit = cassette_->lookup(key)) {
        std::lock_guard lock(mu_);
        consumed_[key] = *hit;
        return *hit;
    }
    if (cassette_->mode() == CassetteMode::Replay) {
        throw JudgeUnavailable("cassette has no response for " + request.task_tag + " request " + key.substr(0, 12));
    }

    std::shared_future<BackendReply> shared;
    std::promise<BackendReply> promise;
    bool owner = false;
    {
        std::lock_guard lock(mu_);
        auto it = pending_.find(key);
        if (it != pending_.end()) {
            shared = it->second;
        } else {
            shared = promise.get_future().share();
            pending_.emplace(key, shared);
            owner = true;
        }
    }
    if (owner) {
        BackendReply reply;
        int waits = 0;
        auto delay = config_.backoff_base;
        while (true) {
            reply = call_backend(request);
            if (reply.status != ReplyStatus::RateLimited || waits >= config_.rate_limit_waits) break;
            ++waits;
            spdlog::debug("judge rate limited; waiting {} ms", delay.count());
            std::this_thread::sleep_for(delay);
            delay = std::min(delay * 2, config_.backoff_max);
        }
        if (reply.status == ReplyStatus::Ok) {
            cassette_->record(CassetteEntry{key, request.task_tag, reply.text});
        }
        promise.set_value(reply);
        std::lock_guard lock(mu_);
        pending_.erase(key);
    }
    const auto reply = shared.get();
    if (reply.status == ReplyStatus::RateLimited) throw JudgeUnavailable("rate limited: " + reply.error);
    if (reply.status != ReplyStatus::Ok) throw JudgeUnavailable(reply.error.empty() ? "backend failure" : reply.error);
    std::lock_guard lock(mu_);
    consumed_[key] = reply.text;
    return reply.text;
}

JudgeResponse JudgeGateway::submit(const JudgeRequest& request, const ResponseCheck& check) {
    Json schema;
    if (!request.response_schema.empty()) {
        schema = Json::parse(request.response_schema, nullptr, false);
        if (schema.is_discarded()) throw ConfigError("invalid response schema for " + request.task_tag);
    }
    JudgeRequest attempt = request;
    std::string last_error;
    bool last_transport = false;
    for (int n = 1; n <= config_.retry_budget; ++n) {
        std::string raw;
        try {
            raw = fetch(attempt);
        } catch (const JudgeUnavailable& e) {
            if (cassette_->mode() == CassetteMode::Replay) throw;
            last_error = e.what();
            last_transport = true;
            continue;
        }
        last_transport = false;
        Json parsed;
        std::optional<std::string> violation;
        if (request.response_schema.empty()) {
            parsed = raw;
        } else if (auto j = extract_json(raw)) {
            parsed = std::move(*j);
            violation = validate_schema(parsed, schema);
        } else {
            violation = "response is not valid JSON";
        }
        if (!violation && check) violation = check(parsed);
        if (!violation) return JudgeResponse{raw, std::move(parsed), n};
        last_error = *violation;
        spdlog::debug("judge {} attempt {} rejected: {}", request.task_tag, n, last_error);
        attempt.user_prompt = request.user_prompt + "\n\n" + corrective_instruction(last_error, request.response_schema);
    }
    if (last_transport) throw JudgeUnavailable(request.task_tag + ": " + last_error);
    throw JudgeMalformed(request.task_tag + ": " + last_error);
}

ScriptedBackend::ScriptedBackend(Handler handler, std::string id) : handler_(std::move(handler)), id_(std::move(id)) {}

BackendReply ScriptedBackend::complete(const JudgeRequest& request) { return handler_(request); }

JudgeConfig parse_judge_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("judge config must be a JSON object");
    JudgeConfig c;
    c.backend = j.value("backend", c.backend);
    c.http.model = j.value("model", c.http.model);
    c.http.base_url = j.value("base_url", c.http.base_url);
    c.http.path = j.value("path", c.http.path);
    c.http.api_key_env = j.value("api_key_env", c.http.api_key_env);
    c.http.temperature = j.value("temperature", c.http.temperature);
    c.http.timeout_seconds = j.value("timeout_seconds", c.http.timeout_seconds);
    c.http.json_mode = j.value("json_mode", c.http.json_mode);
    c.gateway.max_in_flight = j.value("max_in_flight", c.gateway.max_in_flight);
    c.gateway.retry_budget = j.value("retry_budget", c.gateway.retry_budget);
    if (j.contains("backoff_ms")) c.gateway.backoff_base = std::chrono::milliseconds(j["backoff_ms"].get<int>());
    if (j.contains("api_key")) throw ConfigError("judge config must not contain credentials; name an environment variable in api_key_env");
    return c;
}

JudgeConfig load_judge_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("judge config not found: " + path.string());
    auto j = Json::parse(text::read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("judge config is not valid JSON: " + path.string());
    return parse_judge_config(j);
}

std::shared_ptr<JudgeBackend> make_backend(const JudgeConfig& config) {
    if (config.backend == "heuristic") return std::make_shared<HeuristicJudge>();
    if (config.backend == "none") return std::make_shared<NullBackend>();
    if (config.backend == "openai-chat") {
        if (config.http.model.empty()) throw ConfigError("openai-chat backend needs a model name");
        return std::make_shared<OpenAiChatBackend>(config.http);
    }
    throw ConfigError("unknown judge backend: " + config.backend);
}

}  // namespace papereval::judge
