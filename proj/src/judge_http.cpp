#include <cstdlib>

#include <httplib.h>

#include "papereval/judge.hpp"

namespace papereval::judge {

OpenAiChatBackend::OpenAiChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
}

std::string OpenAiChatBackend::id() const { return "openai-chat/" + config_.model; }

BackendReply OpenAiChatBackend::complete(const JudgeRequest& request) {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(30, 0);
    client.set_bearer_token_auth(api_key_);

    Json body = {
        {"model", config_.model},
        {"temperature", config_.temperature},
        {"messages", Json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                  {{"role", "user"}, {"content", request.user_prompt}}})},
    };
    if (config_.json_mode && !request.response_schema.empty()) {
        body["response_format"] = {{"type", "json_object"}};
    }
    auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) return {ReplyStatus::Unavailable, {}, "HTTP error: " + httplib::to_string(res.error())};
    if (res->status == 429) return {ReplyStatus::RateLimited, {}, "HTTP 429"};
    if (res->status >= 500) return {ReplyStatus::Unavailable, {}, "HTTP " + std::to_string(res->status)};
    if (res->status != 200) {
        return {ReplyStatus::Unavailable, {}, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300)};
    }
    auto j = Json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        return {ReplyStatus::Unavailable, {}, "unexpected response body"};
    }
    const auto& message = j["choices"][0]["message"];
    if (!message.contains("content") || !message["content"].is_string()) {
        return {ReplyStatus::Unavailable, {}, "response without message content"};
    }
    return {ReplyStatus::Ok, message["content"].get<std::string>(), {}};
}

}  // namespace papereval::judge
