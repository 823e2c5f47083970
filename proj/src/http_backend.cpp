#include "r2write/http_backend.hpp"

#include <cstdlib>
#include <regex>

#include "httplib.h"

#include "r2write/errors.hpp"

namespace r2write {
namespace {

constexpr std::string_view kCompletionsSuffix = "/chat/completions";

}  // namespace

json chat_request_body(const ChatRequest& request, std::string_view model, const Sampling& sampling) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", to_string(m.speaker)}, {"content", m.text}});
    return {{"model", model},
            {"messages", std::move(messages)},
            {"temperature", sampling.temperature},
            {"max_tokens", sampling.max_tokens}};
}

ChatResponse parse_chat_response(std::string_view body, std::string backend_id) {
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw MalformedResponse("response body is not a JSON object");
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
        throw MalformedResponse("response has no choices");
    }
    const auto& first = choices->front();
    if (!first.contains("message") || !first["message"].is_object() || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw MalformedResponse("choices[0].message.content missing or not a string");
    }
    ChatResponse response;
    response.text = first["message"]["content"].get<std::string>();
    response.backend_id = std::move(backend_id);
    if (const auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
        response.usage.prompt_tokens = usage->value("prompt_tokens", std::int64_t{0});
        response.usage.completion_tokens = usage->value("completion_tokens", std::int64_t{0});
    }
    return response;
}

HttpTransport::HttpTransport(BackendConfig config) : config_(std::move(config)) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, kUrl)) {
        throw UsageError("backend endpoint must be an http(s) URL, got '" + config_.endpoint + "'");
    }
    scheme_host_port_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : std::string();
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    if (!path_.ends_with(kCompletionsSuffix)) path_ += kCompletionsSuffix;
}

std::string HttpTransport::id() const { return scheme_host_port_ + path_ + "#" + config_.model_name; }

ChatResponse HttpTransport::send(const ChatRequest& request, const Sampling& sampling) {
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw AuthError("environment variable " + config_.api_key_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    const std::string body = chat_request_body(request, config_.model_name, sampling).dump();
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) throw TransientError("transport error: " + httplib::to_string(result.error()));

    const int status = result->status;
    if (status == 401 || status == 403) throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    if (status == 408 || status == 429 || status >= 500) {
        throw TransientError("HTTP " + std::to_string(status), status);
    }
    if (status < 200 || status >= 300) {
        throw RequestRejected("HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
    }
    return parse_chat_response(result->body, id());
}

}  // namespace r2write
