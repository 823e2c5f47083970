#pragma once

#include <string>
#include <string_view>

#include "backend.hpp"
#include "json_extract.hpp"

namespace r2write {

// OpenAI-compatible `POST {endpoint}/chat/completions` transport.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(BackendConfig config);

    // 401/403 -> AuthError; 408/429/5xx, connection errors and timeouts ->
    // TransientError; other non-2xx -> RequestRejected; unparseable body ->
    // MalformedResponse.
    ChatResponse send(const ChatRequest& request, const Sampling& sampling) override;
    [[nodiscard]] std::string id() const override;

private:
    BackendConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

[[nodiscard]] json chat_request_body(const ChatRequest& request, std::string_view model, const Sampling& sampling);

// Throws MalformedResponse unless body has choices[0].message.content as a string.
[[nodiscard]] ChatResponse parse_chat_response(std::string_view body, std::string backend_id);

}  // namespace r2write
