#include "r2write/server.hpp"

#include <charconv>

#include "httplib.h"
#include "r2write/app.hpp"
#include "r2write/errors.hpp"
#include "r2write/io.hpp"
#include "r2write/prompts.hpp"

namespace r2write::app {

struct RewardServer::Impl {
    httplib::Server server;
};

RewardServer::RewardServer(RewardConfig config, ChatClient& client)
    : config_(config), client_(client), impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/v1/reward", [this](const httplib::Request& req, httplib::Response& res) {
        const HttpReply reply = handle_reward(req.body);
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    impl_->server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        const HttpReply reply = handle_health();
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
}

RewardServer::~RewardServer() { stop(); }

HttpReply RewardServer::handle_reward(std::string_view body) const {
    const json request = json::parse(body, nullptr, false);
    if (request.is_discarded()) {
        return {400, json{{"error", io::error_json("SchemaError", "request body is not valid JSON")}}.dump()};
    }
    RewardRequest parsed;
    try {
        parsed = reward_request_from_json(request);
    } catch (const Error& e) {
        json out = json::object();
        if (request.is_object() && request.contains("id") && !request["id"].is_null()) out["id"] = request["id"];
        out["error"] = io::error_json(e.kind(), e.what());
        return {400, out.dump()};
    }
    try {
        return {200, reward_json(parsed, config_, client_).dump()};
    } catch (const Error& e) {
        json out = json::object();
        if (parsed.id) out["id"] = *parsed.id;
        out["error"] = io::error_json(e.kind(), e.what());
        return {422, out.dump()};
    }
}

HttpReply RewardServer::handle_health() const {
    json prompts = json::object();
    for (const auto& [name, sum] : prompts::checksums()) prompts[name] = sum;
    return {200, json{{"status", "ok"}, {"tool", kToolName}, {"version", version()}, {"prompt_checksums", prompts}}.dump()};
}

int RewardServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void RewardServer::listen() {
    if (!impl_->server.listen_after_bind()) throw IoError("reward server stopped listening unexpectedly");
}

void RewardServer::stop() {
    if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_addr(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos || colon == 0) throw UsageError("address must be host:port, got '" + std::string(addr) + "'");
    const std::string_view port_text = addr.substr(colon + 1);
    int port = -1;
    const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        throw UsageError("invalid port in address '" + std::string(addr) + "'");
    }
    return {std::string(addr.substr(0, colon)), port};
}

}  // namespace r2write::app
