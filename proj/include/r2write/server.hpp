#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "backend.hpp"
#include "reward.hpp"

namespace r2write::app {

struct HttpReply {
    int status = 200;
    std::string body;  // JSON
};

// Reward service: POST /v1/reward and GET /healthz. The handlers are also
// callable directly, without a socket.
class RewardServer {
public:
    RewardServer(RewardConfig config, ChatClient& client);
    ~RewardServer();
    RewardServer(const RewardServer&) = delete;
    RewardServer& operator=(const RewardServer&) = delete;

    // 200 with the reward JSON (the same object a batch line holds); 400 for
    // an unparseable body or a schema violation, naming the field; 422 when
    // scoring the item fails.
    [[nodiscard]] HttpReply handle_reward(std::string_view body) const;
    [[nodiscard]] HttpReply handle_health() const;

    // Binds host:port; port 0 picks a free port. Returns the bound port.
    // Throws IoError when binding fails.
    int bind(const std::string& host, int port);

    // Serves until stop(). Requires a prior bind().
    void listen();
    void stop();

private:
    struct Impl;
    RewardConfig config_;
    ChatClient& client_;
    std::unique_ptr<Impl> impl_;
};

// "host:port" -> (host, port). Throws UsageError.
[[nodiscard]] std::pair<std::string, int> parse_addr(std::string_view addr);

}  // namespace r2write::app
