#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "json_extract.hpp"

namespace r2write {

struct ScriptStep {
    enum class Kind { reply, transient_failure, auth_failure, malformed };

    Kind kind = Kind::reply;
    std::string text;
    std::optional<std::string> expect_prompt_sha256;

    static ScriptStep reply(std::string text) { return {Kind::reply, std::move(text), std::nullopt}; }
    static ScriptStep transient() { return {Kind::transient_failure, {}, std::nullopt}; }
    static ScriptStep auth() { return {Kind::auth_failure, {}, std::nullopt}; }
    static ScriptStep malformed() { return {Kind::malformed, {}, std::nullopt}; }
};

// Deterministic offline model. Each role has a queue of steps consumed in call
// order (the per-role call index); when a role's queue is empty the responder,
// if any, answers from request content. Every send() counts as one call,
// failures included.
class ScriptedTransport final : public Transport {
public:
    using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

    explicit ScriptedTransport(std::string id = "scripted") : id_(std::move(id)) {}

    void push(Role role, ScriptStep step);
    void push_reply(Role role, std::string text) { push(role, ScriptStep::reply(std::move(text))); }
    void set_responder(Responder responder);

    ChatResponse send(const ChatRequest& request, const Sampling& sampling) override;
    [[nodiscard]] std::string id() const override { return id_; }

    [[nodiscard]] int calls(Role role) const;
    [[nodiscard]] int calls_for(std::string_view purpose) const;
    [[nodiscard]] std::size_t pending(Role role) const;
    [[nodiscard]] std::vector<ChatRequest> log() const;

    // Script file schema:
    //   {"writer": [step...], "judge": [step...],
    //    "rules": [{"role": "judge", "purpose": "...", "contains": "...", "response": "..."}]}
    // A step is a string (reply) or {"reply"|"fail": ..., "expect_sha256": ...}
    // with fail one of "transient", "auth", "malformed". Rules are tried in
    // order once a role's queue is exhausted; all given fields must match.
    [[nodiscard]] static std::shared_ptr<ScriptedTransport> from_json(const json& script);

private:
    std::string id_;
    mutable std::mutex mu_;
    std::map<Role, std::deque<ScriptStep>> queues_;
    std::map<Role, int> calls_;
    std::map<std::string, int, std::less<>> purpose_calls_;
    std::vector<ChatRequest> log_;
    Responder responder_;
};

// Backend over a scripted transport with no backoff delay.
[[nodiscard]] std::shared_ptr<Backend> make_scripted_backend(std::shared_ptr<ScriptedTransport> transport,
                                                             int max_in_flight = 1, int max_attempts = 1);

}  // namespace r2write
