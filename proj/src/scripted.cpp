#include "r2write/scripted.hpp"

#include <algorithm>

#include "r2write/errors.hpp"

namespace r2write {

void ScriptedTransport::push(Role role, ScriptStep step) {
    std::lock_guard lock(mu_);
    queues_[role].push_back(std::move(step));
}

void ScriptedTransport::set_responder(Responder responder) {
    std::lock_guard lock(mu_);
    responder_ = std::move(responder);
}

ChatResponse ScriptedTransport::send(const ChatRequest& request, const Sampling&) {
    std::optional<ScriptStep> step;
    Responder responder;
    int index = 0;
    {
        std::lock_guard lock(mu_);
        index = calls_[request.role]++;
        ++purpose_calls_[request.purpose];
        log_.push_back(request);
        auto& queue = queues_[request.role];
        if (!queue.empty()) {
            step = std::move(queue.front());
            queue.pop_front();
        } else {
            responder = responder_;
        }
    }

    const std::string where = std::string(to_string(request.role)) + " call #" + std::to_string(index);
    if (!step) {
        std::optional<std::string> text;
        if (responder) text = responder(request);
        if (!text) throw ScriptExhausted("script has no reply for " + where + " (" + request.purpose + ")");
        step = ScriptStep::reply(std::move(*text));
    }
    if (step->expect_prompt_sha256 && *step->expect_prompt_sha256 != request.prompt_digest()) {
        throw PromptMismatch("prompt digest mismatch at " + where + " (" + request.purpose + ")");
    }
    switch (step->kind) {
        case ScriptStep::Kind::transient_failure: throw TransientError("scripted transient failure at " + where, 503);
        case ScriptStep::Kind::auth_failure: throw AuthError("scripted auth failure at " + where);
        case ScriptStep::Kind::malformed: throw MalformedResponse("scripted malformed response at " + where);
        case ScriptStep::Kind::reply: break;
    }
    ChatResponse response;
    response.text = std::move(step->text);
    response.backend_id = id_;
    return response;
}

int ScriptedTransport::calls(Role role) const {
    std::lock_guard lock(mu_);
    const auto it = calls_.find(role);
    return it == calls_.end() ? 0 : it->second;
}

int ScriptedTransport::calls_for(std::string_view purpose) const {
    std::lock_guard lock(mu_);
    const auto it = purpose_calls_.find(purpose);
    return it == purpose_calls_.end() ? 0 : it->second;
}

std::size_t ScriptedTransport::pending(Role role) const {
    std::lock_guard lock(mu_);
    const auto it = queues_.find(role);
    return it == queues_.end() ? 0 : it->second.size();
}

std::vector<ChatRequest> ScriptedTransport::log() const {
    std::lock_guard lock(mu_);
    return log_;
}

namespace {

ScriptStep step_from_json(const json& j) {
    if (j.is_string()) return ScriptStep::reply(j.get<std::string>());
    if (!j.is_object()) throw SchemaError("script step must be a string or object");
    ScriptStep step;
    if (const auto it = j.find("reply"); it != j.end()) {
        step = ScriptStep::reply(it->get<std::string>());
    } else if (const auto fail = j.find("fail"); fail != j.end()) {
        const auto kind = fail->get<std::string>();
        if (kind == "transient") step = ScriptStep::transient();
        else if (kind == "auth") step = ScriptStep::auth();
        else if (kind == "malformed") step = ScriptStep::malformed();
        else throw SchemaError("unknown script failure kind '" + kind + "'");
    } else {
        throw SchemaError("script step needs 'reply' or 'fail'");
    }
    if (const auto it = j.find("expect_sha256"); it != j.end()) step.expect_prompt_sha256 = it->get<std::string>();
    return step;
}

struct Rule {
    std::optional<Role> role;
    std::optional<std::string> purpose;
    std::optional<std::string> contains;
    std::string response;
};

}  // namespace

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_json(const json& script) {
    if (!script.is_object()) throw SchemaError("script must be a JSON object");
    auto transport = std::make_shared<ScriptedTransport>();
    for (const auto role : {Role::writer, Role::judge}) {
        const auto it = script.find(std::string(to_string(role)));
        if (it == script.end()) continue;
        if (!it->is_array()) throw SchemaError("script '" + std::string(to_string(role)) + "' must be an array");
        for (const auto& s : *it) transport->push(role, step_from_json(s));
    }
    std::vector<Rule> rules;
    if (const auto it = script.find("rules"); it != script.end()) {
        for (const auto& r : *it) {
            Rule rule;
            if (r.contains("role")) {
                const auto role = r.at("role").get<std::string>();
                if (role != "writer" && role != "judge") throw SchemaError("rule role must be writer or judge");
                rule.role = role == "writer" ? Role::writer : Role::judge;
            }
            if (r.contains("purpose")) rule.purpose = r.at("purpose").get<std::string>();
            if (r.contains("contains")) rule.contains = r.at("contains").get<std::string>();
            if (!r.contains("response")) throw SchemaError("rule needs a 'response'");
            rule.response = r.at("response").get<std::string>();
            rules.push_back(std::move(rule));
        }
    }
    if (!rules.empty()) {
        transport->set_responder([rules = std::move(rules)](const ChatRequest& req) -> std::optional<std::string> {
            for (const auto& rule : rules) {
                if (rule.role && *rule.role != req.role) continue;
                if (rule.purpose && *rule.purpose != req.purpose) continue;
                if (rule.contains) {
                    const bool found = std::any_of(req.messages.begin(), req.messages.end(), [&](const Message& m) {
                        return m.text.find(*rule.contains) != std::string::npos;
                    });
                    if (!found) continue;
                }
                return rule.response;
            }
            return std::nullopt;
        });
    }
    return transport;
}

std::shared_ptr<Backend> make_scripted_backend(std::shared_ptr<ScriptedTransport> transport, int max_in_flight,
                                               int max_attempts) {
    BackendConfig config = BackendConfig::judge_defaults();
    config.max_in_flight = max_in_flight;
    config.retry.max_attempts = max_attempts;
    config.retry.backoff_base = std::chrono::milliseconds(0);
    return std::make_shared<Backend>(config, std::move(transport));
}

}  // namespace r2write
