#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace r2write {

enum class Role { writer, judge };
enum class Speaker { system, user, assistant };

[[nodiscard]] std::string_view to_string(Role role) noexcept;
[[nodiscard]] std::string_view to_string(Speaker speaker) noexcept;

struct Message {
    Speaker speaker = Speaker::user;
    std::string text;
};

struct Sampling {
    double temperature = 0.0;
    int max_tokens = 4096;
};

struct ChatRequest {
    Role role = Role::judge;
    std::vector<Message> messages;
    // Unset means the backend's configured defaults for this role.
    std::optional<Sampling> sampling;
    // Short label of the calling step ("score_keypoints", "answer_reward", ...).
    // Not sent over the wire; used by scripts, logs and counters.
    std::string purpose;

    // Throws UsageError unless messages are non-empty and start with system or user.
    void validate() const;
    // SHA-256 over speakers and texts, used by prompt-hash assertions.
    [[nodiscard]] std::string prompt_digest() const;
    // Text of the last user message (empty if none).
    [[nodiscard]] const std::string& last_user_text() const;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    Usage usage;
    std::string backend_id;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds max_backoff{30000};

    // backoff_base * 2^(attempt-1), capped at max_backoff. attempt is 1-based.
    [[nodiscard]] std::chrono::milliseconds delay_after(int attempt) const;
};

struct BackendConfig {
    std::string endpoint;     // base URL, e.g. https://api.openai.com/v1
    std::string api_key_env;  // empty: no Authorization header
    std::string model_name;
    int max_in_flight = 4;
    RetryPolicy retry;
    std::chrono::milliseconds timeout{600000};
    Sampling defaults;

    [[nodiscard]] static BackendConfig writer_defaults();
    [[nodiscard]] static BackendConfig judge_defaults();

    // Throws UsageError for max_in_flight or max_attempts below 1.
    void validate() const;
};

// A single attempt against a model service. Implementations throw
// TransientError for retryable failures.
class Transport {
public:
    virtual ~Transport() = default;
    virtual ChatResponse send(const ChatRequest& request, const Sampling& sampling) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct BackendStats {
    std::int64_t requests = 0;
    std::int64_t attempts = 0;
    int peak_in_flight = 0;
};

// Retrying, concurrency-bounded client over one Transport. Thread-safe.
class Backend final : public ChatClient {
public:
    static constexpr int kMaxInFlightLimit = 4096;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Backend(BackendConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

    // Retries TransientError up to retry.max_attempts with exponential backoff,
    // then throws ExhaustedRetries. Other errors propagate immediately.
    ChatResponse complete(const ChatRequest& request) override;

    [[nodiscard]] BackendStats stats() const;
    [[nodiscard]] const BackendConfig& config() const noexcept { return config_; }

private:
    BackendConfig config_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    std::counting_semaphore<kMaxInFlightLimit> slots_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
    std::atomic<std::int64_t> requests_{0};
    std::atomic<std::int64_t> attempts_{0};
};

// Dispatches each request to the writer or judge client by its role.
class RoleRouter final : public ChatClient {
public:
    RoleRouter(std::shared_ptr<ChatClient> writer, std::shared_ptr<ChatClient> judge);
    ChatResponse complete(const ChatRequest& request) override;

private:
    std::shared_ptr<ChatClient> writer_;
    std::shared_ptr<ChatClient> judge_;
};

}  // namespace r2write
