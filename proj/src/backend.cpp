#include "r2write/backend.hpp"

#include <algorithm>
#include <thread>

#include "r2write/errors.hpp"
#include "r2write/hashing.hpp"

namespace r2write {

std::string_view to_string(Role role) noexcept { return role == Role::writer ? "writer" : "judge"; }

std::string_view to_string(Speaker speaker) noexcept {
    switch (speaker) {
        case Speaker::system: return "system";
        case Speaker::user: return "user";
        case Speaker::assistant: return "assistant";
    }
    return "user";
}

void ChatRequest::validate() const {
    if (messages.empty()) throw UsageError("chat request has no messages");
    if (messages.front().speaker == Speaker::assistant) {
        throw UsageError("chat request must start with a system or user message");
    }
    if (sampling && (sampling->temperature < 0.0 || sampling->max_tokens < 1)) {
        throw UsageError("sampling needs temperature >= 0 and max_tokens >= 1");
    }
}

std::string ChatRequest::prompt_digest() const {
    std::string canonical;
    for (const auto& m : messages) {
        canonical += to_string(m.speaker);
        canonical += '\x1f';
        canonical += m.text;
        canonical += '\x1e';
    }
    return sha256_hex(canonical);
}

const std::string& ChatRequest::last_user_text() const {
    static const std::string kEmpty;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->speaker == Speaker::user) return it->text;
    }
    return kEmpty;
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
    const int shift = std::clamp(attempt - 1, 0, 30);
    const auto raw = backoff_base.count() * (std::int64_t{1} << shift);
    return std::chrono::milliseconds(std::min<std::int64_t>(raw, max_backoff.count()));
}

BackendConfig BackendConfig::writer_defaults() {
    BackendConfig c;
    c.defaults = Sampling{0.6, 32768};
    return c;
}

BackendConfig BackendConfig::judge_defaults() {
    BackendConfig c;
    c.defaults = Sampling{0.0, 8192};
    return c;
}

void BackendConfig::validate() const {
    if (max_in_flight < 1 || max_in_flight > Backend::kMaxInFlightLimit) {
        throw UsageError("max_in_flight must be in [1, " + std::to_string(Backend::kMaxInFlightLimit) + "]");
    }
    if (retry.max_attempts < 1) throw UsageError("retry.max_attempts must be >= 1");
    if (defaults.temperature < 0.0 || defaults.max_tokens < 1) {
        throw UsageError("sampling needs temperature >= 0 and max_tokens >= 1");
    }
}

namespace {

int validated_slots(const BackendConfig& config) {
    config.validate();
    return config.max_in_flight;
}

// Holds one in-flight slot for the duration of a transport attempt.
class SlotGuard {
public:
    SlotGuard(std::counting_semaphore<Backend::kMaxInFlightLimit>& slots, std::atomic<int>& in_flight,
              std::atomic<int>& peak)
        : slots_(slots), in_flight_(in_flight) {
        slots_.acquire();
        const int now = ++in_flight_;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
    }
    ~SlotGuard() {
        --in_flight_;
        slots_.release();
    }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<Backend::kMaxInFlightLimit>& slots_;
    std::atomic<int>& in_flight_;
};

}  // namespace

Backend::Backend(BackendConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      slots_(validated_slots(config_)) {
    if (!transport_) throw UsageError("backend needs a transport");
}

ChatResponse Backend::complete(const ChatRequest& request) {
    request.validate();
    ++requests_;
    const Sampling sampling = request.sampling.value_or(config_.defaults);
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        try {
            ++attempts_;
            SlotGuard guard(slots_, in_flight_, peak_in_flight_);
            return transport_->send(request, sampling);
        } catch (const TransientError& e) {
            last_error = e.what();
        }
        if (attempt < config_.retry.max_attempts) {
            const auto delay = config_.retry.delay_after(attempt);
            if (delay.count() > 0) sleeper_(delay);
        }
    }
    throw ExhaustedRetries(last_error, config_.retry.max_attempts);
}

BackendStats Backend::stats() const {
    return BackendStats{requests_.load(), attempts_.load(), peak_in_flight_.load()};
}

RoleRouter::RoleRouter(std::shared_ptr<ChatClient> writer, std::shared_ptr<ChatClient> judge)
    : writer_(std::move(writer)), judge_(std::move(judge)) {
    if (!writer_ || !judge_) throw UsageError("role router needs writer and judge clients");
}

ChatResponse RoleRouter::complete(const ChatRequest& request) {
    return request.role == Role::writer ? writer_->complete(request) : judge_->complete(request);
}

}  // namespace r2write
