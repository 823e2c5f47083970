#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace r2write {

// Collects non-fatal warnings (clamped grades, count mismatches, ...).
class Diagnostics {
public:
    void warn(std::string message) {
        std::lock_guard lock(mu_);
        messages_.push_back(std::move(message));
    }
    [[nodiscard]] std::vector<std::string> messages() const {
        std::lock_guard lock(mu_);
        return messages_;
    }

private:
    mutable std::mutex mu_;
    std::vector<std::string> messages_;
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace r2write
