#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace r2write::prompts {

struct Asset {
    std::string_view name;
    std::string_view text;
};

// Prompt templates compiled in from assets/prompts/*.txt.
[[nodiscard]] std::span<const Asset> all();

// Throws UsageError for an unknown name.
[[nodiscard]] std::string_view get(std::string_view name);

// name -> SHA-256 of the template text, sorted by name.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> checksums();

using Slot = std::pair<std::string_view, std::string_view>;

// Single-pass substitution of "{key}" for each given slot. Braces that do not
// form a given key are copied unchanged, and substituted values are never
// re-scanned.
[[nodiscard]] std::string render(std::string_view tmpl, std::initializer_list<Slot> slots);

}  // namespace r2write::prompts
