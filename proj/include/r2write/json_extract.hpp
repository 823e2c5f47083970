#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace r2write {

using json = nlohmann::json;

// Parses the first balanced top-level JSON object found in a model reply.
// Surrounding prose and Markdown code fences are ignored, and a trailing comma
// before a closing bracket is tolerated.
//
// Throws NoJsonFound when the text holds no '{', JsonSyntax (with the byte
// offset and a snippet) when no candidate object parses.
[[nodiscard]] json extract_json(std::string_view text);

// Removes one enclosing ```lang ... ``` fence if the whole (trimmed) text is
// wrapped in one; otherwise returns the trimmed text.
[[nodiscard]] std::string strip_code_fences(std::string_view text);

}  // namespace r2write
