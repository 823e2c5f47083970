#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json_extract.hpp"

namespace r2write::io {

// Calls fn(value, line_number) for each non-blank line. Parse errors and any
// SchemaError thrown by fn are rethrown as SchemaError prefixed "path:line: ".
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

[[nodiscard]] std::string to_jsonl(const std::vector<json>& rows);

// {"type": ..., "message": ...}, the error member of per-item error records.
[[nodiscard]] json error_json(std::string_view type, std::string_view message);

}  // namespace r2write::io
