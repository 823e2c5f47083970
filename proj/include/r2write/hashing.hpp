#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace r2write {

[[nodiscard]] std::string sha256_hex(std::string_view data);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace r2write
