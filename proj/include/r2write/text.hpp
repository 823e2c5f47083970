#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Word-level tokenization shared by the corpus filters and n-gram similarity.
// Tokens are maximal runs of non-whitespace code points (Unicode White_Space
// property); the normalized form additionally applies NFC and full case folding.
namespace r2write::text {

// NFC-normalized, case-folded tokens.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view utf8);

[[nodiscard]] std::size_t count_tokens(std::string_view utf8);

// Prefix of the original text that ends with its n-th token. Whitespace inside
// the kept range is preserved byte-for-byte; trailing whitespace is dropped.
[[nodiscard]] std::string keep_tokens(std::string_view utf8, std::size_t n);

[[nodiscard]] std::string trim(std::string_view s);

}  // namespace r2write::text
