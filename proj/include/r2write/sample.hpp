#pragma once

#include <string>
#include <string_view>

namespace r2write {

// The two blocks of an assembled training sample
// `<think>THINK</think><answer>ANSWER</answer>`.
struct ParsedSample {
    std::string think;
    std::string answer;
};

// Leading/trailing whitespace around the blocks is allowed; anything else
// outside them, or a missing tag, throws SampleParseFailure.
[[nodiscard]] ParsedSample parse_sample(std::string_view sample);

[[nodiscard]] std::string format_sample(std::string_view think, std::string_view answer);

}  // namespace r2write
