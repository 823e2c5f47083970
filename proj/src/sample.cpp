#include "r2write/sample.hpp"

#include "r2write/errors.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

ParsedSample parse_sample(std::string_view raw) {
    const std::string s = text::trim(raw);
    const std::string_view v = s;
    if (!v.starts_with(kThinkOpen)) throw SampleParseFailure("sample does not start with <think>");
    if (!v.ends_with(kAnswerClose)) throw SampleParseFailure("sample does not end with </answer>");

    // The think block ends at the first </think> followed (after whitespace) by <answer>.
    for (std::size_t close = v.find(kThinkClose, kThinkOpen.size()); close != std::string_view::npos;
         close = v.find(kThinkClose, close + 1)) {
        std::size_t next = close + kThinkClose.size();
        while (next < v.size() && is_space(v[next])) ++next;
        if (v.substr(next, kAnswerOpen.size()) != kAnswerOpen) continue;
        const std::size_t answer_begin = next + kAnswerOpen.size();
        const std::size_t answer_end = v.size() - kAnswerClose.size();
        if (answer_end < answer_begin) break;
        return ParsedSample{std::string(v.substr(kThinkOpen.size(), close - kThinkOpen.size())),
                            std::string(v.substr(answer_begin, answer_end - answer_begin))};
    }
    throw SampleParseFailure("sample has no </think> followed by an <answer> block");
}

std::string format_sample(std::string_view think, std::string_view answer) {
    std::string out;
    out.reserve(think.size() + answer.size() + 32);
    out += kThinkOpen;
    out += think;
    out += kThinkClose;
    out += kAnswerOpen;
    out += answer;
    out += kAnswerClose;
    return out;
}

}  // namespace r2write
