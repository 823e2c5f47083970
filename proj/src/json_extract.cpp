#include "r2write/json_extract.hpp"

#include <cctype>
#include <optional>

#include "r2write/errors.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

// End offset (exclusive) of the balanced object starting at `open`, or nullopt.
std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) return i + 1;
            if (depth < 0) return std::nullopt;
        }
    }
    return std::nullopt;
}

std::string drop_trailing_commas(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            out += c;
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
        }
        out += c;
    }
    return out;
}

std::string snippet_at(std::string_view s, std::size_t pos) {
    const std::size_t begin = pos > 20 ? pos - 20 : 0;
    return std::string(s.substr(begin, 60));
}

}  // namespace

json extract_json(std::string_view text) {
    std::size_t open = text.find('{');
    if (open == std::string_view::npos) throw NoJsonFound("no JSON object in reply");

    std::optional<std::string> first_failure;
    std::size_t resume = open + 1;
    for (; open != std::string_view::npos; open = text.find('{', resume)) {
        resume = open + 1;
        const auto end = balanced_end(text, open);
        if (!end) {
            if (!first_failure) {
                first_failure = "unbalanced JSON object at offset " + std::to_string(open) + " near '" +
                                snippet_at(text, open) + "'";
            }
            continue;
        }
        const std::string_view candidate = text.substr(open, *end - open);
        json parsed = json::parse(candidate, nullptr, false);
        if (parsed.is_discarded()) parsed = json::parse(drop_trailing_commas(candidate), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        resume = *end;  // nested objects of a rejected candidate are not candidates
        if (!first_failure) {
            std::size_t where = open;
            try {
                json probe = json::parse(candidate);
                static_cast<void>(probe);
            } catch (const json::parse_error& e) {
                where = open + (e.byte > 0 ? e.byte - 1 : 0);
            }
            first_failure = "invalid JSON at offset " + std::to_string(where) + " near '" + snippet_at(text, where) + "'";
        }
    }
    throw JsonSyntax(*first_failure);
}

std::string strip_code_fences(std::string_view raw) {
    std::string s = text::trim(raw);
    if (s.rfind("```", 0) != 0) return s;
    const auto first_newline = s.find('\n');
    if (first_newline == std::string::npos) return s;
    const auto close = s.rfind("```");
    if (close == std::string::npos || close <= first_newline || close + 3 != s.size()) return s;
    return text::trim(std::string_view(s).substr(first_newline + 1, close - first_newline - 1));
}

}  // namespace r2write
