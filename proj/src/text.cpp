#include "r2write/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "r2write/errors.hpp"

namespace r2write::text {
namespace {

// Calls on_token(begin, end) with byte offsets of each whitespace-delimited
// token. Ill-formed UTF-8 bytes count as non-whitespace.
template <typename OnToken>
void scan_tokens(std::string_view s, OnToken&& on_token) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
    const auto length = static_cast<std::int32_t>(s.size());
    std::int32_t i = 0;
    std::int32_t token_begin = -1;
    while (i < length) {
        const std::int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        const bool space = c >= 0 && u_isUWhiteSpace(c);
        if (space) {
            if (token_begin >= 0) {
                if (!on_token(static_cast<std::size_t>(token_begin), static_cast<std::size_t>(start))) return;
                token_begin = -1;
            }
        } else if (token_begin < 0) {
            token_begin = start;
        }
    }
    if (token_begin >= 0) on_token(static_cast<std::size_t>(token_begin), s.size());
}

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFC normalizer unavailable");
    return *n;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view utf8) {
    icu::UnicodeString source = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString normalized = nfc().normalize(source, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    normalized.foldCase(U_FOLD_CASE_DEFAULT);
    std::string folded;
    normalized.toUTF8String(folded);

    std::vector<std::string> tokens;
    scan_tokens(folded, [&](std::size_t b, std::size_t e) {
        tokens.emplace_back(folded.substr(b, e - b));
        return true;
    });
    return tokens;
}

std::size_t count_tokens(std::string_view utf8) {
    std::size_t n = 0;
    scan_tokens(utf8, [&](std::size_t, std::size_t) {
        ++n;
        return true;
    });
    return n;
}

std::string keep_tokens(std::string_view utf8, std::size_t n) {
    if (n == 0) return {};
    std::size_t seen = 0;
    std::size_t end = 0;
    scan_tokens(utf8, [&](std::size_t, std::size_t e) {
        end = e;
        return ++seen < n;
    });
    return std::string(utf8.substr(0, end));
}

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace r2write::text
