#include <gtest/gtest.h>

#include <random>

#include "r2write/text.hpp"

namespace r2write::text {
namespace {

std::vector<std::string> ascii_split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

TEST(Tokenize, SplitsOnWhitespaceAndFoldsCase) {
    EXPECT_EQ(tokenize("  Hello   WORLD\tfoo\nBar "), (std::vector<std::string>{"hello", "world", "foo", "bar"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize(" \t\n").empty());
}

TEST(Tokenize, NormalizesToNfc) {
    // "é" precomposed vs e + combining acute
    EXPECT_EQ(tokenize("caf\xC3\xA9"), tokenize("cafe\xCC\x81"));
}

TEST(Tokenize, TreatsUnicodeSpacesAsSeparators) {
    // U+3000 ideographic space and U+00A0 no-break space
    EXPECT_EQ(tokenize("a\xE3\x80\x80" "b\xC2\xA0" "c").size(), 3u);
}

TEST(Tokenize, MatchesAsciiSplitOracleOnRandomText) {
    std::mt19937 rng(7);
    const std::string alphabet = "abcXYZ  \t\n";
    for (int round = 0; round < 500; ++round) {
        std::string s;
        const int len = static_cast<int>(rng() % 60);
        for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        EXPECT_EQ(tokenize(s), ascii_split(s)) << s;
        EXPECT_EQ(count_tokens(s), ascii_split(s).size()) << s;
    }
}

TEST(KeepTokens, ReturnsOriginalBytesPrefix) {
    EXPECT_EQ(keep_tokens("One two  three four", 2), "One two");
    EXPECT_EQ(keep_tokens("  One two", 1), "  One");
    EXPECT_EQ(keep_tokens("a b", 5), "a b");
    EXPECT_EQ(keep_tokens("a b", 0), "");
}

TEST(KeepTokens, PrefixHasRequestedCountOnRandomText) {
    std::mt19937 rng(11);
    for (int round = 0; round < 300; ++round) {
        std::string s;
        const int words = static_cast<int>(rng() % 20);
        for (int i = 0; i < words; ++i) s += std::string(1 + rng() % 3, static_cast<char>('a' + rng() % 26)) + (rng() % 4 ? " " : "\n\n");
        const std::size_t total = count_tokens(s);
        const std::size_t n = rng() % (total + 2);
        const std::string kept = keep_tokens(s, n);
        EXPECT_EQ(count_tokens(kept), std::min(n, total));
        EXPECT_EQ(s.compare(0, kept.size(), kept), 0);
    }
}

TEST(Trim, StripsAsciiWhitespace) {
    EXPECT_EQ(trim("  a b \n"), "a b");
    EXPECT_EQ(trim(""), "");
    EXPECT_EQ(trim(" \t"), "");
}

}  // namespace
}  // namespace r2write::text
