#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "r2write/corpus.hpp"
#include "r2write/errors.hpp"
#include "r2write/text.hpp"
#include "test_support.hpp"

namespace r2write {
namespace {

using testing::make_query;

// Brute-force reference: word 3-gram sets of a lower-case ASCII text.
std::set<std::tuple<std::string, std::string, std::string>> gram_set(const std::string& s) {
    std::vector<std::string> w;
    std::string cur;
    for (char c : s + " ") {
        if (c == ' ') {
            if (!cur.empty()) w.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::set<std::tuple<std::string, std::string, std::string>> out;
    if (w.size() < 3) {
        w.resize(3);
        out.insert({w[0], w[1], w[2]});
        return out;
    }
    for (std::size_t i = 0; i + 2 < w.size(); ++i) out.insert({w[i], w[i + 1], w[i + 2]});
    return out;
}

double oracle_jaccard(const std::string& a, const std::string& b) {
    const auto ga = gram_set(a);
    const auto gb = gram_set(b);
    std::size_t shared = 0;
    for (const auto& g : ga) shared += gb.count(g);
    return static_cast<double>(shared) / static_cast<double>(ga.size() + gb.size() - shared);
}

std::vector<std::string> oracle_dedup(const std::vector<std::string>& texts, double threshold) {
    std::vector<std::string> kept;
    for (const auto& t : texts) {
        bool dup = false;
        for (const auto& k : kept) dup = dup || oracle_jaccard(t, k) > threshold;
        if (!dup) kept.push_back(t);
    }
    return kept;
}

std::string random_text(std::mt19937& rng, int words, int vocab) {
    std::string s;
    for (int i = 0; i < words; ++i) {
        if (i) s += ' ';
        s += "w" + std::to_string(rng() % vocab);
    }
    return s;
}

TEST(QuerySchema, RoundTripsKnownAndUnknownFields) {
    const json in = {{"id", "q1"},        {"text", "Write a report"}, {"task_kind", "report"}, {"category", "finance"},
                     {"materials", {"m1"}}, {"reference", "ref"},     {"lang", "en"}};
    const Query q = query_from_json(in);
    EXPECT_EQ(q.task_kind, TaskKind::report);
    EXPECT_EQ(q.materials.size(), 1u);
    EXPECT_EQ(q.extra["lang"], "en");
    const json out = to_json(q);
    EXPECT_EQ(out["lang"], "en");
    EXPECT_EQ(query_from_json(out).full_text(), "Write a report\n\nm1");
}

TEST(QuerySchema, RejectsBadRecords) {
    EXPECT_THROW((void)query_from_json(json{{"text", "x"}}), SchemaError);
    EXPECT_THROW((void)query_from_json(json{{"id", "a"}, {"text", 3}}), SchemaError);
    EXPECT_THROW((void)query_from_json(json{{"id", "a"}, {"text", "t"}, {"task_kind", "poem"}}), SchemaError);
    EXPECT_THROW((void)query_from_json(json{{"id", "a"}, {"text", "t"}, {"materials", {"m"}}}), SchemaError);
}

TEST(FilterShort, KeepsQueriesAtOrAboveMinimum) {
    const std::vector<Query> qs = {make_query("a", "one two three four five six seven eight nine"),
                                   make_query("b", "one two three four five six seven eight nine ten"),
                                   make_query("c", "")};
    const auto kept = corpus::filter_short(qs);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].id, "b");
}

TEST(Jaccard, IdenticalTextsScoreOne) {
    EXPECT_DOUBLE_EQ(corpus::jaccard_3gram("a b c d", "a b c d"), 1.0);
    EXPECT_DOUBLE_EQ(corpus::jaccard_3gram("A B c", "a b C"), 1.0);
}

TEST(Jaccard, ShortTextsUsePaddedGram) {
    EXPECT_DOUBLE_EQ(corpus::jaccard_3gram("a b", "a b"), 1.0);
    EXPECT_DOUBLE_EQ(corpus::jaccard_3gram("a b", "a c"), 0.0);
}

TEST(Jaccard, MatchesSetOracleOnRandomTexts) {
    std::mt19937 rng(3);
    for (int i = 0; i < 300; ++i) {
        const std::string a = random_text(rng, 1 + static_cast<int>(rng() % 15), 6);
        const std::string b = random_text(rng, 1 + static_cast<int>(rng() % 15), 6);
        EXPECT_NEAR(corpus::jaccard_3gram(a, b), oracle_jaccard(a, b), 1e-15) << a << " | " << b;
    }
}

TEST(Dedup, SimilarityExactlyAtThresholdIsKept) {
    // 7 shared grams out of 10 in the union gives exactly 0.7.
    const std::string a = "a b c d e f g h i";
    const std::string b = "a b c d e f g h i x y z";
    ASSERT_NEAR(oracle_jaccard(a, b), 0.7, 1e-12);
    const std::vector<Query> qs = {make_query("1", a), make_query("2", b)};
    EXPECT_EQ(corpus::dedup(qs, 0.7).size(), 2u);
    EXPECT_EQ(corpus::dedup(qs, 0.69).size(), 1u);
}

TEST(Dedup, FirstOccurrenceWins) {
    const std::vector<Query> qs = {make_query("first", "the quick brown fox jumps over the lazy dog"),
                                   make_query("second", "the quick brown fox jumps over the lazy dog today"),
                                   make_query("third", "an entirely different request about tax law")};
    const auto kept = corpus::dedup(qs);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].id, "first");
    EXPECT_EQ(kept[1].id, "third");
}

TEST(Dedup, MatchesBruteForceOracle) {
    std::mt19937 rng(5);
    for (int round = 0; round < 20; ++round) {
        std::vector<std::string> texts;
        for (int i = 0; i < 40; ++i) {
            if (!texts.empty() && rng() % 3 == 0) {
                std::string base = texts[rng() % texts.size()];
                base += " " + random_text(rng, static_cast<int>(rng() % 3), 50);
                texts.push_back(base);
            } else {
                texts.push_back(random_text(rng, 10 + static_cast<int>(rng() % 10), 30));
            }
        }
        std::vector<Query> qs;
        for (std::size_t i = 0; i < texts.size(); ++i) qs.push_back(make_query(std::to_string(i), texts[i]));
        std::vector<std::string> got;
        for (const auto& q : corpus::dedup(qs, 0.7)) got.push_back(q.text);
        EXPECT_EQ(got, oracle_dedup(texts, 0.7));
    }
}

TEST(Dedup, IsIdempotent) {
    std::mt19937 rng(9);
    std::vector<Query> qs;
    for (int i = 0; i < 50; ++i) qs.push_back(make_query(std::to_string(i), random_text(rng, 6, 8)));
    const auto once = corpus::dedup(qs);
    const auto twice = corpus::dedup(once);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].id, twice[i].id);
}

TEST(Truncate, TrimsMaterialsFromTheTailFirst) {
    Query q = make_query("r", "one two three");
    q.task_kind = TaskKind::report;
    q.materials = {"m1 m2 m3", "n1 n2 n3 n4"};
    const Query t = corpus::truncate(q, 8);
    EXPECT_EQ(t.text, "one two three");
    ASSERT_EQ(t.materials.size(), 2u);
    EXPECT_EQ(t.materials[1], "n1 n2");

    const Query u = corpus::truncate(q, 5);
    ASSERT_EQ(u.materials.size(), 1u);
    EXPECT_EQ(u.materials[0], "m1 m2");

    const Query v = corpus::truncate(q, 2);
    EXPECT_TRUE(v.materials.empty());
    EXPECT_EQ(v.text, "one two");
}

TEST(Truncate, LeavesShortQueriesAlone) {
    const Query q = make_query("c", "short text");
    EXPECT_EQ(corpus::truncate(q, 10).text, "short text");
}

TEST(Truncate, OutputNeverExceedsLimit) {
    std::mt19937 rng(13);
    for (int i = 0; i < 200; ++i) {
        Query q = make_query("x", random_text(rng, static_cast<int>(rng() % 30), 100));
        q.task_kind = TaskKind::report;
        for (int m = 0; m < static_cast<int>(rng() % 4); ++m) q.materials.push_back(random_text(rng, 1 + rng() % 20, 100));
        const std::size_t limit = 1 + rng() % 40;
        const Query t = corpus::truncate(q, limit);
        std::size_t total = text::count_tokens(t.text);
        for (const auto& m : t.materials) total += text::count_tokens(m);
        std::size_t before = text::count_tokens(q.text);
        for (const auto& m : q.materials) before += text::count_tokens(m);
        EXPECT_EQ(total, std::min(limit, before));
    }
}

TEST(RankByGap, OrdersByGapThenId) {
    const std::vector<DifficultyRecord> rs = {DifficultyRecord::from_scores("b", 1.5, 1.0),
                                              DifficultyRecord::from_scores("a", 1.5, 1.0),
                                              DifficultyRecord::from_scores("c", 1.9, 1.0),
                                              DifficultyRecord::from_scores("d", 1.0, 1.2)};
    const auto top = corpus::rank_by_gap(rs, 3);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top[0].query_id, "c");
    EXPECT_EQ(top[1].query_id, "a");
    EXPECT_EQ(top[2].query_id, "b");
    EXPECT_EQ(corpus::rank_by_gap(rs, 10).size(), 4u);
    EXPECT_THROW((void)corpus::rank_by_gap(rs, 0), UsageError);
}

TEST(RankByGap, MatchesFullSortOracle) {
    std::mt19937 rng(17);
    for (int round = 0; round < 20; ++round) {
        std::vector<DifficultyRecord> rs;
        for (int i = 0; i < 200; ++i) {
            rs.push_back(DifficultyRecord::from_scores("q" + std::to_string(rng() % 1000), (rng() % 20) / 10.0,
                                                       (rng() % 20) / 10.0));
        }
        auto sorted = rs;
        std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            return std::tie(b.gap, a.query_id) < std::tie(a.gap, b.query_id);
        });
        const std::size_t k = 1 + rng() % 250;
        const auto top = corpus::rank_by_gap(rs, k);
        ASSERT_EQ(top.size(), std::min<std::size_t>(k, rs.size()));
        for (std::size_t i = 0; i < top.size(); ++i) {
            EXPECT_EQ(top[i].query_id, sorted[i].query_id);
            EXPECT_EQ(top[i].gap, sorted[i].gap);
        }
    }
}

TEST(DifficultyRecord, GapIsReferenceMinusModel) {
    const auto r = difficulty_from_json(json{{"query_id", "q"}, {"s_ref", 1.7}, {"s_model", 1.2}});
    EXPECT_DOUBLE_EQ(r.gap, 1.7 - 1.2);
    EXPECT_THROW((void)difficulty_from_json(json{{"query_id", "q"}, {"s_ref", "x"}, {"s_model", 1}}), SchemaError);
}

}  // namespace
}  // namespace r2write
