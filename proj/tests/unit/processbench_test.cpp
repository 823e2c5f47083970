#include <gtest/gtest.h>

#include <random>

#include "r2write/errors.hpp"
#include "r2write/io.hpp"
#include "r2write/processbench.hpp"
#include "r2write/scripted.hpp"
#include "test_support.hpp"

namespace r2write {
namespace {

std::vector<BenchItem> fixture_items() {
    std::vector<BenchItem> items;
    for (const auto& j : testing::read_jsonl(testing::fixture("bench_items.jsonl"))) items.push_back(bench_item_from_json(j));
    return items;
}

std::shared_ptr<Backend> fixture_backend(int workers = 1) {
    const json script = json::parse(testing::read_text(testing::fixture("bench_script.json")));
    return make_scripted_backend(ScriptedTransport::from_json(script), workers);
}

// Hand counts: b1 2/3, b2 1/1, b3 none, b4 0/4, b5 1/2, b6 none.
TEST(ProcessBench, FixtureMicroAndMacro) {
    const auto items = fixture_items();
    ASSERT_EQ(items.size(), 6u);
    auto backend = fixture_backend();
    const BenchReport report = bench(items, *backend);
    ASSERT_TRUE(report.micro_score.has_value());
    EXPECT_NEAR(*report.micro_score, 4.0 / 10.0, 1e-12);
    EXPECT_NEAR(*report.macro_score, (2.0 / 3.0 + 1.0 + 0.0 + 0.5) / 4.0, 1e-12);
    EXPECT_EQ(report.items_without_segments, 2);
    EXPECT_EQ(report.failed_items, 0);
    ASSERT_EQ(report.per_item.size(), 6u);
    EXPECT_EQ(report.per_item[0].passing, 2);
    EXPECT_EQ(report.per_item[3].k_segments, 4);
    EXPECT_FALSE(report.per_item[5].item_score.has_value());
}

TEST(ProcessBench, ParallelRunMatchesSequential) {
    const auto items = fixture_items();
    auto a = fixture_backend(1);
    auto b = fixture_backend(6);
    EXPECT_EQ(to_json(bench(items, *a, 1)), to_json(bench(items, *b, 6)));
}

TEST(ProcessBench, FailedItemsAreCountedSeparately) {
    auto items = fixture_items();
    items[1].sample = "no tags";
    auto backend = fixture_backend();
    const BenchReport report = bench(items, *backend);
    EXPECT_EQ(report.failed_items, 1);
    EXPECT_NEAR(*report.micro_score, 3.0 / 9.0, 1e-12);
    EXPECT_EQ(to_json(report)["per_item"][1]["error"]["type"], "SampleParseFailure");
}

TEST(ProcessBench, AggregateMatchesOracleOnRandomRecords) {
    std::mt19937 rng(51);
    for (int round = 0; round < 50; ++round) {
        std::vector<BenchItemRecord> records;
        long pass = 0;
        long segs = 0;
        double score_sum = 0;
        int scored = 0;
        for (int i = 0; i < 20; ++i) {
            const int k = static_cast<int>(rng() % 6);
            const int p = k == 0 ? 0 : static_cast<int>(rng() % (k + 1));
            std::vector<SegmentJudgment> js;
            for (int s = 0; s < k; ++s) {
                js.push_back(SegmentJudgment::make(s + 1, Sign::positive, Sign::positive,
                                                   s < p ? Sign::positive : Sign::negative));
            }
            records.push_back(BenchItemRecord::from_judgments("i" + std::to_string(i), {}, js));
            if (k > 0) {
                pass += p;
                segs += k;
                score_sum += static_cast<double>(p) / k;
                ++scored;
            }
        }
        const auto report = aggregate_bench(records);
        if (scored == 0) {
            EXPECT_FALSE(report.micro_score.has_value());
            continue;
        }
        EXPECT_NEAR(*report.micro_score, static_cast<double>(pass) / segs, 1e-12);
        EXPECT_NEAR(*report.macro_score, score_sum / scored, 1e-12);
    }
}

TEST(ProcessBench, RecordJsonRoundTrip) {
    const auto rec = BenchItemRecord::from_judgments(
        "x", {{1, "a"}, {2, "b"}},
        {SegmentJudgment::make(1, Sign::positive, Sign::positive, Sign::positive),
         SegmentJudgment::make(2, Sign::negative, Sign::negative, Sign::positive)});
    const auto back = bench_record_from_json(to_json(rec));
    EXPECT_EQ(back.k_segments, 2);
    EXPECT_EQ(back.passing, 1);
    EXPECT_DOUBLE_EQ(*back.item_score, 0.5);
}

TEST(ProcessBench, ItemSchema) {
    EXPECT_THROW((void)bench_item_from_json(json{{"query", "q"}, {"sample", "s"}}), SchemaError);
    EXPECT_THROW((void)bench_item_from_json(json{{"item_id", "a"}, {"query", "q"}, {"sample", "s"}}), SchemaError);
}

}  // namespace
}  // namespace r2write
