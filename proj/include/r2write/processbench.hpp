#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "backend.hpp"
#include "corpus.hpp"
#include "reward.hpp"
#include "rubric.hpp"

namespace r2write {

struct BenchItem {
    std::string item_id;
    Query query;
    std::string sample;
    RubricSet rubrics;
};

[[nodiscard]] BenchItem bench_item_from_json(const json& j);

struct BenchItemRecord {
    std::string item_id;
    int k_segments = 0;
    int passing = 0;
    std::optional<double> item_score;  // absent when k_segments == 0 or failed
    std::optional<std::string> error_type;
    std::optional<std::string> error_message;
    std::vector<ReflectionSegment> segments;
    std::vector<SegmentJudgment> judgments;
    std::vector<std::string> warnings;

    [[nodiscard]] bool failed() const noexcept { return error_type.has_value(); }
    [[nodiscard]] static BenchItemRecord from_judgments(std::string item_id, std::vector<ReflectionSegment> segments,
                                                        std::vector<SegmentJudgment> judgments);
};

// micro = sum(passing) / sum(k_segments); macro = mean(item_score). Both over
// non-failed items with k_segments > 0.
struct BenchReport {
    std::vector<BenchItemRecord> per_item;  // sorted by item_id
    std::optional<double> micro_score;
    std::optional<double> macro_score;
    int items_without_segments = 0;
    int failed_items = 0;
};

[[nodiscard]] json to_json(const BenchItemRecord& r);
// Inverse of to_json(BenchItemRecord); reads the counts, score and error.
[[nodiscard]] BenchItemRecord bench_record_from_json(const json& j);
[[nodiscard]] json to_json(const BenchReport& r);

// Segment extraction and judging for one item.
[[nodiscard]] BenchItemRecord bench_item(const BenchItem& item, ChatClient& client);

[[nodiscard]] BenchReport aggregate_bench(std::vector<BenchItemRecord> records);

[[nodiscard]] BenchReport bench(std::span<const BenchItem> items, ChatClient& client, int workers = 1);

}  // namespace r2write
