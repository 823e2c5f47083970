#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json_extract.hpp"

namespace r2write {

enum class TaskKind { creative, report };

[[nodiscard]] std::string_view to_string(TaskKind kind) noexcept;

// One writing task. Report tasks may carry retrieved materials, which are
// appended to the query text when the task is presented to a model.
struct Query {
    std::string id;
    std::string text;
    TaskKind task_kind = TaskKind::creative;
    std::string category;
    std::vector<std::string> materials;
    std::optional<std::string> reference;
    json extra = json::object();  // unknown fields, kept for round-trip

    // Query text followed by each material, separated by blank lines.
    [[nodiscard]] std::string full_text() const;
};

// Throws SchemaError on missing/mistyped fields or materials on a creative query.
[[nodiscard]] Query query_from_json(const json& j);
[[nodiscard]] json to_json(const Query& q);

struct DifficultyRecord {
    std::string query_id;
    double s_ref = 0.0;
    double s_model = 0.0;
    double gap = 0.0;

    [[nodiscard]] static DifficultyRecord from_scores(std::string query_id, double s_ref, double s_model) {
        return {std::move(query_id), s_ref, s_model, s_ref - s_model};
    }
};

[[nodiscard]] DifficultyRecord difficulty_from_json(const json& j);
[[nodiscard]] json to_json(const DifficultyRecord& r);

struct CurateStats {
    std::size_t input_count = 0;
    std::size_t short_dropped = 0;
    std::size_t dup_dropped = 0;
    std::size_t truncated = 0;
    std::size_t output_count = 0;
};

[[nodiscard]] json to_json(const CurateStats& s);

namespace corpus {

inline constexpr std::size_t kDefaultMinTokens = 10;
inline constexpr double kDefaultDedupThreshold = 0.7;
inline constexpr std::size_t kDefaultMaxTokens = 10000;

// Queries whose text has at least min_tokens tokens, in input order.
[[nodiscard]] std::vector<Query> filter_short(std::span<const Query> queries,
                                              std::size_t min_tokens = kDefaultMinTokens);

// |A ∩ B| / |A ∪ B| over word 3-gram sets. A text with fewer than three tokens
// contributes a single gram: its tokens padded with empty strings.
[[nodiscard]] double jaccard_3gram(std::string_view a, std::string_view b);

// Greedy first-wins near-duplicate removal: a query is dropped iff its
// similarity to some earlier retained query exceeds threshold.
[[nodiscard]] std::vector<Query> dedup(std::span<const Query> queries,
                                       double threshold = kDefaultDedupThreshold);

// Caps text plus materials at max_tokens, trimming materials from the tail
// first, then the text. Materials trimmed to nothing are removed.
[[nodiscard]] Query truncate(const Query& query, std::size_t max_tokens = kDefaultMaxTokens);

// The k records with the largest gap, ordered by (-gap, query_id).
[[nodiscard]] std::vector<DifficultyRecord> rank_by_gap(std::span<const DifficultyRecord> records,
                                                        std::size_t k);

}  // namespace corpus
}  // namespace r2write
