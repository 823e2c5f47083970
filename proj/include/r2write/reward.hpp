#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "backend.hpp"
#include "corpus.hpp"
#include "diagnostics.hpp"
#include "rubric.hpp"

namespace r2write {

enum class Sign : int { negative = -1, positive = 1 };

[[nodiscard]] constexpr int value(Sign s) noexcept { return static_cast<int>(s); }

struct ReflectionSegment {
    int id = 0;
    std::string content;
};

struct SegmentJudgment {
    int segment_id = 0;
    Sign r_find = Sign::negative;
    Sign r_rev = Sign::negative;
    Sign r_align = Sign::negative;
    Sign r_p = Sign::negative;

    [[nodiscard]] static SegmentJudgment make(int segment_id, Sign find, Sign rev, Sign align);
};

// +1 only when all three checks pass.
[[nodiscard]] constexpr Sign segment_reward(Sign find, Sign rev, Sign align) noexcept {
    return (find == Sign::positive && rev == Sign::positive && align == Sign::positive) ? Sign::positive
                                                                                        : Sign::negative;
}

inline constexpr double kDefaultAlpha = 0.25;

struct TotalReward {
    double r_a = 0.0;
    std::optional<double> r_p;  // absent when not computed or no segments
    double r_all = 0.0;
    double alpha = kDefaultAlpha;
    int k_segments = 0;
};

// Mean of the per-segment rewards. Throws EmptyJudgments on an empty list.
[[nodiscard]] double process_reward(std::span<const SegmentJudgment> judgments);

// r_a = 0 gives r_all = 0; no judgments gives r_all = r_a; otherwise
// alpha * r_a + (1 - alpha) * r_p. Throws UsageError for r_a outside
// {0, 0.5, 1} or alpha outside (0, 1).
[[nodiscard]] TotalReward total_reward(double r_a, std::span<const SegmentJudgment> judgments,
                                       double alpha = kDefaultAlpha);

enum class Slot { A, B };
enum class Verdict { A, B, C };

[[nodiscard]] std::string_view to_string(Slot slot) noexcept;
[[nodiscard]] std::string_view to_string(Verdict verdict) noexcept;

// Last [[A]]/[[B]]/[[C]] token in the reply.
[[nodiscard]] std::optional<Verdict> parse_verdict(std::string_view reply);

// Candidate win -> 1, tie -> 0.5, loss -> 0.
[[nodiscard]] double map_verdict(Verdict verdict, Slot candidate_slot) noexcept;

[[nodiscard]] Slot slot_for_seed(std::uint64_t seed);

struct AnswerRewardResult {
    double r_a = 0.0;
    Slot candidate_slot = Slot::A;
    Verdict verdict = Verdict::C;
    int judge_calls = 0;
};

// Pairwise judgment of answer against reference. One re-ask when the reply
// has no verdict token, then VerdictParseFailure.
[[nodiscard]] AnswerRewardResult answer_reward(const Query& query, std::string_view answer,
                                               std::string_view reference,
                                               const std::vector<QualityCriterion>& criteria,
                                               ChatClient& client, std::uint64_t seed);

[[nodiscard]] std::vector<ReflectionSegment> parse_segments(const json& reply, Diagnostics* diag = nullptr);

// Empty thinking returns {} without a model call.
[[nodiscard]] std::vector<ReflectionSegment> extract_segments(std::string_view thinking, const Query& query,
                                                              std::string_view final_answer,
                                                              ChatClient& client, Diagnostics* diag = nullptr);

[[nodiscard]] std::vector<SegmentJudgment> parse_judgments(const json& reply,
                                                           std::span<const ReflectionSegment> segments,
                                                           Diagnostics* diag = nullptr);

// One judge call covering every segment.
[[nodiscard]] std::vector<SegmentJudgment> judge_segments(std::span<const ReflectionSegment> segments,
                                                          const Query& query, std::string_view final_answer,
                                                          const RubricSet* rubrics, ChatClient& client,
                                                          Diagnostics* diag = nullptr);

struct RewardConfig {
    double alpha = kDefaultAlpha;
    std::uint64_t seed = 0;
};

struct RewardAudit {
    std::uint64_t item_seed = 0;
    Slot candidate_slot = Slot::A;
    Verdict verdict = Verdict::C;
    int verdict_calls = 0;
    std::vector<ReflectionSegment> segments;
    std::vector<SegmentJudgment> judgments;
    std::vector<std::string> warnings;
};

struct RewardResult {
    TotalReward reward;
    RewardAudit audit;
};

[[nodiscard]] json to_json(const RewardResult& result);

// Per-item coin-flip seed; depends only on the global seed and item content.
[[nodiscard]] std::uint64_t item_seed(std::uint64_t seed, const Query& query, std::string_view sample);

// Answer reward first; segment extraction and judging run only when r_a > 0.
// Throws SampleParseFailure for a sample without think/answer blocks.
[[nodiscard]] RewardResult reward_sample(std::string_view sample, const Query& query, std::string_view reference,
                                         const RubricSet* rubrics, const RewardConfig& config,
                                         ChatClient& client);

// Request schema shared by batch files and POST /v1/reward.
struct RewardRequest {
    std::optional<json> id;
    Query query;
    std::string sample;
    std::string reference;
    std::optional<RubricSet> rubrics;
    std::optional<double> alpha;
};

// Throws SchemaError naming the offending field.
[[nodiscard]] RewardRequest reward_request_from_json(const json& j);

// Reward JSON for a parsed request, id echoed when given. Throws on failure.
[[nodiscard]] json reward_json(const RewardRequest& request, const RewardConfig& config, ChatClient& client);

// Reward JSON (id echoed when given), or an error record {id?, error: {type, message}}.
[[nodiscard]] json reward_response(const json& request, const RewardConfig& config, ChatClient& client);

// Responses in input order; items run concurrently on `workers` threads and
// a failing item yields an error record in place.
[[nodiscard]] std::vector<json> batch_reward(std::span<const json> requests, const RewardConfig& config,
                                             ChatClient& client, int workers);

}  // namespace r2write
