#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "backend.hpp"
#include "corpus.hpp"
#include "rubric.hpp"

namespace r2write {

struct Turn {
    int index = 0;
    std::string reflection;  // empty for turn 0
    std::string thinking;    // turn 0 only
    std::string answer;
    EvaluationReport report;
    bool accepted = false;
};

enum class StopReason { target_met, max_turns, judge_failure };

[[nodiscard]] std::string_view to_string(StopReason reason) noexcept;

struct SynthesisConfig {
    int max_turns = 3;  // refinement iterations after the initial draft
    ScoreTargets targets;
    std::string separator = "\n\n";
    int score_attempts = 2;  // judge calls per scoring before giving up

    void validate() const;
};

struct Trajectory {
    std::string query_id;
    std::vector<Turn> turns;  // accepted turns only, in order
    int rejected_count = 0;
    std::string final_answer;
    std::string sample;
    StopReason stop_reason = StopReason::max_turns;
};

[[nodiscard]] json to_json(const Turn& turn);
[[nodiscard]] json to_json(const Trajectory& trajectory, std::string_view rubric_checksum);

struct Draft {
    std::string thinking;
    std::string answer;
};

// Splits a writer reply on its <think>...</think> block. Without one, the
// whole reply is the answer.
[[nodiscard]] Draft split_thinking(std::string_view reply);

// One writer call. Throws EmptyDraft on a blank reply or blank answer.
[[nodiscard]] Draft initial_draft(const Query& query, ChatClient& client);

// Writer call with the self-reflection prompt. Throws UsageError if the report
// carries no feedback.
[[nodiscard]] std::string reflect(const Query& query, std::string_view prev_answer,
                                  const EvaluationReport& report, ChatClient& client);

// Writer call with the revision prompt; a fenced reply is unwrapped. Throws
// UsageError on an empty reflection and EmptyDraft on a blank reply.
[[nodiscard]] std::string revise(const Query& query, std::string_view prev_answer,
                                 const EvaluationReport& report, std::string_view reflection,
                                 ChatClient& client);

// Writer-judge loop: draft, score, then up to max_turns reflect/revise/score
// iterations while the best accepted report misses the targets. A revision is
// accepted only if its combined score beats the best accepted score; a
// rejected revision still consumes an iteration.
[[nodiscard]] Trajectory synthesize(const Query& query, const RubricSet& rubrics,
                                    const SynthesisConfig& config, ChatClient& client);

// `<think>` thinking₀ ⊕ answer₀ ⊕ reflection₁ ⊕ … `</think><answer>` final `</answer>`.
// Empty parts are skipped. Throws NoAcceptedTurns on an empty span.
[[nodiscard]] std::string assemble(std::span<const Turn> accepted, const SynthesisConfig& config);

}  // namespace r2write
