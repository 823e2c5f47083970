#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "backend.hpp"
#include "corpus.hpp"
#include "diagnostics.hpp"
#include "json_extract.hpp"

namespace r2write {

struct KeyPointRubric {
    int id = 0;
    std::string key_point;
    std::string score_standards;
};

struct QualityCriterion {
    std::string name;
    std::string description;
};

struct RubricSet {
    std::string query_id;
    std::vector<KeyPointRubric> key_points;
    std::vector<QualityCriterion> quality;

    // Throws MalformedRubrics if either list is empty or key-point ids are not 1..N.
    void validate() const;
    // SHA-256 of the canonical JSON form.
    [[nodiscard]] std::string checksum() const;
};

[[nodiscard]] json to_json(const RubricSet& r);
[[nodiscard]] RubricSet rubric_set_from_json(const json& j);

// Judge grades for one answer. Means are recomputed from the lists, never
// taken from the judge.
struct EvaluationReport {
    std::vector<double> keypoint_scores;  // each in {0, 0.5, 1}
    std::vector<double> quality_scores;   // each in [0, 10]
    double s_kp = 0.0;
    double s_quality = 0.0;
    std::string kp_feedback;
    std::string quality_feedback;
    std::vector<std::string> warnings;

    // Quality feedback then key-point feedback, blank-line separated.
    [[nodiscard]] std::string feedback() const;

    [[nodiscard]] static EvaluationReport from_scores(std::vector<double> keypoint_scores,
                                                      std::vector<double> quality_scores,
                                                      std::string kp_feedback = {},
                                                      std::string quality_feedback = {});
};

[[nodiscard]] json to_json(const EvaluationReport& r);

struct ScoreTargets {
    double kp = 1.0;
    double quality = 8.0;
};

[[nodiscard]] bool meets_target(const EvaluationReport& report, const ScoreTargets& targets = {});

// s_kp + s_quality / 10, in [0, 2].
[[nodiscard]] double combined_score(const EvaluationReport& report);

// Nearest of {0, 0.5, 1}; midpoints round down.
[[nodiscard]] double clamp_keypoint_grade(double grade);
[[nodiscard]] double clamp_quality_grade(double grade);

[[nodiscard]] std::vector<KeyPointRubric> parse_keypoint_rubrics(const json& reply);
[[nodiscard]] std::vector<QualityCriterion> parse_quality_criteria(const json& reply, Diagnostics* diag = nullptr);

[[nodiscard]] std::vector<KeyPointRubric> generate_keypoint_rubrics(const Query& query, ChatClient& client);
[[nodiscard]] std::vector<QualityCriterion> generate_quality_criteria(const Query& query, ChatClient& client,
                                                                      Diagnostics* diag = nullptr);
[[nodiscard]] RubricSet generate_rubrics(const Query& query, ChatClient& client, Diagnostics* diag = nullptr);

[[nodiscard]] std::string format_key_points(const std::vector<KeyPointRubric>& key_points);
[[nodiscard]] std::string format_criteria(const std::vector<QualityCriterion>& criteria);
// Both families as one text block, for prompts that take "{rubrics}".
[[nodiscard]] std::string format_rubrics(const RubricSet& rubrics);

// One judge call per rubric family. Out-of-range grades are clamped and
// recorded in warnings. Throws ScoreParseFailure when a reply lacks the
// expected JSON or the number of grades does not match the rubric.
[[nodiscard]] EvaluationReport score_answer(const Query& query, std::string_view answer,
                                            const RubricSet& rubrics, ChatClient& client);

// Scores the query's reference and the given model answer with combined_score.
// Throws UsageError if the query has no reference.
[[nodiscard]] DifficultyRecord measure_difficulty(const Query& query, std::string_view model_answer,
                                                  const RubricSet& rubrics, ChatClient& client);

}  // namespace r2write
