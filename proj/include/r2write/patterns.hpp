#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "backend.hpp"
#include "diagnostics.hpp"
#include "json_extract.hpp"

namespace r2write {

enum class PatternKind { answer_verification, backtracking, subgoal_setting, backward_chaining, summarization };

inline constexpr std::array<PatternKind, 5> kPatternKinds = {
    PatternKind::answer_verification, PatternKind::backtracking, PatternKind::subgoal_setting,
    PatternKind::backward_chaining, PatternKind::summarization};

[[nodiscard]] std::string_view to_string(PatternKind kind) noexcept;

enum class Contribution { yes, no, na };

[[nodiscard]] std::string_view to_string(Contribution c) noexcept;

struct PatternInstance {
    PatternKind kind = PatternKind::answer_verification;
    std::string content;
    Contribution contribution = Contribution::na;
};

struct PatternReport {
    std::string trace_id;
    std::vector<PatternInstance> instances;
    std::array<int, 5> counts{};  // indexed like kPatternKinds

    [[nodiscard]] int count(PatternKind kind) const noexcept { return counts[static_cast<std::size_t>(kind)]; }
};

[[nodiscard]] json to_json(const PatternReport& r);
// Inverse of to_json(PatternReport).
[[nodiscard]] PatternReport pattern_report_from_json(const json& j);

// Math traces are judged against a ground truth, writing traces against rubrics.
enum class TraceTask { math, writing };

// Throws PatternParseFailure for a missing kind or malformed entry and
// UnknownContribution for a contribution outside yes/no/na.
[[nodiscard]] PatternReport parse_pattern_report(const json& reply, std::string trace_id,
                                                 Diagnostics* diag = nullptr);

[[nodiscard]] std::string render_pattern_prompt(std::string_view question, std::string_view reasoning,
                                                std::string_view truth_or_rubrics, TraceTask task);

// Throws UsageError on empty reasoning.
[[nodiscard]] PatternReport classify_patterns(std::string trace_id, std::string_view question,
                                              std::string_view reasoning, std::string_view truth_or_rubrics,
                                              TraceTask task, ChatClient& client, Diagnostics* diag = nullptr);

struct PatternShare {
    PatternKind kind = PatternKind::answer_verification;
    int instances = 0;
    int yes = 0;
    int no = 0;
    int na = 0;
    std::optional<double> share;    // instances / all instances
    std::optional<double> helpful;  // yes / (yes + no)
};

// Pooled over all reports.
[[nodiscard]] std::array<PatternShare, 5> pattern_distribution(std::span<const PatternReport> reports);

[[nodiscard]] json to_json(const std::array<PatternShare, 5>& dist);

// Header "kind,share,helpful" and one row per kind; absent values are empty.
[[nodiscard]] std::string distribution_csv(const std::array<PatternShare, 5>& dist);

enum class RevisionCategory { RA, FLC, QE };

inline constexpr std::array<RevisionCategory, 3> kRevisionCategories = {RevisionCategory::RA, RevisionCategory::FLC,
                                                                         RevisionCategory::QE};

[[nodiscard]] std::string_view to_string(RevisionCategory c) noexcept;

struct RevisionInstance {
    RevisionCategory category = RevisionCategory::QE;
    std::string content;
    std::string contribution_note;
};

[[nodiscard]] std::vector<RevisionInstance> parse_revisions(const json& reply);

[[nodiscard]] json to_json(const RevisionInstance& r);

[[nodiscard]] std::vector<RevisionInstance> classify_revisions(std::string_view question, std::string_view reasoning,
                                                               std::string_view rubrics, ChatClient& client);

struct RevisionDistribution {
    std::array<int, 3> counts{};
    std::array<std::optional<double>, 3> percent;  // indexed like kRevisionCategories
};

[[nodiscard]] RevisionDistribution revision_distribution(std::span<const RevisionInstance> instances);

[[nodiscard]] json to_json(const RevisionDistribution& d);

}  // namespace r2write
