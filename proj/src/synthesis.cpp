#include "r2write/synthesis.hpp"

#include <optional>

#include "r2write/errors.hpp"
#include "r2write/prompts.hpp"
#include "r2write/sample.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

std::string writer_call(ChatClient& client, std::vector<Message> messages, std::string purpose) {
    ChatRequest req;
    req.role = Role::writer;
    req.purpose = std::move(purpose);
    req.messages = std::move(messages);
    return client.complete(req).text;
}

// Scores with up to score_attempts tries on unparseable judge replies. Returns
// nullopt when the judge keeps failing.
std::optional<EvaluationReport> try_score(const Query& query, std::string_view answer, const RubricSet& rubrics,
                                          const SynthesisConfig& config, ChatClient& client,
                                          std::string* last_error) {
    for (int attempt = 1; attempt <= config.score_attempts; ++attempt) {
        try {
            return score_answer(query, answer, rubrics, client);
        } catch (const ScoreParseFailure& e) {
            *last_error = e.what();
        } catch (const ExhaustedRetries& e) {
            *last_error = e.what();
            return std::nullopt;
        } catch (const MalformedResponse& e) {
            *last_error = e.what();
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(StopReason reason) noexcept {
    switch (reason) {
        case StopReason::target_met: return "target_met";
        case StopReason::max_turns: return "max_turns";
        case StopReason::judge_failure: return "judge_failure";
    }
    return "max_turns";
}

void SynthesisConfig::validate() const {
    if (max_turns < 1) throw UsageError("max_turns must be >= 1");
    if (score_attempts < 1) throw UsageError("score_attempts must be >= 1");
}

json to_json(const Turn& turn) {
    return {{"index", turn.index},
            {"reflection", turn.reflection},
            {"thinking", turn.thinking},
            {"answer", turn.answer},
            {"accepted", turn.accepted},
            {"report", to_json(turn.report)}};
}

json to_json(const Trajectory& t, std::string_view rubric_checksum) {
    json turns = json::array();
    for (const auto& turn : t.turns) turns.push_back(to_json(turn));
    return {{"query_id", t.query_id},
            {"sample", t.sample},
            {"final_answer", t.final_answer},
            {"turns", std::move(turns)},
            {"rejected_count", t.rejected_count},
            {"stop_reason", to_string(t.stop_reason)},
            {"rubric_checksum", rubric_checksum}};
}

Draft split_thinking(std::string_view reply) {
    constexpr std::string_view kOpen = "<think>";
    constexpr std::string_view kClose = "</think>";
    const auto close = reply.find(kClose);
    if (close == std::string_view::npos) return {"", text::trim(reply)};
    const auto open = reply.rfind(kOpen, close);
    const std::size_t begin = open == std::string_view::npos ? 0 : open + kOpen.size();
    return {text::trim(reply.substr(begin, close - begin)), text::trim(reply.substr(close + kClose.size()))};
}

Draft initial_draft(const Query& query, ChatClient& client) {
    const std::string reply = writer_call(
        client, {{Speaker::system, std::string(prompts::get("writer_system"))}, {Speaker::user, query.full_text()}},
        "initial_draft");
    if (text::trim(reply).empty()) throw EmptyDraft("writer returned a blank initial draft for '" + query.id + "'");
    Draft draft = split_thinking(reply);
    if (draft.answer.empty()) throw EmptyDraft("writer's initial draft for '" + query.id + "' has no answer");
    return draft;
}

std::string reflect(const Query& query, std::string_view prev_answer, const EvaluationReport& report,
                    ChatClient& client) {
    if (text::trim(report.feedback()).empty()) throw UsageError("reflect needs judge feedback");
    const std::string prompt = prompts::render(prompts::get("self_reflection"),
                                               {{"question", query.full_text()},
                                                {"original_article", prev_answer},
                                                {"feedback_quality", report.quality_feedback},
                                                {"feedback_kpr", report.kp_feedback}});
    std::string reflection = writer_call(client, {{Speaker::user, prompt}}, "reflect");
    if (text::trim(reflection).empty()) throw EmptyDraft("writer returned a blank reflection for '" + query.id + "'");
    return reflection;
}

std::string revise(const Query& query, std::string_view prev_answer, const EvaluationReport& report,
                   std::string_view reflection, ChatClient& client) {
    if (text::trim(reflection).empty()) throw UsageError("revise needs a non-empty reflection");
    const std::string prompt = prompts::render(prompts::get("revision"),
                                               {{"question", query.full_text()},
                                                {"original_article", prev_answer},
                                                {"feedback_quality", report.quality_feedback},
                                                {"feedback_kpr", report.kp_feedback},
                                                {"self_reflection", reflection}});
    const std::string reply = writer_call(client, {{Speaker::user, prompt}}, "revise");
    std::string revised = strip_code_fences(split_thinking(reply).answer);
    if (revised.empty()) throw EmptyDraft("writer returned a blank revision for '" + query.id + "'");
    return revised;
}

std::string assemble(std::span<const Turn> accepted, const SynthesisConfig& config) {
    if (accepted.empty()) throw NoAcceptedTurns("cannot assemble a sample without accepted turns");
    std::string think;
    const auto append = [&](const std::string& part) {
        if (part.empty()) return;
        if (!think.empty()) think += config.separator;
        think += part;
    };
    append(accepted.front().thinking);
    append(accepted.front().answer);
    for (const auto& turn : accepted.subspan(1)) append(turn.reflection);
    return format_sample(think, accepted.back().answer);
}

Trajectory synthesize(const Query& query, const RubricSet& rubrics, const SynthesisConfig& config,
                      ChatClient& client) {
    config.validate();
    rubrics.validate();

    Trajectory traj;
    traj.query_id = query.id;

    Draft draft = initial_draft(query, client);
    std::string judge_error;
    auto first_report = try_score(query, draft.answer, rubrics, config, client, &judge_error);
    if (!first_report) throw JudgeFailure("judge failed on the initial draft of '" + query.id + "': " + judge_error);

    traj.turns.push_back(Turn{0, "", std::move(draft.thinking), std::move(draft.answer), std::move(*first_report), true});

    for (int iteration = 1;; ++iteration) {
        const Turn& best = traj.turns.back();
        if (meets_target(best.report, config.targets)) {
            traj.stop_reason = StopReason::target_met;
            break;
        }
        if (iteration > config.max_turns) {
            traj.stop_reason = StopReason::max_turns;
            break;
        }
        std::string reflection = reflect(query, best.answer, best.report, client);
        std::string revised = revise(query, best.answer, best.report, reflection, client);
        auto report = try_score(query, revised, rubrics, config, client, &judge_error);
        if (!report) {
            traj.stop_reason = StopReason::judge_failure;
            break;
        }
        if (combined_score(*report) > combined_score(best.report)) {
            traj.turns.push_back(Turn{iteration, std::move(reflection), "", std::move(revised), std::move(*report), true});
        } else {
            ++traj.rejected_count;
        }
    }

    traj.final_answer = traj.turns.back().answer;
    traj.sample = assemble(traj.turns, config);
    return traj;
}

}  // namespace r2write
