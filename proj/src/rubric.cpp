#include "r2write/rubric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "r2write/errors.hpp"
#include "r2write/hashing.hpp"
#include "r2write/prompts.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::string nonempty_string(const json& entry, std::string_view field, const std::string& where) {
    const auto it = entry.find(field);
    if (it == entry.end()) throw MalformedRubrics(where + ": missing '" + std::string(field) + "'");
    if (!it->is_string() || text::trim(it->get<std::string>()).empty()) {
        throw MalformedRubrics(where + ": '" + std::string(field) + "' must be a non-empty string");
    }
    return it->get<std::string>();
}

json ask_json(ChatClient& client, Role role, std::string prompt, std::string purpose) {
    ChatRequest req;
    req.role = role;
    req.purpose = std::move(purpose);
    req.messages.push_back({Speaker::user, std::move(prompt)});
    return extract_json(client.complete(req).text);
}

struct GradedReply {
    std::vector<double> grades;
    std::vector<std::string> reasons;
    std::string feedback;
};

// Reads {"scores": [...], "feedback": "..."} holding exactly `expected` grades.
// Entries may be bare numbers or objects with "score"; when every entry has an
// integer "id", entries are ordered by it and must cover 1..expected.
GradedReply parse_grades(const json& reply, std::size_t expected, std::string_view family) {
    const std::string what = std::string(family) + " scoring reply";
    const auto scores = reply.find("scores");
    if (scores == reply.end() || !scores->is_array()) throw ScoreParseFailure(what + " has no 'scores' array");
    if (scores->size() != expected) {
        throw ScoreParseFailure(what + " has " + std::to_string(scores->size()) + " grades, expected " +
                                std::to_string(expected));
    }
    std::vector<const json*> entries;
    for (const auto& e : *scores) entries.push_back(&e);
    const bool all_ids = std::all_of(entries.begin(), entries.end(), [](const json* e) {
        return e->is_object() && e->contains("id") && (*e)["id"].is_number_integer();
    });
    if (all_ids) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const json* a, const json* b) { return (*a)["id"].get<long>() < (*b)["id"].get<long>(); });
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if ((*entries[i])["id"].get<long>() != static_cast<long>(i + 1)) {
                throw ScoreParseFailure(what + " ids must cover 1.." + std::to_string(expected));
            }
        }
    }
    GradedReply out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const json& e = *entries[i];
        const json* score = &e;
        std::string reason;
        if (e.is_object()) {
            const auto it = e.find("score");
            if (it == e.end()) throw ScoreParseFailure(what + " entry " + std::to_string(i + 1) + " has no 'score'");
            score = &*it;
            if (const auto r = e.find("reason"); r != e.end() && r->is_string()) reason = r->get<std::string>();
        }
        if (!score->is_number() || !std::isfinite(score->get<double>())) {
            throw ScoreParseFailure(what + " entry " + std::to_string(i + 1) + " score is not a finite number");
        }
        out.grades.push_back(score->get<double>());
        out.reasons.push_back(std::move(reason));
    }
    if (const auto fb = reply.find("feedback"); fb != reply.end() && fb->is_string()) out.feedback = fb->get<std::string>();
    return out;
}

json judge_reply(ChatClient& client, std::string prompt, std::string purpose, std::string_view family) {
    try {
        return ask_json(client, Role::judge, std::move(prompt), std::move(purpose));
    } catch (const NoJsonFound& e) {
        throw ScoreParseFailure(std::string(family) + " scoring reply: " + e.what());
    } catch (const JsonSyntax& e) {
        throw ScoreParseFailure(std::string(family) + " scoring reply: " + e.what());
    }
}

}  // namespace

void RubricSet::validate() const {
    if (key_points.empty()) throw MalformedRubrics("rubric set '" + query_id + "' has no key points");
    if (quality.empty()) throw MalformedRubrics("rubric set '" + query_id + "' has no quality criteria");
    for (std::size_t i = 0; i < key_points.size(); ++i) {
        if (key_points[i].id != static_cast<int>(i + 1)) {
            throw MalformedRubrics("rubric set '" + query_id + "' key-point ids must be 1.." +
                                   std::to_string(key_points.size()));
        }
    }
}

std::string RubricSet::checksum() const { return sha256_hex(to_json(*this).dump()); }

json to_json(const RubricSet& r) {
    json kps = json::array();
    for (const auto& k : r.key_points) {
        kps.push_back({{"id", k.id}, {"key_point", k.key_point}, {"score_standards", k.score_standards}});
    }
    json quality = json::array();
    for (const auto& q : r.quality) quality.push_back({{"name", q.name}, {"description", q.description}});
    return {{"query_id", r.query_id}, {"key_points", std::move(kps)}, {"quality", std::move(quality)}};
}

RubricSet rubric_set_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("rubric set must be a JSON object");
    RubricSet r;
    if (const auto it = j.find("query_id"); it != j.end()) {
        if (!it->is_string()) throw SchemaError("field 'query_id' must be a string");
        r.query_id = it->get<std::string>();
    }
    try {
        json as_reply = {{"rubrics", j.value("key_points", json::array())}};
        r.key_points = parse_keypoint_rubrics(as_reply);
        json as_criteria = {{"EVAL_CRITERIA", j.value("quality", json::array())}};
        r.quality = parse_quality_criteria(as_criteria);
    } catch (const MalformedRubrics& e) {
        throw SchemaError(std::string("rubrics: ") + e.what());
    }
    return r;
}

std::string EvaluationReport::feedback() const {
    if (quality_feedback.empty()) return kp_feedback;
    if (kp_feedback.empty()) return quality_feedback;
    return quality_feedback + "\n\n" + kp_feedback;
}

EvaluationReport EvaluationReport::from_scores(std::vector<double> keypoint_scores, std::vector<double> quality_scores,
                                               std::string kp_feedback, std::string quality_feedback) {
    EvaluationReport r;
    r.keypoint_scores = std::move(keypoint_scores);
    r.quality_scores = std::move(quality_scores);
    r.s_kp = mean(r.keypoint_scores);
    r.s_quality = mean(r.quality_scores);
    r.kp_feedback = std::move(kp_feedback);
    r.quality_feedback = std::move(quality_feedback);
    return r;
}

json to_json(const EvaluationReport& r) {
    return {{"keypoint_scores", r.keypoint_scores},
            {"quality_scores", r.quality_scores},
            {"s_kp", r.s_kp},
            {"s_quality", r.s_quality},
            {"combined", combined_score(r)},
            {"kp_feedback", r.kp_feedback},
            {"quality_feedback", r.quality_feedback},
            {"warnings", r.warnings}};
}

bool meets_target(const EvaluationReport& report, const ScoreTargets& targets) {
    return report.s_kp >= targets.kp && report.s_quality >= targets.quality;
}

double combined_score(const EvaluationReport& report) { return report.s_kp + report.s_quality / 10.0; }

double clamp_keypoint_grade(double grade) {
    if (grade <= 0.25) return 0.0;
    if (grade <= 0.75) return 0.5;
    return 1.0;
}

double clamp_quality_grade(double grade) { return std::clamp(grade, 0.0, 10.0); }

std::vector<KeyPointRubric> parse_keypoint_rubrics(const json& reply) {
    const auto it = reply.find("rubrics");
    if (it == reply.end() || !it->is_array()) throw MalformedRubrics("reply has no 'rubrics' array");
    if (it->empty()) throw MalformedRubrics("'rubrics' array is empty");
    std::vector<KeyPointRubric> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& e = (*it)[i];
        const std::string where = "rubric entry " + std::to_string(i + 1);
        if (!e.is_object()) throw MalformedRubrics(where + ": not an object");
        const auto id = e.find("id");
        if (id == e.end() || !id->is_number_integer()) throw MalformedRubrics(where + ": missing integer 'id'");
        if (id->get<long>() != static_cast<long>(i + 1)) {
            throw MalformedRubrics(where + ": id " + std::to_string(id->get<long>()) + " breaks the 1..N sequence");
        }
        out.push_back({static_cast<int>(i + 1), nonempty_string(e, "key_point", where),
                       nonempty_string(e, "score_standards", where)});
    }
    return out;
}

std::vector<QualityCriterion> parse_quality_criteria(const json& reply, Diagnostics* diag) {
    const auto it = reply.find("EVAL_CRITERIA");
    if (it == reply.end() || !it->is_array()) throw MalformedRubrics("reply has no 'EVAL_CRITERIA' array");
    if (it->empty()) throw MalformedRubrics("'EVAL_CRITERIA' array is empty");
    std::vector<QualityCriterion> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& e = (*it)[i];
        const std::string where = "criterion " + std::to_string(i + 1);
        if (!e.is_object()) throw MalformedRubrics(where + ": not an object");
        out.push_back({nonempty_string(e, "name", where), nonempty_string(e, "description", where)});
    }
    if (out.size() < 6 || out.size() > 8) {
        warn(diag, "generated " + std::to_string(out.size()) + " quality criteria, outside the requested 6-8");
    }
    return out;
}

std::vector<KeyPointRubric> generate_keypoint_rubrics(const Query& query, ChatClient& client) {
    const auto prompt = prompts::render(prompts::get("keypoint_rubrics"), {{"query", query.full_text()}});
    try {
        return parse_keypoint_rubrics(ask_json(client, Role::judge, prompt, "keypoint_rubrics"));
    } catch (const NoJsonFound& e) {
        throw MalformedRubrics(std::string("key-point rubric reply: ") + e.what());
    } catch (const JsonSyntax& e) {
        throw MalformedRubrics(std::string("key-point rubric reply: ") + e.what());
    }
}

std::vector<QualityCriterion> generate_quality_criteria(const Query& query, ChatClient& client, Diagnostics* diag) {
    const auto prompt = prompts::render(prompts::get("quality_criteria"), {{"query", query.full_text()}});
    try {
        return parse_quality_criteria(ask_json(client, Role::judge, prompt, "quality_criteria"), diag);
    } catch (const NoJsonFound& e) {
        throw MalformedRubrics(std::string("quality criteria reply: ") + e.what());
    } catch (const JsonSyntax& e) {
        throw MalformedRubrics(std::string("quality criteria reply: ") + e.what());
    }
}

RubricSet generate_rubrics(const Query& query, ChatClient& client, Diagnostics* diag) {
    RubricSet r;
    r.query_id = query.id;
    r.key_points = generate_keypoint_rubrics(query, client);
    r.quality = generate_quality_criteria(query, client, diag);
    return r;
}

std::string format_key_points(const std::vector<KeyPointRubric>& key_points) {
    std::string out;
    for (const auto& k : key_points) {
        if (!out.empty()) out += '\n';
        out += std::to_string(k.id) + ". " + k.key_point + "\n   Scoring: " + k.score_standards;
    }
    return out;
}

std::string format_criteria(const std::vector<QualityCriterion>& criteria) {
    std::string out;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!out.empty()) out += '\n';
        out += std::to_string(i + 1) + ". " + criteria[i].name + ": " + criteria[i].description;
    }
    return out;
}

std::string format_rubrics(const RubricSet& rubrics) {
    return "Query-specific key points:\n" + format_key_points(rubrics.key_points) +
           "\n\nGeneral quality criteria:\n" + format_criteria(rubrics.quality);
}

EvaluationReport score_answer(const Query& query, std::string_view answer, const RubricSet& rubrics,
                              ChatClient& client) {
    rubrics.validate();
    const std::string full_query = query.full_text();

    const json kp_reply = judge_reply(client,
                                      prompts::render(prompts::get("keypoint_scoring"),
                                                      {{"query", full_query},
                                                       {"answer", answer},
                                                       {"key_points", format_key_points(rubrics.key_points)}}),
                                      "score_keypoints", "key-point");
    GradedReply kp = parse_grades(kp_reply, rubrics.key_points.size(), "key-point");

    const json q_reply = judge_reply(client,
                                     prompts::render(prompts::get("quality_scoring"),
                                                     {{"query", full_query},
                                                      {"answer", answer},
                                                      {"criteria", format_criteria(rubrics.quality)}}),
                                     "score_quality", "quality");
    GradedReply quality = parse_grades(q_reply, rubrics.quality.size(), "quality");

    std::vector<std::string> warnings;
    std::string kp_feedback;
    for (std::size_t i = 0; i < kp.grades.size(); ++i) {
        const double clamped = clamp_keypoint_grade(kp.grades[i]);
        if (clamped != kp.grades[i]) {
            warnings.push_back("key point " + std::to_string(i + 1) + " grade " + format_number(kp.grades[i]) +
                               " clamped to " + format_number(clamped));
        }
        kp.grades[i] = clamped;
        kp_feedback += "Key point " + std::to_string(i + 1) + " (" + format_number(clamped) +
                       "/1): " + rubrics.key_points[i].key_point;
        if (!kp.reasons[i].empty()) kp_feedback += "\n   " + kp.reasons[i];
        kp_feedback += '\n';
    }
    if (!kp.feedback.empty()) kp_feedback += "Overall: " + kp.feedback + '\n';

    std::string quality_feedback;
    for (std::size_t i = 0; i < quality.grades.size(); ++i) {
        const double clamped = clamp_quality_grade(quality.grades[i]);
        if (clamped != quality.grades[i]) {
            warnings.push_back("quality criterion '" + rubrics.quality[i].name + "' grade " +
                               format_number(quality.grades[i]) + " clamped to " + format_number(clamped));
        }
        quality.grades[i] = clamped;
        quality_feedback += rubrics.quality[i].name + " (" + format_number(clamped) + "/10)";
        if (!quality.reasons[i].empty()) quality_feedback += ": " + quality.reasons[i];
        quality_feedback += '\n';
    }
    if (!quality.feedback.empty()) quality_feedback += "Overall: " + quality.feedback + '\n';

    auto report = EvaluationReport::from_scores(std::move(kp.grades), std::move(quality.grades),
                                                text::trim(kp_feedback), text::trim(quality_feedback));
    report.warnings = std::move(warnings);
    return report;
}

DifficultyRecord measure_difficulty(const Query& query, std::string_view model_answer, const RubricSet& rubrics,
                                    ChatClient& client) {
    if (!query.reference || text::trim(*query.reference).empty()) {
        throw UsageError("query '" + query.id + "' has no reference answer");
    }
    const double s_ref = combined_score(score_answer(query, *query.reference, rubrics, client));
    const double s_model = combined_score(score_answer(query, model_answer, rubrics, client));
    return DifficultyRecord::from_scores(query.id, s_ref, s_model);
}

}  // namespace r2write
