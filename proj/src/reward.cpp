#include "r2write/reward.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "r2write/errors.hpp"
#include "r2write/hashing.hpp"
#include "r2write/io.hpp"
#include "r2write/parallel.hpp"
#include "r2write/prompts.hpp"
#include "r2write/sample.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

constexpr std::string_view kNoCriteria =
    "Overall quality: how well the response fulfils the user's request, including relevance, accuracy, "
    "depth, structure and clarity of writing.";
constexpr std::string_view kNoRubrics = "(no rubrics were provided; judge against the query requirements)";

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

ChatRequest judge_request(std::string prompt, std::string purpose) {
    ChatRequest req;
    req.role = Role::judge;
    req.purpose = std::move(purpose);
    req.messages.push_back({Speaker::user, std::move(prompt)});
    return req;
}

const json* find_any(const json& obj, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) return nullptr;
    for (auto key : keys) {
        if (const auto it = obj.find(key); it != obj.end()) return &*it;
    }
    return nullptr;
}

// A dimension score as -1, 0 or +1. Numeric strings such as "+1" are accepted.
int read_dimension(const json& v, const std::string& where) {
    double d = 0.0;
    if (v.is_number()) {
        d = v.get<double>();
    } else if (v.is_string()) {
        const std::string s = text::trim(v.get<std::string>());
        if (s == "+1" || s == "1") d = 1;
        else if (s == "-1") d = -1;
        else if (s == "0") d = 0;
        else throw JudgmentParseFailure(where + " is not a score: \"" + s + "\"");
    } else {
        throw JudgmentParseFailure(where + " is not a number");
    }
    if (d != 1.0 && d != -1.0 && d != 0.0) throw JudgmentParseFailure(where + " must be +1 or -1");
    return static_cast<int>(d);
}

Sign to_sign(int v) { return v > 0 ? Sign::positive : Sign::negative; }

}  // namespace

SegmentJudgment SegmentJudgment::make(int segment_id, Sign find, Sign rev, Sign align) {
    return {segment_id, find, rev, align, segment_reward(find, rev, align)};
}

double process_reward(std::span<const SegmentJudgment> judgments) {
    if (judgments.empty()) throw EmptyJudgments("process reward needs at least one judgment");
    long sum = 0;
    for (const auto& j : judgments) sum += value(j.r_p);
    return static_cast<double>(sum) / static_cast<double>(judgments.size());
}

TotalReward total_reward(double r_a, std::span<const SegmentJudgment> judgments, double alpha) {
    if (r_a != 0.0 && r_a != 0.5 && r_a != 1.0) throw UsageError("r_a must be 0, 0.5 or 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie strictly between 0 and 1");
    TotalReward t;
    t.r_a = r_a;
    t.alpha = alpha;
    t.k_segments = static_cast<int>(judgments.size());
    if (r_a == 0.0) {
        t.r_all = 0.0;
    } else if (judgments.empty()) {
        t.r_all = r_a;
    } else {
        t.r_p = process_reward(judgments);
        t.r_all = alpha * r_a + (1.0 - alpha) * *t.r_p;
    }
    return t;
}

std::string_view to_string(Slot slot) noexcept { return slot == Slot::A ? "A" : "B"; }

std::string_view to_string(Verdict verdict) noexcept {
    switch (verdict) {
        case Verdict::A: return "A";
        case Verdict::B: return "B";
        case Verdict::C: return "C";
    }
    return "C";
}

std::optional<Verdict> parse_verdict(std::string_view reply) {
    constexpr std::array<std::pair<std::string_view, Verdict>, 3> kTokens{
        {{"[[A]]", Verdict::A}, {"[[B]]", Verdict::B}, {"[[C]]", Verdict::C}}};
    std::optional<Verdict> best;
    std::size_t best_pos = 0;
    for (const auto& [token, verdict] : kTokens) {
        const auto pos = reply.rfind(token);
        if (pos == std::string_view::npos) continue;
        if (!best || pos > best_pos) {
            best = verdict;
            best_pos = pos;
        }
    }
    return best;
}

double map_verdict(Verdict verdict, Slot candidate_slot) noexcept {
    if (verdict == Verdict::C) return 0.5;
    const bool a_wins = verdict == Verdict::A;
    return (a_wins == (candidate_slot == Slot::A)) ? 1.0 : 0.0;
}

Slot slot_for_seed(std::uint64_t seed) { return (splitmix64(seed) & 1U) == 0 ? Slot::A : Slot::B; }

std::uint64_t item_seed(std::uint64_t seed, const Query& query, std::string_view sample) {
    std::uint64_t h = fnv1a64(query.id);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(query.text, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(sample, h);
    return splitmix64(seed ^ h);
}

AnswerRewardResult answer_reward(const Query& query, std::string_view answer, std::string_view reference,
                                 const std::vector<QualityCriterion>& criteria, ChatClient& client,
                                 std::uint64_t seed) {
    if (text::trim(reference).empty()) throw UsageError("answer reward needs a non-empty reference");
    AnswerRewardResult out;
    out.candidate_slot = slot_for_seed(seed);
    const bool cand_a = out.candidate_slot == Slot::A;
    const std::string prompt = prompts::render(
        prompts::get("answer_reward"),
        {{"criteria", criteria.empty() ? std::string(kNoCriteria) : format_criteria(criteria)},
         {"question", query.full_text()},
         {"answer_a", cand_a ? answer : reference},
         {"answer_b", cand_a ? reference : answer}});

    ChatRequest req = judge_request(prompt, "answer_reward");
    std::string reply = client.complete(req).text;
    out.judge_calls = 1;
    auto verdict = parse_verdict(reply);
    if (!verdict) {
        req.purpose = "verdict_reask";
        req.messages.push_back({Speaker::assistant, reply});
        req.messages.push_back({Speaker::user, std::string(prompts::get("verdict_reask"))});
        reply = client.complete(req).text;
        out.judge_calls = 2;
        verdict = parse_verdict(reply);
        if (!verdict) throw VerdictParseFailure("judge gave no [[A]]/[[B]]/[[C]] verdict after a re-ask");
    }
    out.verdict = *verdict;
    out.r_a = map_verdict(out.verdict, out.candidate_slot);
    return out;
}

std::vector<ReflectionSegment> parse_segments(const json& reply, Diagnostics* diag) {
    const json* list = find_any(reply, {"verifications"});
    if (list == nullptr || !list->is_array()) throw ExtractionParseFailure("reply has no 'verifications' array");
    std::vector<ReflectionSegment> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& e = (*list)[i];
        const json* content = e.is_string() ? &e : find_any(e, {"content"});
        if (content == nullptr || !content->is_string()) {
            throw ExtractionParseFailure("verification " + std::to_string(i + 1) + " has no string 'content'");
        }
        if (text::trim(content->get<std::string>()).empty()) {
            warn(diag, "verification " + std::to_string(i + 1) + " has empty content; skipped");
            continue;
        }
        const int id = static_cast<int>(out.size()) + 1;
        if (const json* given = find_any(e, {"id"}); given != nullptr && !(given->is_number_integer() && *given == id)) {
            warn(diag, "verification " + std::to_string(i + 1) + " id " + given->dump() + " renumbered to " +
                           std::to_string(id));
        }
        out.push_back({id, content->get<std::string>()});
    }
    if (const json* count = find_any(reply, {"total_count"}); count != nullptr) {
        if (!count->is_number_integer() || count->get<long>() != static_cast<long>(list->size())) {
            warn(diag, "total_count " + count->dump() + " disagrees with " + std::to_string(list->size()) +
                           " listed verifications; using the list");
        }
    }
    return out;
}

std::vector<ReflectionSegment> extract_segments(std::string_view thinking, const Query& query,
                                                std::string_view final_answer, ChatClient& client,
                                                Diagnostics* diag) {
    if (text::trim(thinking).empty()) return {};
    const std::string prompt = prompts::render(
        prompts::get("process_step1"),
        {{"query", query.full_text()}, {"thinking_process", thinking}, {"final_answer", final_answer}});
    const std::string reply = client.complete(judge_request(prompt, "extract_segments")).text;
    json parsed;
    try {
        parsed = extract_json(reply);
    } catch (const NoJsonFound& e) {
        throw ExtractionParseFailure(std::string("extraction reply: ") + e.what());
    } catch (const JsonSyntax& e) {
        throw ExtractionParseFailure(std::string("extraction reply: ") + e.what());
    }
    return parse_segments(parsed, diag);
}

std::vector<SegmentJudgment> parse_judgments(const json& reply, std::span<const ReflectionSegment> segments,
                                             Diagnostics* diag) {
    const json* list = reply.is_array() ? &reply
                                        : find_any(reply, {"evaluations", "verifications", "judgments", "results"});
    if (list == nullptr || !list->is_array()) throw JudgmentParseFailure("reply has no 'evaluations' array");
    if (list->size() != segments.size()) {
        throw CountMismatch("judge returned " + std::to_string(list->size()) + " evaluations for " +
                            std::to_string(segments.size()) + " segments");
    }

    std::vector<const json*> entries;
    for (const auto& e : *list) {
        if (!e.is_object()) throw JudgmentParseFailure("evaluation entries must be objects");
        entries.push_back(&e);
    }
    const auto id_of = [](const json* e) -> const json* { return find_any(*e, {"id", "verification_id", "segment_id"}); };
    const bool all_ids = std::all_of(entries.begin(), entries.end(), [&](const json* e) {
        const json* id = id_of(e);
        return id != nullptr && id->is_number_integer();
    });
    if (all_ids) {
        std::stable_sort(entries.begin(), entries.end(),
                         [&](const json* a, const json* b) { return id_of(a)->get<long>() < id_of(b)->get<long>(); });
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (id_of(entries[i])->get<long>() != segments[i].id) {
                throw JudgmentParseFailure("evaluation ids do not match the segment ids");
            }
        }
    }

    std::vector<SegmentJudgment> out;
    out.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const json& e = *entries[i];
        const std::string where = "evaluation for segment " + std::to_string(segments[i].id);
        const auto dim = [&](int n, std::initializer_list<std::string_view> keys) {
            const json* v = find_any(e, keys);
            if (v == nullptr) throw JudgmentParseFailure(where + " lacks dimension " + std::to_string(n));
            return read_dimension(*v, where + " dimension " + std::to_string(n));
        };
        const int d1 = dim(1, {"dimension_1", "dimension1", "dim_1", "dim1", "d1"});
        const int d2 = dim(2, {"dimension_2", "dimension2", "dim_2", "dim2", "d2"});
        const int d3 = dim(3, {"dimension_3", "dimension3", "dim_3", "dim3", "d3"});
        if (d1 == 0) throw JudgmentParseFailure(where + " dimension 1 must be +1 or -1");
        if (d3 == 0) throw JudgmentParseFailure(where + " dimension 3 must be +1 or -1");
        if (d2 == 0 && d1 > 0) warn(diag, where + ": dimension 2 scored 0 although dimension 1 is +1; recorded as -1");
        out.push_back(SegmentJudgment::make(segments[i].id, to_sign(d1), to_sign(d2), to_sign(d3)));
    }
    return out;
}

std::vector<SegmentJudgment> judge_segments(std::span<const ReflectionSegment> segments, const Query& query,
                                            std::string_view final_answer, const RubricSet* rubrics,
                                            ChatClient& client, Diagnostics* diag) {
    if (segments.empty()) throw UsageError("judge_segments needs at least one segment");
    json verifications = json::array();
    for (const auto& s : segments) verifications.push_back({{"id", s.id}, {"content", s.content}});
    std::string prompt = prompts::render(prompts::get("process_step2"),
                                         {{"query", query.full_text()},
                                          {"final_answer", final_answer},
                                          {"rubrics", rubrics != nullptr ? format_rubrics(*rubrics) : std::string(kNoRubrics)},
                                          {"verifications", verifications.dump(2)}});
    prompt += prompts::get("process_step2_format");
    const std::string reply = client.complete(judge_request(prompt, "judge_segments")).text;
    json parsed;
    try {
        parsed = extract_json(reply);
    } catch (const NoJsonFound& e) {
        throw JudgmentParseFailure(std::string("judgment reply: ") + e.what());
    } catch (const JsonSyntax& e) {
        throw JudgmentParseFailure(std::string("judgment reply: ") + e.what());
    }
    return parse_judgments(parsed, segments, diag);
}

json to_json(const RewardResult& result) {
    const auto& r = result.reward;
    const auto& a = result.audit;
    json segments = json::array();
    for (const auto& s : a.segments) segments.push_back({{"id", s.id}, {"content", s.content}});
    json judgments = json::array();
    for (const auto& j : a.judgments) {
        judgments.push_back({{"segment_id", j.segment_id},
                             {"r_find", value(j.r_find)},
                             {"r_rev", value(j.r_rev)},
                             {"r_align", value(j.r_align)},
                             {"r_p", value(j.r_p)}});
    }
    return {{"r_a", r.r_a},
            {"r_p", r.r_p ? json(*r.r_p) : json(nullptr)},
            {"r_all", r.r_all},
            {"alpha", r.alpha},
            {"k_segments", r.k_segments},
            {"audit",
             {{"item_seed", std::to_string(a.item_seed)},
              {"candidate_slot", to_string(a.candidate_slot)},
              {"verdict", to_string(a.verdict)},
              {"verdict_calls", a.verdict_calls},
              {"segments", std::move(segments)},
              {"judgments", std::move(judgments)},
              {"warnings", a.warnings}}}};
}

RewardResult reward_sample(std::string_view sample, const Query& query, std::string_view reference,
                           const RubricSet* rubrics, const RewardConfig& config, ChatClient& client) {
    const ParsedSample parsed = parse_sample(sample);
    Diagnostics diag;
    RewardResult out;
    out.audit.item_seed = item_seed(config.seed, query, sample);
    static const std::vector<QualityCriterion> kNone;
    const auto ar = answer_reward(query, parsed.answer, reference, rubrics != nullptr ? rubrics->quality : kNone,
                                  client, out.audit.item_seed);
    out.audit.candidate_slot = ar.candidate_slot;
    out.audit.verdict = ar.verdict;
    out.audit.verdict_calls = ar.judge_calls;
    if (ar.r_a > 0.0) {
        out.audit.segments = extract_segments(parsed.think, query, parsed.answer, client, &diag);
        if (!out.audit.segments.empty()) {
            out.audit.judgments = judge_segments(out.audit.segments, query, parsed.answer, rubrics, client, &diag);
        }
    }
    out.reward = total_reward(ar.r_a, out.audit.judgments, config.alpha);
    out.audit.warnings = diag.messages();
    return out;
}

RewardRequest reward_request_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("request must be a JSON object");
    RewardRequest r;
    if (const auto it = j.find("id"); it != j.end() && !it->is_null()) r.id = *it;

    const auto q = j.find("query");
    if (q == j.end()) throw SchemaError("missing field 'query'");
    if (q->is_string()) {
        r.query.id = r.id && r.id->is_string() ? r.id->get<std::string>() : std::string();
        r.query.text = q->get<std::string>();
    } else if (q->is_object()) {
        try {
            r.query = query_from_json(*q);
        } catch (const SchemaError& e) {
            throw SchemaError(std::string("query: ") + e.what());
        }
    } else {
        throw SchemaError("field 'query' must be a string or an object");
    }
    if (text::trim(r.query.text).empty()) throw SchemaError("field 'query' has empty text");

    const auto s = j.find("sample");
    if (s == j.end() || !s->is_string()) throw SchemaError("field 'sample' must be a string");
    r.sample = s->get<std::string>();

    if (const auto ref = j.find("reference"); ref != j.end() && !ref->is_null()) {
        if (!ref->is_string()) throw SchemaError("field 'reference' must be a string");
        r.reference = ref->get<std::string>();
    } else if (r.query.reference) {
        r.reference = *r.query.reference;
    }
    if (text::trim(r.reference).empty()) throw SchemaError("field 'reference' must be a non-empty string");

    if (const auto rub = j.find("rubrics"); rub != j.end() && !rub->is_null()) {
        r.rubrics = rubric_set_from_json(*rub);
    }
    if (const auto a = j.find("alpha"); a != j.end() && !a->is_null()) {
        if (!a->is_number()) throw SchemaError("field 'alpha' must be a number");
        const double alpha = a->get<double>();
        if (!(alpha > 0.0 && alpha < 1.0)) throw SchemaError("field 'alpha' must lie strictly between 0 and 1");
        r.alpha = alpha;
    }
    return r;
}

json reward_json(const RewardRequest& request, const RewardConfig& config, ChatClient& client) {
    RewardConfig cfg = config;
    if (request.alpha) cfg.alpha = *request.alpha;
    const RubricSet* rubrics = request.rubrics ? &*request.rubrics : nullptr;
    json body = to_json(reward_sample(request.sample, request.query, request.reference, rubrics, cfg, client));
    if (!request.id) return body;
    json out = {{"id", *request.id}};
    out.update(body);
    return out;
}

json reward_response(const json& request, const RewardConfig& config, ChatClient& client) {
    std::optional<json> id;
    if (request.is_object()) {
        if (const auto it = request.find("id"); it != request.end() && !it->is_null()) id = *it;
    }
    const auto error_record = [&](std::string_view type, std::string_view message) {
        json out = json::object();
        if (id) out["id"] = *id;
        out["error"] = io::error_json(type, message);
        return out;
    };
    try {
        return reward_json(reward_request_from_json(request), config, client);
    } catch (const Error& e) {
        return error_record(e.kind(), e.what());
    } catch (const std::exception& e) {
        return error_record("InternalError", e.what());
    }
}

std::vector<json> batch_reward(std::span<const json> requests, const RewardConfig& config, ChatClient& client,
                               int workers) {
    std::vector<json> out(requests.size());
    parallel_for(requests.size(), workers, [&](std::size_t i) { out[i] = reward_response(requests[i], config, client); });
    return out;
}

}  // namespace r2write
