#include "r2write/patterns.hpp"

#include <algorithm>
#include <sstream>

#include "r2write/errors.hpp"
#include "r2write/prompts.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

constexpr std::string_view kTruthLine = "Ground Truth: {ground_truth} (Evaluation Rubrics {Evaluation Rubrics})";

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

json ask_judge(ChatClient& client, std::string prompt, std::string purpose) {
    ChatRequest req;
    req.role = Role::judge;
    req.purpose = std::move(purpose);
    req.messages.push_back({Speaker::user, std::move(prompt)});
    return extract_json(client.complete(req).text);
}

std::string optional_string(const json& obj, std::string_view key) {
    if (const auto it = obj.find(key); it != obj.end() && it->is_string()) return it->get<std::string>();
    return {};
}

}  // namespace

std::string_view to_string(PatternKind kind) noexcept {
    switch (kind) {
        case PatternKind::answer_verification: return "answer_verification";
        case PatternKind::backtracking: return "backtracking";
        case PatternKind::subgoal_setting: return "subgoal_setting";
        case PatternKind::backward_chaining: return "backward_chaining";
        case PatternKind::summarization: return "summarization";
    }
    return "answer_verification";
}

std::string_view to_string(Contribution c) noexcept {
    switch (c) {
        case Contribution::yes: return "yes";
        case Contribution::no: return "no";
        case Contribution::na: return "na";
    }
    return "na";
}

std::string_view to_string(RevisionCategory c) noexcept {
    switch (c) {
        case RevisionCategory::RA: return "RA";
        case RevisionCategory::FLC: return "FLC";
        case RevisionCategory::QE: return "QE";
    }
    return "QE";
}

json to_json(const PatternReport& r) {
    json instances = json::array();
    for (const auto& i : r.instances) {
        instances.push_back({{"kind", to_string(i.kind)}, {"content", i.content}, {"contribution", to_string(i.contribution)}});
    }
    json counts = json::object();
    for (auto kind : kPatternKinds) counts[std::string(to_string(kind))] = r.count(kind);
    return {{"trace_id", r.trace_id}, {"counts", std::move(counts)}, {"instances", std::move(instances)}};
}

PatternReport pattern_report_from_json(const json& j) {
    PatternReport r;
    r.trace_id = j.value("trace_id", "");
    for (const auto& e : j.value("instances", json::array())) {
        const std::string kind = e.at("kind").get<std::string>();
        const auto k = std::find_if(kPatternKinds.begin(), kPatternKinds.end(),
                                    [&](PatternKind pk) { return to_string(pk) == kind; });
        if (k == kPatternKinds.end()) throw PatternParseFailure("unknown pattern kind \"" + kind + "\"");
        const std::string c = e.at("contribution").get<std::string>();
        PatternInstance inst{*k, e.value("content", ""), Contribution::na};
        if (c == "yes") inst.contribution = Contribution::yes;
        else if (c == "no") inst.contribution = Contribution::no;
        else if (c != "na") throw UnknownContribution("stored instance has contribution \"" + c + "\"");
        ++r.counts[static_cast<std::size_t>(*k)];
        r.instances.push_back(std::move(inst));
    }
    return r;
}

PatternReport parse_pattern_report(const json& reply, std::string trace_id, Diagnostics* diag) {
    if (!reply.is_object()) throw PatternParseFailure("pattern reply must be a JSON object");
    PatternReport report;
    report.trace_id = std::move(trace_id);
    for (auto kind : kPatternKinds) {
        const std::string key(to_string(kind));
        const auto section = reply.find(key);
        if (section == reply.end()) throw PatternParseFailure("pattern reply lacks '" + key + "'");
        const json* list = nullptr;
        if (section->is_array()) {
            list = &*section;
        } else if (section->is_object()) {
            const auto it = section->find("instances");
            if (it != section->end() && it->is_array()) list = &*it;
        }
        if (list == nullptr) throw PatternParseFailure("'" + key + "' has no 'instances' array");

        for (std::size_t i = 0; i < list->size(); ++i) {
            const json& e = (*list)[i];
            const std::string where = key + " instance " + std::to_string(i + 1);
            if (!e.is_object()) throw PatternParseFailure(where + " is not an object");
            const auto content = e.find("content");
            if (content == e.end() || !content->is_string()) throw PatternParseFailure(where + " has no string 'content'");
            const auto contrib = e.find("contribution");
            if (contrib == e.end() || !contrib->is_string()) {
                throw PatternParseFailure(where + " has no string 'contribution'");
            }
            const std::string c = lower(text::trim(contrib->get<std::string>()));
            PatternInstance inst{kind, content->get<std::string>(), Contribution::na};
            if (c == "yes") inst.contribution = Contribution::yes;
            else if (c == "no") inst.contribution = Contribution::no;
            else if (c == "na" || c == "n/a") inst.contribution = Contribution::na;
            else throw UnknownContribution(where + " has contribution \"" + contrib->get<std::string>() + "\"");
            report.instances.push_back(std::move(inst));
            ++report.counts[static_cast<std::size_t>(kind)];
        }
        if (section->is_object()) {
            if (const auto count = section->find("count"); count != section->end()) {
                if (!count->is_number_integer() || count->get<long>() != static_cast<long>(list->size())) {
                    warn(diag, "'" + key + "' count " + count->dump() + " disagrees with " +
                                   std::to_string(list->size()) + " listed instances; using the list");
                }
            }
        }
    }
    return report;
}

std::string render_pattern_prompt(std::string_view question, std::string_view reasoning,
                                  std::string_view truth_or_rubrics, TraceTask task) {
    std::string tmpl(prompts::get("thinking_patterns"));
    const auto pos = tmpl.find(kTruthLine);
    if (pos == std::string::npos) throw PromptMismatch("pattern prompt asset lacks its ground-truth line");
    tmpl.replace(pos, kTruthLine.size(),
                 task == TraceTask::math ? "Ground Truth: {ground_truth}" : "Evaluation Rubrics: {rubrics}");
    return prompts::render(tmpl, {{"question", question},
                                  {"reasoning", reasoning},
                                  {task == TraceTask::math ? "ground_truth" : "rubrics", truth_or_rubrics}});
}

PatternReport classify_patterns(std::string trace_id, std::string_view question, std::string_view reasoning,
                                std::string_view truth_or_rubrics, TraceTask task, ChatClient& client,
                                Diagnostics* diag) {
    if (text::trim(reasoning).empty()) throw UsageError("pattern classification needs non-empty reasoning");
    json reply;
    try {
        reply = ask_judge(client, render_pattern_prompt(question, reasoning, truth_or_rubrics, task), "classify_patterns");
    } catch (const NoJsonFound& e) {
        throw PatternParseFailure(std::string("pattern reply: ") + e.what());
    } catch (const JsonSyntax& e) {
        throw PatternParseFailure(std::string("pattern reply: ") + e.what());
    }
    return parse_pattern_report(reply, std::move(trace_id), diag);
}

std::array<PatternShare, 5> pattern_distribution(std::span<const PatternReport> reports) {
    std::array<PatternShare, 5> dist;
    for (std::size_t k = 0; k < kPatternKinds.size(); ++k) dist[k].kind = kPatternKinds[k];
    int total = 0;
    for (const auto& r : reports) {
        for (const auto& inst : r.instances) {
            auto& d = dist[static_cast<std::size_t>(inst.kind)];
            ++d.instances;
            ++total;
            switch (inst.contribution) {
                case Contribution::yes: ++d.yes; break;
                case Contribution::no: ++d.no; break;
                case Contribution::na: ++d.na; break;
            }
        }
    }
    for (auto& d : dist) {
        if (total > 0) d.share = static_cast<double>(d.instances) / total;
        if (d.yes + d.no > 0) d.helpful = static_cast<double>(d.yes) / (d.yes + d.no);
    }
    return dist;
}

json to_json(const std::array<PatternShare, 5>& dist) {
    json kinds = json::array();
    int total = 0;
    for (const auto& d : dist) {
        total += d.instances;
        kinds.push_back({{"kind", to_string(d.kind)},
                         {"instances", d.instances},
                         {"yes", d.yes},
                         {"no", d.no},
                         {"na", d.na},
                         {"share", d.share ? json(*d.share) : json(nullptr)},
                         {"helpful", d.helpful ? json(*d.helpful) : json(nullptr)}});
    }
    return {{"total_instances", total}, {"kinds", std::move(kinds)}};
}

std::string distribution_csv(const std::array<PatternShare, 5>& dist) {
    std::ostringstream os;
    os.precision(17);
    os << "kind,share,helpful\n";
    for (const auto& d : dist) {
        os << to_string(d.kind) << ',';
        if (d.share) os << *d.share;
        os << ',';
        if (d.helpful) os << *d.helpful;
        os << '\n';
    }
    return os.str();
}

std::vector<RevisionInstance> parse_revisions(const json& reply) {
    if (!reply.is_object()) throw RevisionParseFailure("revision reply must be a JSON object");
    const auto list = reply.find("patterns");
    if (list == reply.end() || !list->is_array()) throw RevisionParseFailure("revision reply has no 'patterns' array");
    std::vector<RevisionInstance> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& e = (*list)[i];
        const std::string where = "revision pattern " + std::to_string(i + 1);
        if (!e.is_object()) throw RevisionParseFailure(where + " is not an object");
        const auto cat = e.find("category");
        if (cat == e.end() || !cat->is_string()) throw RevisionParseFailure(where + " has no string 'category'");
        const std::string c = upper(text::trim(cat->get<std::string>()));
        RevisionInstance inst;
        if (c == "RA") inst.category = RevisionCategory::RA;
        else if (c == "FLC") inst.category = RevisionCategory::FLC;
        else if (c == "QE") inst.category = RevisionCategory::QE;
        else throw RevisionParseFailure(where + " has unknown category \"" + cat->get<std::string>() + "\"");
        inst.content = optional_string(e, "content");
        inst.contribution_note = optional_string(e, "contribution");
        out.push_back(std::move(inst));
    }
    return out;
}

json to_json(const RevisionInstance& r) {
    return {{"category", to_string(r.category)}, {"content", r.content}, {"contribution", r.contribution_note}};
}

std::vector<RevisionInstance> classify_revisions(std::string_view question, std::string_view reasoning,
                                                 std::string_view rubrics, ChatClient& client) {
    if (text::trim(reasoning).empty()) throw UsageError("revision classification needs non-empty reasoning");
    const std::string prompt = prompts::render(
        prompts::get("revision_types"), {{"question", question}, {"reasoning_content", reasoning}, {"rubrics", rubrics}});
    json reply;
    try {
        reply = ask_judge(client, prompt, "classify_revisions");
    } catch (const NoJsonFound& e) {
        throw RevisionParseFailure(std::string("revision reply: ") + e.what());
    } catch (const JsonSyntax& e) {
        throw RevisionParseFailure(std::string("revision reply: ") + e.what());
    }
    return parse_revisions(reply);
}

RevisionDistribution revision_distribution(std::span<const RevisionInstance> instances) {
    RevisionDistribution d;
    for (const auto& i : instances) ++d.counts[static_cast<std::size_t>(i.category)];
    if (!instances.empty()) {
        const double n = static_cast<double>(instances.size());
        for (std::size_t k = 0; k < d.counts.size(); ++k) d.percent[k] = 100.0 * d.counts[k] / n;
    }
    return d;
}

json to_json(const RevisionDistribution& d) {
    json out = json::object();
    int total = 0;
    for (std::size_t k = 0; k < kRevisionCategories.size(); ++k) {
        total += d.counts[k];
        out[std::string(to_string(kRevisionCategories[k]))] = {
            {"count", d.counts[k]}, {"percent", d.percent[k] ? json(*d.percent[k]) : json(nullptr)}};
    }
    return {{"total", total}, {"categories", std::move(out)}};
}

}  // namespace r2write
