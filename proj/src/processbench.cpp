#include "r2write/processbench.hpp"

#include <algorithm>

#include "r2write/diagnostics.hpp"
#include "r2write/errors.hpp"
#include "r2write/io.hpp"
#include "r2write/parallel.hpp"
#include "r2write/sample.hpp"

namespace r2write {

BenchItem bench_item_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("bench item must be a JSON object");
    BenchItem item;
    const auto id = j.find("item_id");
    if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
        throw SchemaError("field 'item_id' must be a non-empty string");
    }
    item.item_id = id->get<std::string>();

    const auto q = j.find("query");
    if (q == j.end()) throw SchemaError("missing field 'query'");
    if (q->is_string()) {
        item.query.id = item.item_id;
        item.query.text = q->get<std::string>();
    } else {
        try {
            item.query = query_from_json(*q);
        } catch (const SchemaError& e) {
            throw SchemaError(std::string("query: ") + e.what());
        }
    }

    const auto s = j.find("sample");
    if (s == j.end() || !s->is_string()) throw SchemaError("field 'sample' must be a string");
    item.sample = s->get<std::string>();

    const auto r = j.find("rubrics");
    if (r == j.end()) throw SchemaError("missing field 'rubrics'");
    item.rubrics = rubric_set_from_json(*r);
    return item;
}

BenchItemRecord BenchItemRecord::from_judgments(std::string item_id, std::vector<ReflectionSegment> segments,
                                                std::vector<SegmentJudgment> judgments) {
    BenchItemRecord r;
    r.item_id = std::move(item_id);
    r.k_segments = static_cast<int>(judgments.size());
    r.passing = static_cast<int>(std::count_if(judgments.begin(), judgments.end(),
                                               [](const SegmentJudgment& j) { return j.r_p == Sign::positive; }));
    if (r.k_segments > 0) r.item_score = static_cast<double>(r.passing) / r.k_segments;
    r.segments = std::move(segments);
    r.judgments = std::move(judgments);
    return r;
}

json to_json(const BenchItemRecord& r) {
    json out = {{"item_id", r.item_id},
                {"k_segments", r.k_segments},
                {"passing", r.passing},
                {"item_score", r.item_score ? json(*r.item_score) : json(nullptr)}};
    if (r.failed()) {
        out["error"] = io::error_json(*r.error_type, r.error_message.value_or(""));
        return out;
    }
    json segments = json::array();
    for (const auto& s : r.segments) segments.push_back({{"id", s.id}, {"content", s.content}});
    json judgments = json::array();
    for (const auto& j : r.judgments) {
        judgments.push_back({{"segment_id", j.segment_id},
                             {"r_find", value(j.r_find)},
                             {"r_rev", value(j.r_rev)},
                             {"r_align", value(j.r_align)},
                             {"r_p", value(j.r_p)}});
    }
    out["segments"] = std::move(segments);
    out["judgments"] = std::move(judgments);
    out["warnings"] = r.warnings;
    return out;
}

BenchItemRecord bench_record_from_json(const json& j) {
    BenchItemRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    r.k_segments = j.value("k_segments", 0);
    r.passing = j.value("passing", 0);
    if (const auto it = j.find("item_score"); it != j.end() && it->is_number()) r.item_score = it->get<double>();
    if (const auto it = j.find("error"); it != j.end() && it->is_object()) {
        r.error_type = it->value("type", "Error");
        r.error_message = it->value("message", "");
    }
    return r;
}

json to_json(const BenchReport& r) {
    json items = json::array();
    for (const auto& rec : r.per_item) {
        json row = {{"item_id", rec.item_id},
                    {"k_segments", rec.k_segments},
                    {"passing", rec.passing},
                    {"item_score", rec.item_score ? json(*rec.item_score) : json(nullptr)}};
        if (rec.failed()) row["error"] = io::error_json(*rec.error_type, rec.error_message.value_or(""));
        items.push_back(std::move(row));
    }
    return {{"micro_score", r.micro_score ? json(*r.micro_score) : json(nullptr)},
            {"macro_score", r.macro_score ? json(*r.macro_score) : json(nullptr)},
            {"item_count", r.per_item.size()},
            {"items_without_segments", r.items_without_segments},
            {"failed_items", r.failed_items},
            {"per_item", std::move(items)}};
}

BenchItemRecord bench_item(const BenchItem& item, ChatClient& client) {
    const ParsedSample parsed = parse_sample(item.sample);
    Diagnostics diag;
    auto segments = extract_segments(parsed.think, item.query, parsed.answer, client, &diag);
    std::vector<SegmentJudgment> judgments;
    if (!segments.empty()) judgments = judge_segments(segments, item.query, parsed.answer, &item.rubrics, client, &diag);
    auto record = BenchItemRecord::from_judgments(item.item_id, std::move(segments), std::move(judgments));
    record.warnings = diag.messages();
    return record;
}

BenchReport aggregate_bench(std::vector<BenchItemRecord> records) {
    BenchReport report;
    std::stable_sort(records.begin(), records.end(),
                     [](const BenchItemRecord& a, const BenchItemRecord& b) { return a.item_id < b.item_id; });
    long passing = 0;
    long segments = 0;
    double score_sum = 0.0;
    int scored = 0;
    for (const auto& r : records) {
        if (r.failed()) {
            ++report.failed_items;
        } else if (r.k_segments == 0) {
            ++report.items_without_segments;
        } else {
            passing += r.passing;
            segments += r.k_segments;
            score_sum += *r.item_score;
            ++scored;
        }
    }
    if (scored > 0) {
        report.micro_score = static_cast<double>(passing) / static_cast<double>(segments);
        report.macro_score = score_sum / scored;
    }
    report.per_item = std::move(records);
    return report;
}

BenchReport bench(std::span<const BenchItem> items, ChatClient& client, int workers) {
    std::vector<BenchItemRecord> records(items.size());
    parallel_for(items.size(), workers, [&](std::size_t i) {
        try {
            records[i] = bench_item(items[i], client);
        } catch (const Error& e) {
            records[i].item_id = items[i].item_id;
            records[i].error_type = std::string(e.kind());
            records[i].error_message = e.what();
        }
    });
    return aggregate_bench(std::move(records));
}

}  // namespace r2write
