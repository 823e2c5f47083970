#include "r2write/app.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>

#include <spdlog/spdlog.h>

#include "r2write/checkpoint.hpp"
#include "r2write/corpus.hpp"
#include "r2write/errors.hpp"
#include "r2write/hashing.hpp"
#include "r2write/http_backend.hpp"
#include "r2write/io.hpp"
#include "r2write/parallel.hpp"
#include "r2write/patterns.hpp"
#include "r2write/processbench.hpp"
#include "r2write/prompts.hpp"
#include "r2write/reward.hpp"
#include "r2write/rubric.hpp"
#include "r2write/scripted.hpp"
#include "r2write/synthesis.hpp"
#include "r2write/text.hpp"

namespace r2write::app {
namespace {

namespace fs = std::filesystem;

std::string require_path(const std::string& value, std::string_view what) {
    if (value.empty()) throw UsageError("missing " + std::string(what) + " path");
    return value;
}

std::string file_sha256(const std::string& path) { return sha256_hex(io::read_file(path)); }

std::string with_suffix(const std::string& path, std::string_view suffix) { return path + std::string(suffix); }

void write_jsonl(const std::string& path, const std::vector<json>& rows) { io::write_file_atomic(path, io::to_jsonl(rows)); }

void write_json(const std::string& path, const json& value) { io::write_file_atomic(path, value.dump(2) + "\n"); }

json error_record(json stub, const std::string& type, const std::string& message) {
    json out = stub.is_object() ? std::move(stub) : json::object();
    out["error"] = io::error_json(type, message);
    return out;
}

struct WorkItem {
    std::string key;  // checkpoint key; output rows are ordered by it
    json error_stub;  // fields copied into this item's error record
    std::function<json()> run;
};

struct StageResult {
    std::map<std::string, json> rows;  // successes and error records, by key
    RunSummary summary;
};

// Runs the items not yet in the checkpoint on config.workers() threads. Failed
// items are not checkpointed, so a resumed run retries them.
StageResult run_stage(const PipelineConfig& config, const RunOptions& options, const std::string& stage,
                      const std::string& input_sha256, std::vector<WorkItem>& items) {
    std::set<std::string> keys;
    for (const auto& item : items) {
        if (!keys.insert(item.key).second) throw SchemaError("duplicate item id '" + item.key + "' in input");
    }

    const std::string dir = config.paths.checkpoint_dir.empty() ? with_suffix(require_path(config.paths.output, "output"), ".ckpt")
                                                                : config.paths.checkpoint_dir;
    CheckpointStore store(dir, stage, config.checksum(), input_sha256);
    store.open(options.resume);

    StageResult result;
    result.summary.stage = stage;
    result.summary.items = items.size();

    std::vector<const WorkItem*> todo;
    for (const auto& item : items) {
        if (store.done(item.key)) {
            ++result.summary.resumed;
        } else {
            todo.push_back(&item);
        }
    }
    if (options.limit && todo.size() > *options.limit) {
        result.summary.pending = todo.size() - *options.limit;
        todo.resize(*options.limit);
    }
    if (result.summary.resumed > 0) spdlog::info("{}: {} items restored from checkpoint", stage, result.summary.resumed);

    std::mutex mu;
    std::map<std::string, json> failures;
    parallel_for(todo.size(), config.workers(), [&](std::size_t i) {
        const WorkItem& item = *todo[i];
        try {
            store.record(item.key, item.run());
        } catch (const CheckpointMismatch&) {
            throw;
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            spdlog::warn("{}: item '{}' failed: {}: {}", stage, item.key, e.kind(), e.what());
            std::lock_guard lock(mu);
            failures[item.key] = error_record(item.error_stub, std::string(e.kind()), e.what());
        } catch (const std::exception& e) {
            spdlog::warn("{}: item '{}' failed: {}", stage, item.key, e.what());
            std::lock_guard lock(mu);
            failures[item.key] = error_record(item.error_stub, "InternalError", e.what());
        }
    });

    result.rows = store.results();
    result.summary.processed = todo.size() - failures.size();
    result.summary.errors = failures.size();
    for (auto& [key, row] : failures) result.rows[key] = std::move(row);
    if (result.summary.pending > 0) {
        spdlog::info("{}: stopped at the item limit; {} items left for --resume", stage, result.summary.pending);
    }
    return result;
}

std::vector<json> ordered_rows(const std::map<std::string, json>& rows) {
    std::vector<json> out;
    out.reserve(rows.size());
    for (const auto& [key, row] : rows) out.push_back(row);
    return out;
}

void write_meta(const PipelineConfig& config, const std::string& output, const std::string& stage,
                const std::string& input_sha256, const RunSummary& summary) {
    json meta = provenance(config, stage, input_sha256);
    meta["items"] = summary.items;
    meta["errors"] = summary.errors;
    meta["pending"] = summary.pending;
    write_json(with_suffix(output, ".meta.json"), meta);
}

std::vector<Query> read_queries(const std::string& path) {
    std::vector<Query> out;
    io::for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(query_from_json(j)); });
    return out;
}

json query_stub(const std::string& id) { return {{"query_id", id}}; }

}  // namespace

std::string_view version() noexcept { return R2WRITE_VERSION; }

json to_json(const RunSummary& s) {
    return {{"stage", s.stage},   {"items", s.items},     {"resumed", s.resumed}, {"processed", s.processed},
            {"errors", s.errors}, {"pending", s.pending}, {"details", s.details}};
}

json provenance(const PipelineConfig& config, std::string_view stage, std::string_view input_sha256) {
    json prompts = json::object();
    for (const auto& [name, sum] : prompts::checksums()) prompts[name] = sum;
    return {{"tool", kToolName},
            {"version", version()},
            {"stage", stage},
            {"config_checksum", config.checksum()},
            {"input_sha256", input_sha256},
            {"prompt_checksums", std::move(prompts)}};
}

Clients make_clients(const PipelineConfig& config) {
    std::map<std::string, std::shared_ptr<ScriptedTransport>> scripts;
    const auto transport_for = [&](const BackendSection& s) -> std::shared_ptr<Transport> {
        if (s.kind == BackendSection::Kind::http) return std::make_shared<HttpTransport>(s.backend);
        const std::string path = require_path(s.script, "backend script");
        auto& shared = scripts[fs::weakly_canonical(path).string()];
        if (!shared) {
            const json script = json::parse(io::read_file(path), nullptr, false);
            if (script.is_discarded()) throw SchemaError(path + ": invalid JSON");
            shared = ScriptedTransport::from_json(script);
        }
        return shared;
    };
    Clients c;
    c.writer = std::make_shared<Backend>(config.writer.backend, transport_for(config.writer));
    c.judge = std::make_shared<Backend>(config.judge.backend, transport_for(config.judge));
    c.router = std::make_shared<RoleRouter>(c.writer, c.judge);
    return c;
}

RunSummary cmd_curate(const PipelineConfig& config) {
    const std::string input = require_path(config.paths.input, "input");
    const std::string output = require_path(config.paths.output, "output");
    if (config.corpus.top_k && config.paths.difficulty.empty()) {
        throw UsageError("top-k selection needs a difficulty file");
    }

    const std::vector<Query> queries = read_queries(input);
    CurateStats stats;
    stats.input_count = queries.size();
    const auto kept = corpus::filter_short(queries, config.corpus.min_tokens);
    stats.short_dropped = queries.size() - kept.size();
    const auto unique = corpus::dedup(kept, config.corpus.dedup_threshold);
    stats.dup_dropped = kept.size() - unique.size();

    std::vector<Query> curated;
    curated.reserve(unique.size());
    for (const auto& q : unique) {
        Query t = corpus::truncate(q, config.corpus.max_tokens);
        if (t.text != q.text || t.materials != q.materials) ++stats.truncated;
        curated.push_back(std::move(t));
    }

    std::optional<std::size_t> ranked;
    if (config.corpus.top_k) {
        std::map<std::string, const Query*> by_id;
        for (const auto& q : curated) by_id[q.id] = &q;
        std::vector<DifficultyRecord> records;
        io::for_each_jsonl(config.paths.difficulty, [&](const json& j, std::size_t) {
            DifficultyRecord r = difficulty_from_json(j);
            if (by_id.count(r.query_id)) records.push_back(std::move(r));
        });
        std::vector<Query> top;
        for (const auto& r : corpus::rank_by_gap(records, *config.corpus.top_k)) top.push_back(*by_id[r.query_id]);
        ranked = records.size();
        curated = std::move(top);
    }
    stats.output_count = curated.size();

    std::vector<json> rows;
    for (const auto& q : curated) rows.push_back(to_json(q));
    write_jsonl(output, rows);

    const std::string input_sha = file_sha256(input);
    RunSummary summary;
    summary.stage = "curate";
    summary.items = queries.size();
    summary.processed = queries.size();
    summary.details = to_json(stats);
    if (ranked) summary.details["ranked_candidates"] = *ranked;

    json stats_file = summary.details;
    stats_file["provenance"] = provenance(config, "curate", input_sha);
    write_json(with_suffix(output, ".stats.json"), stats_file);
    write_meta(config, output, "curate", input_sha, summary);
    return summary;
}

RunSummary cmd_rubrics(const PipelineConfig& config, const RunOptions& options, ChatClient& client) {
    const std::string input = require_path(config.paths.input, "input");
    const std::string output = require_path(config.paths.output, "output");
    const std::vector<Query> queries = read_queries(input);

    std::map<std::string, std::string> answers;
    std::string input_sha = file_sha256(input);
    if (!config.paths.answers.empty()) {
        io::for_each_jsonl(config.paths.answers, [&](const json& j, std::size_t) {
            if (!j.is_object() || !j.contains("query_id") || !j["query_id"].is_string()) {
                throw SchemaError("field 'query_id' must be a string");
            }
            if (!j.contains("answer") || !j["answer"].is_string()) throw SchemaError("field 'answer' must be a string");
            answers[j["query_id"].get<std::string>()] = j["answer"].get<std::string>();
        });
        input_sha = sha256_hex(input_sha + file_sha256(config.paths.answers));
    }

    std::vector<WorkItem> items;
    for (const auto& q : queries) {
        items.push_back({q.id, query_stub(q.id), [&client, &answers, &q] {
                             Diagnostics diag;
                             RubricSet rubrics = generate_rubrics(q, client, &diag);
                             json row = {{"rubrics", to_json(rubrics)}};
                             if (const auto it = answers.find(q.id); it != answers.end()) {
                                 row["difficulty"] = to_json(measure_difficulty(q, it->second, rubrics, client));
                             }
                             row["warnings"] = diag.messages();
                             return row;
                         }});
    }
    StageResult result = run_stage(config, options, "rubrics", input_sha, items);

    std::vector<json> rubric_rows;
    std::vector<json> difficulty_rows;
    for (const auto& [key, row] : result.rows) {
        if (row.contains("error")) {
            rubric_rows.push_back(row);
            continue;
        }
        json r = row["rubrics"];
        if (!row["warnings"].empty()) r["warnings"] = row["warnings"];
        rubric_rows.push_back(std::move(r));
        if (row.contains("difficulty")) difficulty_rows.push_back(row["difficulty"]);
    }
    write_jsonl(output, rubric_rows);
    write_meta(config, output, "rubrics", input_sha, result.summary);
    if (!answers.empty()) {
        const std::string path =
            config.paths.difficulty.empty() ? with_suffix(output, ".difficulty.jsonl") : config.paths.difficulty;
        write_jsonl(path, difficulty_rows);
        result.summary.details["difficulty_records"] = difficulty_rows.size();
    }
    return result.summary;
}

RunSummary cmd_synthesize(const PipelineConfig& config, const RunOptions& options, ChatClient& client) {
    const std::string input = require_path(config.paths.input, "input");
    const std::string output = require_path(config.paths.output, "output");
    const std::string rubrics_path = require_path(config.paths.rubrics, "rubrics");
    const std::vector<Query> queries = read_queries(input);

    std::map<std::string, RubricSet> rubrics;
    io::for_each_jsonl(rubrics_path, [&](const json& j, std::size_t) {
        if (j.is_object() && j.contains("error")) return;  // failed rubric item
        RubricSet r = rubric_set_from_json(j);
        if (r.query_id.empty()) throw SchemaError("rubric set has no query_id");
        rubrics[r.query_id] = std::move(r);
    });
    const std::string input_sha = sha256_hex(file_sha256(input) + file_sha256(rubrics_path));

    std::vector<WorkItem> items;
    for (const auto& q : queries) {
        items.push_back({q.id, query_stub(q.id), [&config, &client, &rubrics, &q] {
                             const auto it = rubrics.find(q.id);
                             if (it == rubrics.end()) throw SchemaError("no rubric set for query '" + q.id + "'");
                             const Trajectory t = synthesize(q, it->second, config.synthesis, client);
                             return to_json(t, it->second.checksum());
                         }});
    }
    StageResult result = run_stage(config, options, "synthesize", input_sha, items);

    int target_met = 0;
    for (const auto& [key, row] : result.rows) {
        if (row.value("stop_reason", "") == "target_met") ++target_met;
    }
    result.summary.details["target_met"] = target_met;
    write_jsonl(output, ordered_rows(result.rows));
    write_meta(config, output, "synthesize", input_sha, result.summary);
    return result.summary;
}

RunSummary cmd_reward_batch(const PipelineConfig& config, const RunOptions& options, ChatClient& client) {
    const std::string input = require_path(config.paths.input, "input");
    const std::string output = require_path(config.paths.output, "output");

    // Lines are kept raw: a malformed line is an item error, not a run error.
    std::vector<std::string> lines;
    {
        std::ifstream in(input, std::ios::binary);
        if (!in) throw IoError("cannot open " + input);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!text::trim(line).empty()) lines.push_back(std::move(line));
        }
    }

    std::vector<WorkItem> items;
    items.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        char key[32];
        std::snprintf(key, sizeof key, "%012zu", i);
        const json parsed = json::parse(lines[i], nullptr, false);
        json stub = json::object();
        if (!parsed.is_discarded() && parsed.is_object()) {
            if (const auto it = parsed.find("id"); it != parsed.end() && !it->is_null()) stub["id"] = *it;
        }
        items.push_back({key, stub, [&config, &client, parsed, line_no = i + 1] {
                             if (parsed.is_discarded()) {
                                 throw SchemaError("line " + std::to_string(line_no) + ": invalid JSON");
                             }
                             return reward_json(reward_request_from_json(parsed), config.reward, client);
                         }});
    }
    const std::string input_sha = file_sha256(input);
    StageResult result = run_stage(config, options, "reward", input_sha, items);
    write_jsonl(output, ordered_rows(result.rows));
    write_meta(config, output, "reward", input_sha, result.summary);
    return result.summary;
}

RunSummary cmd_bench(const PipelineConfig& config, const RunOptions& options, ChatClient& client) {
    const std::string input = require_path(config.paths.input, "input");
    const std::string output = require_path(config.paths.output, "output");
    std::vector<BenchItem> bench_items;
    io::for_each_jsonl(input, [&](const json& j, std::size_t) { bench_items.push_back(bench_item_from_json(j)); });

    std::vector<WorkItem> items;
    for (const auto& item : bench_items) {
        items.push_back({item.item_id, json{{"item_id", item.item_id}},
                         [&client, &item] { return to_json(bench_item(item, client)); }});
    }
    const std::string input_sha = file_sha256(input);
    StageResult result = run_stage(config, options, "bench", input_sha, items);

    std::vector<BenchItemRecord> records;
    for (const auto& [key, row] : result.rows) records.push_back(bench_record_from_json(row));
    const BenchReport report = aggregate_bench(std::move(records));
    json report_json = to_json(report);
    report_json["provenance"] = provenance(config, "bench", input_sha);
    write_json(output, report_json);
    write_jsonl(with_suffix(output, ".items.jsonl"), ordered_rows(result.rows));
    write_meta(config, with_suffix(output, ".items.jsonl"), "bench", input_sha, result.summary);

    result.summary.details = {{"micro_score", report_json["micro_score"]},
                              {"macro_score", report_json["macro_score"]},
                              {"items_without_segments", report.items_without_segments},
                              {"failed_items", report.failed_items}};
    return result.summary;
}

RunSummary cmd_patterns(const PipelineConfig& config, const RunOptions& options, ChatClient& client) {
    const std::string input = require_path(config.paths.input, "input");
    const std::string output = require_path(config.paths.output, "output");

    struct Trace {
        std::string trace_id;
        std::string question;
        std::string reasoning;
        std::string truth_or_rubrics;
        TraceTask task = TraceTask::writing;
    };
    std::vector<Trace> traces;
    io::for_each_jsonl(input, [&](const json& j, std::size_t) {
        if (!j.is_object()) throw SchemaError("trace must be a JSON object");
        Trace t;
        for (auto [field, target] : {std::pair<const char*, std::string*>{"trace_id", &t.trace_id},
                                     {"question", &t.question},
                                     {"reasoning", &t.reasoning},
                                     {"truth_or_rubrics", &t.truth_or_rubrics}}) {
            const auto it = j.find(field);
            if (it == j.end() || !it->is_string()) throw SchemaError("field '" + std::string(field) + "' must be a string");
            *target = it->get<std::string>();
        }
        if (t.trace_id.empty()) throw SchemaError("field 'trace_id' must be non-empty");
        if (const auto it = j.find("task"); it != j.end()) {
            const std::string task = it->is_string() ? it->get<std::string>() : std::string();
            if (task == "math") t.task = TraceTask::math;
            else if (task != "writing") throw SchemaError("field 'task' must be \"math\" or \"writing\"");
        }
        traces.push_back(std::move(t));
    });

    std::vector<WorkItem> items;
    for (const auto& t : traces) {
        items.push_back({t.trace_id, json{{"trace_id", t.trace_id}}, [&client, &options, &t] {
                             Diagnostics diag;
                             json row = to_json(classify_patterns(t.trace_id, t.question, t.reasoning,
                                                                  t.truth_or_rubrics, t.task, client, &diag));
                             if (options.revisions && t.task == TraceTask::writing) {
                                 json revisions = json::array();
                                 for (const auto& r : classify_revisions(t.question, t.reasoning, t.truth_or_rubrics, client)) {
                                     revisions.push_back(to_json(r));
                                 }
                                 row["revisions"] = std::move(revisions);
                             }
                             row["warnings"] = diag.messages();
                             return row;
                         }});
    }
    const std::string input_sha = file_sha256(input);
    StageResult result = run_stage(config, options, "patterns", input_sha, items);

    std::vector<PatternReport> reports;
    std::vector<RevisionInstance> revisions;
    int failed = 0;
    for (const auto& [key, row] : result.rows) {
        if (row.contains("error")) {
            ++failed;
            continue;
        }
        reports.push_back(pattern_report_from_json(row));
        if (const auto it = row.find("revisions"); it != row.end()) {
            for (const auto& r : *it) revisions.push_back(parse_revisions(json{{"patterns", json::array({r})}}).front());
        }
    }
    const auto dist = pattern_distribution(reports);
    json aggregate = {{"traces", reports.size()}, {"failed_traces", failed}, {"patterns", to_json(dist)}};
    if (options.revisions) aggregate["revisions"] = to_json(revision_distribution(revisions));
    aggregate["provenance"] = provenance(config, "patterns", input_sha);
    write_json(output, aggregate);

    fs::path csv(output);
    csv.replace_extension(".csv");
    if (csv == fs::path(output)) csv = with_suffix(output, ".csv");
    io::write_file_atomic(csv, distribution_csv(dist));
    write_jsonl(with_suffix(output, ".traces.jsonl"), ordered_rows(result.rows));
    write_meta(config, with_suffix(output, ".traces.jsonl"), "patterns", input_sha, result.summary);

    result.summary.details = {{"csv", csv.string()}, {"traces", reports.size()}, {"failed_traces", failed}};
    return result.summary;
}

}  // namespace r2write::app
