// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "r2write/app.hpp"
#include "r2write/corpus.hpp"
#include "r2write/patterns.hpp"
#include "r2write/processbench.hpp"
#include "r2write/reward.hpp"
#include "r2write/scripted.hpp"
#include "r2write/server.hpp"
#include "r2write/synthesis.hpp"
#include "test_support.hpp"

namespace {

using namespace r2write;
using testing::fixture;
using testing::read_jsonl;
using testing::read_text;
using testing::TempDir;

struct Failure {
    std::string what;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

void require_near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
        std::ostringstream s;
        s.precision(17);
        s << what << ": got " << got << ", want " << want;
        throw Failure{s.str()};
    }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Sign sign_of(int v) { return v > 0 ? Sign::positive : Sign::negative; }

// R_all from raw ±1 triples, computed without the library.
double oracle_r_all(double r_a, const std::vector<std::array<int, 3>>& dims, double alpha) {
    if (r_a == 0.0) return 0.0;
    if (dims.empty()) return r_a;
    double sum = 0.0;
    for (const auto& d : dims) sum += (d[0] == 1 && d[1] == 1 && d[2] == 1) ? 1.0 : -1.0;
    return alpha * r_a + (1.0 - alpha) * (sum / static_cast<double>(dims.size()));
}

void reward_oracle() {
    std::mt19937_64 rng(7);
    const double r_as[] = {0.0, 0.5, 1.0};
    const auto start = Clock::now();
    for (int n = 0; n < 10000; ++n) {
        const double r_a = r_as[rng() % 3];
        const double alpha = 0.01 + 0.98 * std::uniform_real_distribution<double>(0, 1)(rng);
        std::vector<std::array<int, 3>> dims(rng() % 9);
        std::vector<SegmentJudgment> judgments;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            for (auto& d : dims[i]) d = (rng() % 3 == 0) ? -1 : 1;
            judgments.push_back(SegmentJudgment::make(static_cast<int>(i + 1), sign_of(dims[i][0]),
                                                      sign_of(dims[i][1]), sign_of(dims[i][2])));
        }
        const TotalReward t = total_reward(r_a, judgments, alpha);
        require_near(t.r_all, oracle_r_all(r_a, dims, alpha), 1e-12, "case " + std::to_string(n));
        require(t.r_all >= -1.0 && t.r_all <= 1.0, "r_all out of [-1, 1]");
    }
    const double elapsed = seconds_since(start);
    require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
}

void truth_table() {
    int positives = 0;
    for (int bits = 0; bits < 8; ++bits) {
        const int f = (bits & 4) ? 1 : -1;
        const int r = (bits & 2) ? 1 : -1;
        const int a = (bits & 1) ? 1 : -1;
        const Sign got = segment_reward(sign_of(f), sign_of(r), sign_of(a));
        const int want = (f == 1 && r == 1 && a == 1) ? 1 : -1;
        require(value(got) == want, "triple " + std::to_string(f) + "," + std::to_string(r) + "," + std::to_string(a));
        positives += want == 1;
    }
    require(positives == 1, "exactly one passing triple");
}

void answer_gate() {
    const Query query = testing::make_query("q", "Write a product announcement");
    const RubricSet rubrics = testing::make_rubrics("q", 2, 6);
    const std::string sample = "<think>Draft. Wait, add the price.</think><answer>weak</answer>";
    for (const Slot slot : {Slot::A, Slot::B}) {
        std::uint64_t seed = 0;
        while (slot_for_seed(item_seed(seed, query, sample)) != slot) ++seed;
        auto transport = std::make_shared<ScriptedTransport>();
        auto backend = make_scripted_backend(transport);
        // The reference wins in either slot.
        transport->push_reply(Role::judge, slot == Slot::A ? "[[B]]" : "[[A]]");
        const auto r = reward_sample(sample, query, "reference", &rubrics, RewardConfig{0.25, seed}, *backend);
        require(r.reward.r_a == 0.0 && r.reward.r_all == 0.0, "losing answer must score 0");
        require(transport->calls_for("extract_segments") == 0, "extraction was called");
        require(transport->calls_for("judge_segments") == 0, "segment judging was called");
    }
}

void push_scores(ScriptedTransport& t, double kp, double quality) {
    t.push_reply(Role::judge, testing::keypoint_reply({kp, kp}));
    t.push_reply(Role::judge, testing::quality_reply({quality, quality}));
}

void refinement_golden() {
    auto transport = std::make_shared<ScriptedTransport>();
    auto backend = make_scripted_backend(transport);
    const Query query = testing::make_query("memo", "Write a budget memo for the board");
    const RubricSet rubrics = testing::make_rubrics("memo", 2, 2);
    transport->push_reply(Role::writer, "<think>Plan the memo around cost drivers.</think>\nFirst draft of the memo.");
    push_scores(*transport, 0.5, 5);
    transport->push_reply(Role::writer, "Reflection one: the memo lacks concrete numbers.");
    transport->push_reply(Role::writer, "Revised memo one.");
    push_scores(*transport, 0.5, 8);
    transport->push_reply(Role::writer, "Reflection two: tone is off.");
    transport->push_reply(Role::writer, "Revised memo two.");
    push_scores(*transport, 0.5, 6);
    transport->push_reply(Role::writer, "Reflection three: the structure buries the recommendation.");
    transport->push_reply(Role::writer, "```markdown\nRevised memo three.\n```");
    push_scores(*transport, 1, 9);

    const Trajectory t = synthesize(query, rubrics, SynthesisConfig{}, *backend);
    require(t.turns.size() == 3, "accepted turns");
    require(t.turns[0].index == 0 && t.turns[1].index == 1 && t.turns[2].index == 3, "accepted turn indices");
    require(t.rejected_count == 1, "rejected count");
    require(t.final_answer == "Revised memo three.", "final answer");
    require(t.sample == read_text(testing::golden("refinement_sample.txt")), "sample differs from golden");
}

void early_termination() {
    auto transport = std::make_shared<ScriptedTransport>();
    auto backend = make_scripted_backend(transport);
    transport->push_reply(Role::writer, "Great draft.");
    push_scores(*transport, 1, 8);
    const Trajectory t = synthesize(testing::make_query("m", "Write a memo"), testing::make_rubrics("m", 2, 2),
                                    SynthesisConfig{}, *backend);
    require(t.turns.size() == 1 && t.stop_reason == StopReason::target_met, "draft must stop the loop");
    require(transport->calls_for("reflect") == 0, "reflect was called");
    require(transport->calls_for("revise") == 0, "revise was called");
}

using Gram = std::tuple<std::string, std::string, std::string>;

std::set<Gram> gram_set(const std::string& s) {
    std::vector<std::string> w;
    std::istringstream in(s);
    for (std::string word; in >> word;) w.push_back(word);
    std::set<Gram> out;
    if (w.size() < 3) {
        w.resize(3);
        out.insert({w[0], w[1], w[2]});
        return out;
    }
    for (std::size_t i = 0; i + 2 < w.size(); ++i) out.insert({w[i], w[i + 1], w[i + 2]});
    return out;
}

double oracle_jaccard(const std::string& a, const std::string& b) {
    const auto ga = gram_set(a);
    const auto gb = gram_set(b);
    std::size_t shared = 0;
    for (const auto& g : ga) shared += gb.count(g);
    return static_cast<double>(shared) / static_cast<double>(ga.size() + gb.size() - shared);
}

std::string random_text(std::mt19937& rng, int words, int vocab) {
    std::string s;
    for (int i = 0; i < words; ++i) {
        if (i > 0) s += ' ';
        s += "w" + std::to_string(rng() % vocab);
    }
    return s;
}

void dedup_oracle() {
    std::mt19937 rng(11);
    std::vector<std::string> texts;
    while (texts.size() < 200) {
        if (!texts.empty() && rng() % 3 == 0) {
            std::string base = texts[rng() % texts.size()];
            texts.push_back(base + " " + random_text(rng, static_cast<int>(rng() % 4), 40));
        } else {
            texts.push_back(random_text(rng, 12 + static_cast<int>(rng() % 30), 40));
        }
    }
    std::vector<Query> queries;
    for (std::size_t i = 0; i < texts.size(); ++i) queries.push_back(testing::make_query("q" + std::to_string(i), texts[i]));

    std::vector<std::string> expected;
    for (const auto& t : texts) {
        bool dup = false;
        for (const auto& k : expected) dup = dup || oracle_jaccard(t, k) > 0.7;
        if (!dup) expected.push_back(t);
    }

    const auto start = Clock::now();
    const auto kept = corpus::dedup(queries, 0.7);
    const double elapsed = seconds_since(start);
    std::vector<std::string> got;
    for (const auto& q : kept) got.push_back(q.text);
    require(got == expected, "kept " + std::to_string(got.size()) + ", oracle kept " + std::to_string(expected.size()));
    require(expected.size() < texts.size(), "fixture produced no duplicates");
    require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
}

void top_k_oracle() {
    std::mt19937 rng(13);
    std::vector<DifficultyRecord> records;
    for (int i = 0; i < 1000; ++i) {
        // Coarse scores force gap ties.
        records.push_back(DifficultyRecord::from_scores("q" + std::to_string(rng() % 100000) + "_" + std::to_string(i),
                                                        1.0 + (rng() % 10) / 10.0, 1.0 + (rng() % 10) / 10.0));
    }
    auto sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const DifficultyRecord& a, const DifficultyRecord& b) {
        if (a.gap != b.gap) return a.gap > b.gap;
        return a.query_id < b.query_id;
    });
    for (const std::size_t k : {1u, 10u, 137u, 1000u, 2000u}) {
        const auto got = corpus::rank_by_gap(records, k);
        const std::size_t n = std::min<std::size_t>(k, sorted.size());
        require(got.size() == n, "size for k = " + std::to_string(k));
        for (std::size_t i = 0; i < n; ++i) {
            require(got[i].query_id == sorted[i].query_id, "rank " + std::to_string(i) + " for k = " + std::to_string(k));
        }
    }
}

std::shared_ptr<Backend> script_backend(const std::string& name, int workers = 1) {
    const json script = json::parse(read_text(fixture(name)));
    return make_scripted_backend(ScriptedTransport::from_json(script), workers);
}

void bench_fixture() {
    std::vector<BenchItem> items;
    for (const auto& j : read_jsonl(fixture("bench_items.jsonl"))) items.push_back(bench_item_from_json(j));
    require(items.size() == 6, "fixture size");
    const auto backend = script_backend("bench_script.json");
    const BenchReport report = bench(items, *backend, 1);
    require(report.micro_score.has_value() && report.macro_score.has_value(), "scores missing");
    require_near(*report.micro_score, 4.0 / 10.0, 1e-12, "micro");
    require_near(*report.macro_score, 13.0 / 24.0, 1e-12, "macro");
    require(report.items_without_segments == 2, "items without segments");
}

void pattern_fixture() {
    const auto backend = script_backend("pattern_script.json");
    std::vector<PatternReport> reports;
    std::vector<RevisionInstance> revisions;
    for (const auto& j : read_jsonl(fixture("pattern_traces.jsonl"))) {
        const std::string id = j["trace_id"], question = j["question"], reasoning = j["reasoning"],
                          rubrics = j["truth_or_rubrics"];
        reports.push_back(classify_patterns(id, question, reasoning, rubrics, TraceTask::writing, *backend));
        for (auto& r : classify_revisions(question, reasoning, rubrics, *backend)) revisions.push_back(r);
    }
    const auto dist = pattern_distribution(reports);
    const double shares[] = {5.0 / 13, 2.0 / 13, 3.0 / 13, 1.0 / 13, 2.0 / 13};
    const double helpful[] = {2.0 / 3, 1.0 / 2, 2.0 / 3, 1.0, 1.0};
    for (std::size_t k = 0; k < 5; ++k) {
        const std::string kind(to_string(dist[k].kind));
        require(dist[k].share && dist[k].helpful, kind + " missing values");
        require_near(*dist[k].share, shares[k], 1e-9, kind + " share");
        require_near(*dist[k].helpful, helpful[k], 1e-9, kind + " helpful");
    }
    const auto rev = revision_distribution(revisions);
    const double percent[] = {200.0 / 9, 200.0 / 9, 500.0 / 9};
    for (std::size_t c = 0; c < 3; ++c) {
        require(rev.percent[c].has_value(), "revision percent missing");
        require_near(*rev.percent[c], percent[c], 1e-9, std::string(to_string(kRevisionCategories[c])) + " percent");
    }
}

PipelineConfig reward_config(int max_in_flight) {
    auto config = testing::scripted_config("reward_script.json", max_in_flight);
    config.reward.seed = 2024;
    return config;
}

void determinism() {
    TempDir dir;
    std::vector<std::string> outputs;
    for (const int workers : {1, 8, 64}) {
        auto config = reward_config(workers);
        config.paths.input = fixture("reward_batch.jsonl");
        config.paths.output = dir.file("out" + std::to_string(workers) + ".jsonl");
        const auto clients = app::make_clients(config);
        (void)app::cmd_reward_batch(config, {}, *clients.router);
        outputs.push_back(read_text(config.paths.output));
    }
    require(outputs[0] == outputs[1], "1 vs 8 workers differ");
    require(outputs[0] == outputs[2], "1 vs 64 workers differ");

    const auto batch_rows = read_jsonl(dir.file("out1.jsonl"));
    const auto requests = read_jsonl(fixture("reward_batch.jsonl"));
    require(batch_rows.size() == requests.size(), "batch output size");

    const auto config = reward_config(4);
    const auto clients = app::make_clients(config);
    app::RewardServer server(config.reward, *clients.router);
    const int port = server.bind("127.0.0.1", 0);
    std::thread listener([&server] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    std::string mismatch;
    for (std::size_t i = 0; i < requests.size() && mismatch.empty(); i += 7) {
        const auto res = client.Post("/v1/reward", requests[i].dump(), "application/json");
        if (!res) {
            mismatch = "no HTTP response for line " + std::to_string(i);
        } else if (res->status == 200 && json::parse(res->body) != batch_rows[i]) {
            mismatch = "HTTP result differs from batch line " + std::to_string(i);
        } else if (res->status != 200 && !batch_rows[i].contains("error")) {
            mismatch = "HTTP status " + std::to_string(res->status) + " for line " + std::to_string(i);
        }
    }
    server.stop();
    listener.join();
    require(mismatch.empty(), mismatch);
}

void resume_idempotence() {
    TempDir dir;
    auto config = testing::scripted_config("synth_script.json", 4);
    config.paths.input = fixture("synth_queries.jsonl");
    config.paths.rubrics = fixture("synth_rubrics.jsonl");
    const auto run = [&](const std::string& output, app::RunOptions options) {
        config.paths.output = dir.file(output);
        const auto clients = app::make_clients(config);
        return app::cmd_synthesize(config, options, *clients.router);
    };
    (void)run("full.jsonl", {});
    app::RunOptions interrupted;
    interrupted.limit = 4;
    const auto first = run("resumed.jsonl", interrupted);
    require(first.pending == 6, "interrupted run should leave 6 items");
    app::RunOptions resume;
    resume.resume = true;
    const auto second = run("resumed.jsonl", resume);
    require(second.resumed == 4 && second.processed == 6, "resume counts");
    require(read_text(dir.file("resumed.jsonl")) == read_text(dir.file("full.jsonl")), "resumed output differs");
}

void pinned_constants() {
    const PipelineConfig c;
    require(c.reward.alpha == 0.25 && kDefaultAlpha == 0.25, "alpha");
    require(c.synthesis.max_turns == 3, "max_turns");
    require(c.synthesis.targets.kp == 1.0 && c.synthesis.targets.quality == 8.0, "targets");
    require(c.corpus.dedup_threshold == 0.7 && corpus::kDefaultDedupThreshold == 0.7, "dedup threshold");
    require(c.corpus.min_tokens == 10 && c.corpus.max_tokens == 10000, "token limits");
    require(c.writer.backend.defaults.temperature == 0.6 && c.writer.backend.defaults.max_tokens == 32768, "writer sampling");
    require(c.judge.backend.defaults.temperature == 0.0 && c.judge.backend.defaults.max_tokens == 8192, "judge sampling");
    require(c.dump() == json::parse(read_text(testing::golden("default_config.json"))), "config dump differs from golden");
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
        {"01 reward matches oracle on 10000 cases", reward_oracle},
        {"02 segment reward truth table", truth_table},
        {"03 losing answer skips process scoring", answer_gate},
        {"04 refinement loop golden", refinement_golden},
        {"05 passing draft ends the loop", early_termination},
        {"06 dedup matches pairwise oracle", dedup_oracle},
        {"07 top-k matches full sort", top_k_oracle},
        {"08 bench fixture micro/macro", bench_fixture},
        {"09 pattern and revision fixture", pattern_fixture},
        {"10 reward determinism and HTTP parity", determinism},
        {"11 resume idempotence", resume_idempotence},
        {"12 pinned constants and config dump", pinned_constants},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        std::string reason;
        try {
            check();
        } catch (const Failure& f) {
            reason = f.what;
        } catch (const std::exception& e) {
            reason = std::string("exception: ") + e.what();
        }
        if (reason.empty()) {
            std::cout << "PASS " << name << std::endl;
        } else {
            ++failed;
            std::cout << "FAIL " << name << ": " << reason << std::endl;
        }
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
