#include <gtest/gtest.h>

#include <map>

#include "r2write/checkpoint.hpp"
#include "r2write/config.hpp"
#include "r2write/errors.hpp"
#include "test_support.hpp"

namespace r2write {
namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](std::string_view name) -> std::optional<std::string> {
        const auto it = vars.find(std::string(name));
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

TEST(Config, DefaultsArePinned) {
    const PipelineConfig c;
    EXPECT_EQ(c.reward.alpha, 0.25);
    EXPECT_EQ(c.synthesis.max_turns, 3);
    EXPECT_EQ(c.synthesis.targets.kp, 1.0);
    EXPECT_EQ(c.synthesis.targets.quality, 8.0);
    EXPECT_EQ(c.corpus.dedup_threshold, 0.7);
    EXPECT_EQ(c.corpus.min_tokens, 10u);
    EXPECT_EQ(c.corpus.max_tokens, 10000u);
}

TEST(Config, DumpMatchesGolden) {
    const json golden = json::parse(testing::read_text(testing::golden("default_config.json")));
    EXPECT_EQ(PipelineConfig{}.dump(), golden) << PipelineConfig{}.dump().dump(2);
}

TEST(Config, ParsesAllSections) {
    const auto c = parse_config(R"(
[writer]
kind = http
endpoint = ${BASE}/v1
model = "writer-7b"
max_in_flight = 16
temperature = 0.7

[judge]
endpoint = https://judge.example/v1
api_key_env = JUDGE_KEY
backoff_ms = 10

[corpus]
top_k = 50
dedup_threshold = 0.8

[synthesis]
max_turns = 5
separator = \n---\n

[reward]
alpha = 0.4
seed = 12345678901234

[paths]
input = in.jsonl

[serve]
addr = 0.0.0.0:9000
)",
                                fake_env({{"BASE", "http://localhost:8000"}}));
    EXPECT_EQ(c.writer.backend.endpoint, "http://localhost:8000/v1");
    EXPECT_EQ(c.writer.backend.model_name, "writer-7b");
    EXPECT_EQ(c.writer.backend.max_in_flight, 16);
    EXPECT_EQ(c.writer.backend.defaults.temperature, 0.7);
    EXPECT_EQ(c.judge.backend.api_key_env, "JUDGE_KEY");
    EXPECT_EQ(c.judge.backend.retry.backoff_base.count(), 10);
    EXPECT_EQ(*c.corpus.top_k, 50u);
    EXPECT_EQ(c.synthesis.max_turns, 5);
    EXPECT_EQ(c.synthesis.separator, "\n---\n");
    EXPECT_EQ(c.reward.alpha, 0.4);
    EXPECT_EQ(c.reward.seed, 12345678901234u);
    EXPECT_EQ(c.paths.input, "in.jsonl");
    EXPECT_EQ(c.serve_addr, "0.0.0.0:9000");
    EXPECT_EQ(c.workers(), 16);
}

TEST(Config, RejectsUnknownAndInvalid) {
    EXPECT_THROW((void)parse_config("[writer]\ncolour = red\n"), UsageError);
    EXPECT_THROW((void)parse_config("[mystery]\na = 1\n"), UsageError);
    EXPECT_THROW((void)parse_config("stray = 1\n"), UsageError);
    EXPECT_THROW((void)parse_config("[reward]\nalpha = 1\n"), UsageError);
    EXPECT_THROW((void)parse_config("[reward]\nalpha = abc\n"), UsageError);
    EXPECT_THROW((void)parse_config("[synthesis]\nmax_turns = 0\n"), UsageError);
    EXPECT_THROW((void)parse_config("[writer]\nmax_in_flight = 0\n"), UsageError);
    EXPECT_THROW((void)parse_config("[writer]\nendpoint = ${NOPE}\n", fake_env({})), UsageError);
    EXPECT_NO_THROW((void)parse_config("[corpus]\n"));
}

TEST(InterpolateEnv, Substitutes) {
    const auto env = fake_env({{"A", "x"}, {"B", ""}});
    EXPECT_EQ(interpolate_env("${A}-${B}-${A}", env), "x--x");
    EXPECT_EQ(interpolate_env("no vars", env), "no vars");
    EXPECT_THROW((void)interpolate_env("${A", env), UsageError);
}

TEST(Config, ChecksumIgnoresOperationalSettings) {
    PipelineConfig a;
    PipelineConfig b;
    b.writer.backend.max_in_flight = 64;
    b.judge.backend.retry.max_attempts = 9;
    b.judge.backend.timeout = std::chrono::milliseconds(5);
    b.paths.output = "elsewhere";
    b.serve_addr = "0.0.0.0:1";
    EXPECT_EQ(a.checksum(), b.checksum());
    b.reward.seed = 1;
    EXPECT_NE(a.checksum(), b.checksum());
    PipelineConfig c;
    c.synthesis.max_turns = 4;
    EXPECT_NE(a.checksum(), c.checksum());
}

TEST(Config, ChecksumFollowsScriptContent) {
    testing::TempDir dir;
    testing::write_text(dir.path() / "s.json", R"({"judge": ["a"]})");
    PipelineConfig a;
    a.judge.kind = BackendSection::Kind::scripted;
    a.judge.script = dir.file("s.json");
    const std::string first = a.checksum();
    testing::write_text(dir.path() / "s.json", R"({"judge": ["b"]})");
    EXPECT_NE(a.checksum(), first);
}

TEST(Checkpoint, RecordsAndResumes) {
    testing::TempDir dir;
    {
        CheckpointStore store(dir.path() / "ckpt", "stage", "cfg", "input");
        store.open(false);
        store.record("a", json{{"v", 1}});
        store.record("b", json{{"v", 2}});
        EXPECT_EQ(store.completed(), 2u);
    }
    const json cp = json::parse(testing::read_text(dir.path() / "ckpt" / "stage.checkpoint.json"));
    EXPECT_EQ(cp["stage"], "stage");
    EXPECT_EQ(cp["completed_ids"], json::array({"a", "b"}));
    EXPECT_EQ(cp["config_checksum"], "cfg");

    CheckpointStore resumed(dir.path() / "ckpt", "stage", "cfg", "input");
    resumed.open(true);
    EXPECT_TRUE(resumed.done("a"));
    EXPECT_FALSE(resumed.done("c"));
    EXPECT_EQ(resumed.results().at("b")["v"], 2);

    CheckpointStore fresh(dir.path() / "ckpt", "stage", "cfg", "input");
    fresh.open(false);
    EXPECT_EQ(fresh.completed(), 0u);
}

TEST(Checkpoint, RefusesMismatchedConfigOrInput) {
    testing::TempDir dir;
    {
        CheckpointStore store(dir.path(), "s", "cfg", "in");
        store.open(false);
        store.record("a", json(1));
    }
    CheckpointStore other_cfg(dir.path(), "s", "cfg2", "in");
    EXPECT_THROW(other_cfg.open(true), CheckpointMismatch);
    CheckpointStore other_input(dir.path(), "s", "cfg", "in2");
    EXPECT_THROW(other_input.open(true), CheckpointMismatch);
}

TEST(Checkpoint, IgnoresTruncatedAndUnlistedStateLines) {
    testing::TempDir dir;
    {
        CheckpointStore store(dir.path(), "s", "cfg", "in");
        store.open(false);
        store.record("a", json(1));
    }
    // An item whose state line was written but never checkpointed, then a torn write.
    std::string state = testing::read_text(dir.path() / "s.state.jsonl");
    state += R"({"id":"b","result":2})" "\n" R"({"id":"c","res)";
    testing::write_text(dir.path() / "s.state.jsonl", state);
    CheckpointStore store(dir.path(), "s", "cfg", "in");
    store.open(true);
    EXPECT_EQ(store.completed(), 1u);
    EXPECT_FALSE(store.done("b"));
    EXPECT_EQ(testing::read_jsonl(dir.path() / "s.state.jsonl").size(), 1u);
}

TEST(Checkpoint, MissingCheckpointStartsFresh) {
    testing::TempDir dir;
    CheckpointStore store(dir.path() / "none", "s", "cfg", "in");
    store.open(true);
    EXPECT_EQ(store.completed(), 0u);
}

}  // namespace
}  // namespace r2write
