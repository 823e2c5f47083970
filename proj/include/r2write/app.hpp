#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "backend.hpp"
#include "config.hpp"
#include "json_extract.hpp"

namespace r2write::app {

inline constexpr std::string_view kToolName = "r2write";

[[nodiscard]] std::string_view version() noexcept;

struct Clients {
    std::shared_ptr<Backend> writer;
    std::shared_ptr<Backend> judge;
    std::shared_ptr<ChatClient> router;
};

// One backend per section. Scripted sections naming the same script share a
// single transport, so its per-role queues and rules see both roles.
[[nodiscard]] Clients make_clients(const PipelineConfig& config);

struct RunOptions {
    bool resume = false;
    std::optional<std::size_t> limit;  // stop after this many newly processed items
    bool revisions = false;            // patterns: also classify revision types
};

struct RunSummary {
    std::string stage;
    std::size_t items = 0;      // input items
    std::size_t resumed = 0;    // restored from the checkpoint
    std::size_t processed = 0;  // completed in this run
    std::size_t errors = 0;
    std::size_t pending = 0;    // left for a later --resume because of the limit
    json details = json::object();

    [[nodiscard]] int exit_code() const noexcept { return errors == 0 ? 0 : 1; }
};

[[nodiscard]] json to_json(const RunSummary& s);

// {tool, version, stage, config_checksum, input_sha256, prompt_checksums}.
[[nodiscard]] json provenance(const PipelineConfig& config, std::string_view stage, std::string_view input_sha256);

// filter -> dedup -> truncate -> optional top-k by difficulty gap. Writes the
// curated JSONL plus <output>.stats.json. top_k without a difficulty file is a
// UsageError.
[[nodiscard]] RunSummary cmd_curate(const PipelineConfig& config);

// Rubric sets per query. With paths.answers, also scores reference and model
// answer into difficulty records (paths.difficulty, else <output>.difficulty.jsonl).
[[nodiscard]] RunSummary cmd_rubrics(const PipelineConfig& config, const RunOptions& options, ChatClient& client);

// One trajectory per query, sorted by query id; needs paths.rubrics.
[[nodiscard]] RunSummary cmd_synthesize(const PipelineConfig& config, const RunOptions& options, ChatClient& client);

// Reward lines in input order; malformed lines become error records in place.
[[nodiscard]] RunSummary cmd_reward_batch(const PipelineConfig& config, const RunOptions& options, ChatClient& client);

// Report JSON at the output path plus <output>.items.jsonl.
[[nodiscard]] RunSummary cmd_bench(const PipelineConfig& config, const RunOptions& options, ChatClient& client);

// Aggregate JSON at the output path, <output-stem>.csv and <output>.traces.jsonl.
[[nodiscard]] RunSummary cmd_patterns(const PipelineConfig& config, const RunOptions& options, ChatClient& client);

}  // namespace r2write::app
