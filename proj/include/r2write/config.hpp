#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "backend.hpp"
#include "corpus.hpp"
#include "json_extract.hpp"
#include "reward.hpp"
#include "synthesis.hpp"

namespace r2write {

struct BackendSection {
    enum class Kind { http, scripted };
    Kind kind = Kind::http;
    BackendConfig backend;
    std::string script;  // script JSON path for the scripted kind
};

struct CorpusParams {
    std::size_t min_tokens = corpus::kDefaultMinTokens;
    double dedup_threshold = corpus::kDefaultDedupThreshold;
    std::size_t max_tokens = corpus::kDefaultMaxTokens;
    std::optional<std::size_t> top_k;
};

struct PathParams {
    std::string input;
    std::string output;
    std::string checkpoint_dir;
    std::string rubrics;     // rubric sets JSONL, read by synthesize
    std::string difficulty;  // difficulty records JSONL
    std::string answers;     // model answers JSONL {query_id, answer}
};

struct PipelineConfig {
    BackendSection writer{BackendSection::Kind::http, BackendConfig::writer_defaults(), {}};
    BackendSection judge{BackendSection::Kind::http, BackendConfig::judge_defaults(), {}};
    CorpusParams corpus;
    SynthesisConfig synthesis;
    RewardConfig reward;
    PathParams paths;
    std::string serve_addr = "127.0.0.1:8080";

    // Throws UsageError for out-of-range parameters.
    void validate() const;

    // Every setting, defaults included.
    [[nodiscard]] json dump() const;

    // SHA-256 over the settings that can change results. Concurrency, retry,
    // timeouts, key variables and paths are excluded; a script file enters by
    // content.
    [[nodiscard]] std::string checksum() const;

    // Largest max_in_flight of the two sections; the item worker count.
    [[nodiscard]] int workers() const noexcept;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

[[nodiscard]] std::optional<std::string> process_env(std::string_view name);

// Replaces ${NAME} with the variable's value. Throws UsageError for an unset
// variable or an unterminated reference.
[[nodiscard]] std::string interpolate_env(std::string_view value, const EnvLookup& env);

// INI text with sections [writer], [judge], [corpus], [synthesis], [reward],
// [paths], [serve]. Unknown sections or keys throw UsageError.
[[nodiscard]] PipelineConfig parse_config(std::string_view ini, const EnvLookup& env = process_env);

[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

}  // namespace r2write
