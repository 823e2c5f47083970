#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "r2write/config.hpp"
#include "r2write/corpus.hpp"
#include "r2write/json_extract.hpp"
#include "r2write/rubric.hpp"

namespace r2write::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);
[[nodiscard]] std::vector<json> read_jsonl(const std::filesystem::path& path);

[[nodiscard]] std::string fixture(const std::string& name);
[[nodiscard]] std::string golden(const std::string& name);

[[nodiscard]] Query make_query(const std::string& id, const std::string& text);
[[nodiscard]] RubricSet make_rubrics(const std::string& query_id, int key_points = 2, int criteria = 2);

// Judge replies in the shapes the scoring prompts ask for.
[[nodiscard]] std::string keypoint_reply(const std::vector<double>& grades, const std::string& feedback = "kp feedback");
[[nodiscard]] std::string quality_reply(const std::vector<double>& grades, const std::string& feedback = "quality feedback");
[[nodiscard]] std::string segments_reply(const std::vector<std::string>& contents,
                                         std::optional<int> total_count = std::nullopt);
[[nodiscard]] std::string judgments_reply(const std::vector<std::array<int, 3>>& dims);

// Both backends scripted from one fixture script; no backoff delays.
[[nodiscard]] PipelineConfig scripted_config(const std::string& script_fixture, int max_in_flight = 1);

// Runs the r2write binary; returns its exit status. stdout/stderr go to files
// in `dir` named out.txt / err.txt.
int run_cli(const std::string& args, const std::filesystem::path& dir);

}  // namespace r2write::testing
