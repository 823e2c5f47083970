#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "json_extract.hpp"

namespace r2write {

// Per-item progress of one stage in checkpoint_dir:
//   <stage>.checkpoint.json  {stage, completed_ids, config_checksum, input_sha256}
//   <stage>.state.jsonl      one {id, result} line per completed item
// The state line is appended before the checkpoint is rewritten, so a crash
// between the two only costs redoing that item.
class CheckpointStore {
public:
    CheckpointStore(std::filesystem::path dir, std::string stage, std::string config_checksum,
                    std::string input_sha256);

    // Without resume any previous state is discarded. With resume the stored
    // checksums must match, else CheckpointMismatch; a missing checkpoint
    // starts fresh. A truncated last state line is ignored.
    void open(bool resume);

    [[nodiscard]] bool done(const std::string& id) const;
    [[nodiscard]] std::size_t completed() const;
    [[nodiscard]] std::map<std::string, json> results() const;

    // Thread-safe.
    void record(const std::string& id, const json& result);

    [[nodiscard]] std::filesystem::path checkpoint_path() const;
    [[nodiscard]] std::filesystem::path state_path() const;

private:
    void write_checkpoint() const;

    std::filesystem::path dir_;
    std::string stage_;
    std::string config_checksum_;
    std::string input_sha256_;
    mutable std::mutex mu_;
    std::set<std::string> completed_;
    std::map<std::string, json> results_;
};

}  // namespace r2write
