#include "r2write/checkpoint.hpp"

#include <fstream>

#include "r2write/errors.hpp"
#include "r2write/io.hpp"
#include "r2write/text.hpp"

namespace r2write {

namespace fs = std::filesystem;

CheckpointStore::CheckpointStore(fs::path dir, std::string stage, std::string config_checksum,
                                 std::string input_sha256)
    : dir_(std::move(dir)),
      stage_(std::move(stage)),
      config_checksum_(std::move(config_checksum)),
      input_sha256_(std::move(input_sha256)) {}

fs::path CheckpointStore::checkpoint_path() const { return dir_ / (stage_ + ".checkpoint.json"); }
fs::path CheckpointStore::state_path() const { return dir_ / (stage_ + ".state.jsonl"); }

void CheckpointStore::open(bool resume) {
    std::lock_guard lock(mu_);
    completed_.clear();
    results_.clear();
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + dir_.string() + ": " + ec.message());

    if (!resume || !fs::exists(checkpoint_path())) {
        io::write_file_atomic(state_path(), "");
        write_checkpoint();
        return;
    }

    const json cp = json::parse(io::read_file(checkpoint_path()), nullptr, false);
    if (cp.is_discarded() || !cp.is_object()) throw CheckpointMismatch(checkpoint_path().string() + " is not valid JSON");
    if (cp.value("stage", "") != stage_) {
        throw CheckpointMismatch(checkpoint_path().string() + " belongs to stage '" + cp.value("stage", "") + "'");
    }
    if (cp.value("config_checksum", "") != config_checksum_) {
        throw CheckpointMismatch("configuration changed since the checkpointed run; rerun without --resume");
    }
    if (cp.value("input_sha256", "") != input_sha256_) {
        throw CheckpointMismatch("input file changed since the checkpointed run; rerun without --resume");
    }
    std::set<std::string> listed;
    for (const auto& id : cp.value("completed_ids", json::array())) {
        if (id.is_string()) listed.insert(id.get<std::string>());
    }

    std::ifstream in(state_path(), std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object() || !row.contains("id") || !row["id"].is_string()) continue;
        const std::string id = row["id"].get<std::string>();
        if (!listed.count(id)) continue;
        results_[id] = std::move(row["result"]);
        completed_.insert(id);
    }

    // Rewrite both files so they agree, dropping any torn tail.
    std::string state;
    for (const auto& [id, result] : results_) state += json{{"id", id}, {"result", result}}.dump() + "\n";
    io::write_file_atomic(state_path(), state);
    write_checkpoint();
}

bool CheckpointStore::done(const std::string& id) const {
    std::lock_guard lock(mu_);
    return completed_.count(id) > 0;
}

std::size_t CheckpointStore::completed() const {
    std::lock_guard lock(mu_);
    return completed_.size();
}

std::map<std::string, json> CheckpointStore::results() const {
    std::lock_guard lock(mu_);
    return results_;
}

void CheckpointStore::record(const std::string& id, const json& result) {
    std::lock_guard lock(mu_);
    {
        std::ofstream out(state_path(), std::ios::binary | std::ios::app);
        out << json{{"id", id}, {"result", result}}.dump() << '\n';
        out.flush();
        if (!out) throw IoError("cannot append to " + state_path().string());
    }
    completed_.insert(id);
    results_[id] = result;
    write_checkpoint();
}

void CheckpointStore::write_checkpoint() const {
    json ids = json::array();
    for (const auto& id : completed_) ids.push_back(id);
    const json cp = {{"stage", stage_},
                     {"completed_ids", std::move(ids)},
                     {"config_checksum", config_checksum_},
                     {"input_sha256", input_sha256_}};
    io::write_file_atomic(checkpoint_path(), cp.dump(2) + "\n");
}

}  // namespace r2write
