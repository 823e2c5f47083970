#include "test_support.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace r2write::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("r2write-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd()));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::vector<json> rows;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(json::parse(line));
    }
    return rows;
}

std::string fixture(const std::string& name) { return (fs::path(R2WRITE_FIXTURE_DIR) / name).string(); }
std::string golden(const std::string& name) { return (fs::path(R2WRITE_GOLDEN_DIR) / name).string(); }

Query make_query(const std::string& id, const std::string& text) {
    Query q;
    q.id = id;
    q.text = text;
    return q;
}

RubricSet make_rubrics(const std::string& query_id, int key_points, int criteria) {
    RubricSet r;
    r.query_id = query_id;
    for (int i = 1; i <= key_points; ++i) {
        r.key_points.push_back({i, "key point " + std::to_string(i), "1 if covered, 0.5 if partial, 0 if missing"});
    }
    for (int i = 1; i <= criteria; ++i) {
        r.quality.push_back({"criterion " + std::to_string(i), "description " + std::to_string(i)});
    }
    return r;
}

std::string keypoint_reply(const std::vector<double>& grades, const std::string& feedback) {
    json scores = json::array();
    for (std::size_t i = 0; i < grades.size(); ++i) {
        scores.push_back({{"id", i + 1}, {"score", grades[i]}, {"reason", "r"}});
    }
    return json{{"scores", scores}, {"feedback", feedback}}.dump();
}

std::string quality_reply(const std::vector<double>& grades, const std::string& feedback) {
    json scores = json::array();
    for (std::size_t i = 0; i < grades.size(); ++i) {
        scores.push_back({{"name", "criterion " + std::to_string(i + 1)}, {"score", grades[i]}, {"reason", "r"}});
    }
    return json{{"scores", scores}, {"feedback", feedback}}.dump();
}

std::string segments_reply(const std::vector<std::string>& contents, std::optional<int> total_count) {
    json list = json::array();
    for (std::size_t i = 0; i < contents.size(); ++i) list.push_back({{"id", i + 1}, {"content", contents[i]}});
    return "```json\n" +
           json{{"verifications", list}, {"total_count", total_count.value_or(static_cast<int>(contents.size()))}}.dump(2) +
           "\n```";
}

std::string judgments_reply(const std::vector<std::array<int, 3>>& dims) {
    json list = json::array();
    for (std::size_t i = 0; i < dims.size(); ++i) {
        list.push_back({{"id", i + 1},
                        {"dimension_1", dims[i][0]},
                        {"dimension_2", dims[i][1]},
                        {"dimension_3", dims[i][2]},
                        {"reason", "r"}});
    }
    return json{{"evaluations", list}}.dump();
}

PipelineConfig scripted_config(const std::string& script_fixture, int max_in_flight) {
    PipelineConfig c;
    for (auto* section : {&c.writer, &c.judge}) {
        section->kind = BackendSection::Kind::scripted;
        section->script = fixture(script_fixture);
        section->backend.max_in_flight = max_in_flight;
        section->backend.retry.backoff_base = std::chrono::milliseconds(0);
    }
    return c;
}

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string("'") + R2WRITE_CLI_PATH + "' " + args + " >'" + (dir / "out.txt").string() +
                            "' 2>'" + (dir / "err.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace r2write::testing
