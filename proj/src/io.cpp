#include "r2write/io.hpp"

#include <fstream>
#include <sstream>

#include "r2write/errors.hpp"
#include "r2write/text.hpp"

namespace r2write::io {

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        json value = json::parse(line, nullptr, false);
        if (value.is_discarded()) throw SchemaError(where + "invalid JSON");
        try {
            fn(value, line_no);
        } catch (const SchemaError& e) {
            throw SchemaError(where + e.what());
        } catch (const json::exception& e) {
            throw SchemaError(where + e.what());
        }
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string to_jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

json error_json(std::string_view type, std::string_view message) {
    return {{"type", type}, {"message", message}};
}

}  // namespace r2write::io
