#include "r2write/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "r2write/errors.hpp"
#include "r2write/hashing.hpp"
#include "r2write/io.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

namespace pt = boost::property_tree;

std::string_view kind_name(BackendSection::Kind kind) {
    return kind == BackendSection::Kind::http ? "http" : "scripted";
}

template <typename T>
T parse_number(const std::string& raw, const std::string& key) {
    const std::string v = text::trim(raw);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw UsageError("config key '" + key + "': cannot parse \"" + v + "\" as a number");
    }
    return out;
}

// Backslash escapes \n, \t and \\ in a value, so separators can hold newlines.
std::string unescape(std::string_view v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != '\\' || i + 1 == v.size()) {
            out += v[i];
            continue;
        }
        const char next = v[++i];
        if (next == 'n') out += '\n';
        else if (next == 't') out += '\t';
        else if (next == '\\') out += '\\';
        else {
            out += '\\';
            out += next;
        }
    }
    return out;
}

std::string strip_quotes(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

json section_json(const BackendSection& s) {
    const auto& b = s.backend;
    return {{"kind", kind_name(s.kind)},
            {"endpoint", b.endpoint},
            {"model", b.model_name},
            {"api_key_env", b.api_key_env},
            {"max_in_flight", b.max_in_flight},
            {"max_attempts", b.retry.max_attempts},
            {"backoff_ms", b.retry.backoff_base.count()},
            {"max_backoff_ms", b.retry.max_backoff.count()},
            {"timeout_ms", b.timeout.count()},
            {"temperature", b.defaults.temperature},
            {"max_tokens", b.defaults.max_tokens},
            {"script", s.script}};
}

void apply_backend(BackendSection& s, const std::string& key, const std::string& value, const std::string& where) {
    auto& b = s.backend;
    if (key == "kind") {
        if (value == "http") s.kind = BackendSection::Kind::http;
        else if (value == "scripted") s.kind = BackendSection::Kind::scripted;
        else throw UsageError("config key '" + where + "' must be http or scripted");
    } else if (key == "endpoint") {
        b.endpoint = value;
    } else if (key == "model") {
        b.model_name = value;
    } else if (key == "api_key_env") {
        b.api_key_env = value;
    } else if (key == "max_in_flight") {
        b.max_in_flight = parse_number<int>(value, where);
    } else if (key == "max_attempts") {
        b.retry.max_attempts = parse_number<int>(value, where);
    } else if (key == "backoff_ms") {
        b.retry.backoff_base = std::chrono::milliseconds(parse_number<long>(value, where));
    } else if (key == "max_backoff_ms") {
        b.retry.max_backoff = std::chrono::milliseconds(parse_number<long>(value, where));
    } else if (key == "timeout_ms") {
        b.timeout = std::chrono::milliseconds(parse_number<long>(value, where));
    } else if (key == "temperature") {
        b.defaults.temperature = parse_number<double>(value, where);
    } else if (key == "max_tokens") {
        b.defaults.max_tokens = parse_number<int>(value, where);
    } else if (key == "script") {
        s.script = value;
    } else {
        throw UsageError("unknown config key '" + where + "'");
    }
}

void apply(PipelineConfig& c, const std::string& section, const std::string& key, const std::string& value) {
    const std::string where = section + "." + key;
    if (section == "writer") return apply_backend(c.writer, key, value, where);
    if (section == "judge") return apply_backend(c.judge, key, value, where);
    if (section == "corpus") {
        if (key == "min_tokens") c.corpus.min_tokens = parse_number<std::size_t>(value, where);
        else if (key == "dedup_threshold") c.corpus.dedup_threshold = parse_number<double>(value, where);
        else if (key == "max_tokens") c.corpus.max_tokens = parse_number<std::size_t>(value, where);
        else if (key == "top_k") c.corpus.top_k = parse_number<std::size_t>(value, where);
        else throw UsageError("unknown config key '" + where + "'");
        return;
    }
    if (section == "synthesis") {
        if (key == "max_turns") c.synthesis.max_turns = parse_number<int>(value, where);
        else if (key == "target_kp") c.synthesis.targets.kp = parse_number<double>(value, where);
        else if (key == "target_quality") c.synthesis.targets.quality = parse_number<double>(value, where);
        else if (key == "separator") c.synthesis.separator = unescape(value);
        else if (key == "score_attempts") c.synthesis.score_attempts = parse_number<int>(value, where);
        else throw UsageError("unknown config key '" + where + "'");
        return;
    }
    if (section == "reward") {
        if (key == "alpha") c.reward.alpha = parse_number<double>(value, where);
        else if (key == "seed") c.reward.seed = parse_number<std::uint64_t>(value, where);
        else throw UsageError("unknown config key '" + where + "'");
        return;
    }
    if (section == "paths") {
        if (key == "input") c.paths.input = value;
        else if (key == "output") c.paths.output = value;
        else if (key == "checkpoint_dir") c.paths.checkpoint_dir = value;
        else if (key == "rubrics") c.paths.rubrics = value;
        else if (key == "difficulty") c.paths.difficulty = value;
        else if (key == "answers") c.paths.answers = value;
        else throw UsageError("unknown config key '" + where + "'");
        return;
    }
    if (section == "serve") {
        if (key == "addr") c.serve_addr = value;
        else throw UsageError("unknown config key '" + where + "'");
        return;
    }
    throw UsageError("unknown config section [" + section + "]");
}

}  // namespace

void PipelineConfig::validate() const {
    writer.backend.validate();
    judge.backend.validate();
    if (corpus.dedup_threshold < 0.0 || corpus.dedup_threshold > 1.0) {
        throw UsageError("corpus.dedup_threshold must be in [0, 1]");
    }
    if (corpus.max_tokens < 1) throw UsageError("corpus.max_tokens must be >= 1");
    if (corpus.top_k && *corpus.top_k < 1) throw UsageError("corpus.top_k must be >= 1");
    synthesis.validate();
    if (synthesis.targets.kp < 0.0 || synthesis.targets.kp > 1.0) throw UsageError("synthesis.target_kp must be in [0, 1]");
    if (synthesis.targets.quality < 0.0 || synthesis.targets.quality > 10.0) {
        throw UsageError("synthesis.target_quality must be in [0, 10]");
    }
    if (!(reward.alpha > 0.0 && reward.alpha < 1.0)) throw UsageError("reward.alpha must lie strictly between 0 and 1");
}

json PipelineConfig::dump() const {
    return {{"writer", section_json(writer)},
            {"judge", section_json(judge)},
            {"corpus",
             {{"min_tokens", corpus.min_tokens},
              {"dedup_threshold", corpus.dedup_threshold},
              {"max_tokens", corpus.max_tokens},
              {"top_k", corpus.top_k ? json(*corpus.top_k) : json(nullptr)}}},
            {"synthesis",
             {{"max_turns", synthesis.max_turns},
              {"target_kp", synthesis.targets.kp},
              {"target_quality", synthesis.targets.quality},
              {"separator", synthesis.separator},
              {"score_attempts", synthesis.score_attempts}}},
            {"reward", {{"alpha", reward.alpha}, {"seed", reward.seed}}},
            {"paths",
             {{"input", paths.input},
              {"output", paths.output},
              {"checkpoint_dir", paths.checkpoint_dir},
              {"rubrics", paths.rubrics},
              {"difficulty", paths.difficulty},
              {"answers", paths.answers}}},
            {"serve", {{"addr", serve_addr}}}};
}

std::string PipelineConfig::checksum() const {
    json j = dump();
    j.erase("paths");
    j.erase("serve");
    for (const auto* role : {"writer", "judge"}) {
        json& s = j[role];
        for (const auto* key : {"max_in_flight", "max_attempts", "backoff_ms", "max_backoff_ms", "timeout_ms",
                                "api_key_env"}) {
            s.erase(key);
        }
        const std::string script = s["script"].get<std::string>();
        s.erase("script");
        if (!script.empty()) s["script_sha256"] = sha256_hex(io::read_file(script));
    }
    return sha256_hex(j.dump());
}

int PipelineConfig::workers() const noexcept {
    return std::max(writer.backend.max_in_flight, judge.backend.max_in_flight);
}

std::optional<std::string> process_env(std::string_view name) {
    if (const char* v = std::getenv(std::string(name).c_str())) return std::string(v);
    return std::nullopt;
}

std::string interpolate_env(std::string_view value, const EnvLookup& env) {
    std::string out;
    std::size_t i = 0;
    while (i < value.size()) {
        const auto start = value.find("${", i);
        if (start == std::string_view::npos) {
            out.append(value.substr(i));
            break;
        }
        out.append(value.substr(i, start - i));
        const auto end = value.find('}', start + 2);
        if (end == std::string_view::npos) throw UsageError("unterminated ${ in config value");
        const std::string_view name = value.substr(start + 2, end - start - 2);
        const auto v = env(name);
        if (!v) throw UsageError("config references unset environment variable " + std::string(name));
        out += *v;
        i = end + 1;
    }
    return out;
}

PipelineConfig parse_config(std::string_view ini, const EnvLookup& env) {
    pt::ptree tree;
    std::istringstream in{std::string(ini)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw UsageError("config key '" + section + "' is outside any section");
        for (const auto& [key, node] : body) {
            apply(c, section, key, interpolate_env(strip_quotes(text::trim(node.data())), env));
        }
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
    return parse_config(io::read_file(path), env);
}

}  // namespace r2write
