#include "r2write/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "r2write/errors.hpp"
#include "r2write/text.hpp"

namespace r2write {
namespace {

const std::array<std::string_view, 6> kQueryFields = {"id", "text", "task_kind", "category", "materials", "reference"};

std::string require_string(const json& j, std::string_view field) {
    const auto it = j.find(field);
    if (it == j.end()) throw SchemaError("missing field '" + std::string(field) + "'");
    if (!it->is_string()) throw SchemaError("field '" + std::string(field) + "' must be a string");
    return it->get<std::string>();
}

double require_number(const json& j, std::string_view field) {
    const auto it = j.find(field);
    if (it == j.end()) throw SchemaError("missing field '" + std::string(field) + "'");
    if (!it->is_number()) throw SchemaError("field '" + std::string(field) + "' must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw SchemaError("field '" + std::string(field) + "' must be finite");
    return v;
}

using Gram = std::array<std::string, 3>;

std::vector<Gram> grams_of(std::string_view text) {
    auto tokens = text::tokenize(text);
    std::vector<Gram> grams;
    if (tokens.size() < 3) {
        tokens.resize(3);
        grams.push_back({tokens[0], tokens[1], tokens[2]});
        return grams;
    }
    grams.reserve(tokens.size() - 2);
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) grams.push_back({tokens[i], tokens[i + 1], tokens[i + 2]});
    return grams;
}

// Maps 3-grams to dense ids so each text becomes a sorted id vector.
class GramInterner {
public:
    std::vector<std::uint32_t> ids_of(std::string_view text) {
        std::vector<std::uint32_t> ids;
        for (auto& gram : grams_of(text)) {
            const auto [it, inserted] = table_.try_emplace(std::move(gram), static_cast<std::uint32_t>(table_.size()));
            ids.push_back(it->second);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }

private:
    std::map<Gram, std::uint32_t> table_;
};

double jaccard_sorted(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::size_t shared = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++shared;
            ++ia;
            ++ib;
        }
    }
    const std::size_t united = a.size() + b.size() - shared;
    return united == 0 ? 1.0 : static_cast<double>(shared) / static_cast<double>(united);
}

}  // namespace

std::string_view to_string(TaskKind kind) noexcept {
    return kind == TaskKind::report ? "report" : "creative";
}

std::string Query::full_text() const {
    std::string out = text;
    for (const auto& m : materials) {
        out += "\n\n";
        out += m;
    }
    return out;
}

Query query_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("query must be a JSON object");
    Query q;
    q.id = require_string(j, "id");
    if (q.id.empty()) throw SchemaError("field 'id' must be non-empty");
    q.text = require_string(j, "text");
    if (j.contains("task_kind")) {
        const auto kind = require_string(j, "task_kind");
        if (kind == "creative") q.task_kind = TaskKind::creative;
        else if (kind == "report") q.task_kind = TaskKind::report;
        else throw SchemaError("field 'task_kind' must be \"creative\" or \"report\", got \"" + kind + "\"");
    }
    if (j.contains("category")) q.category = require_string(j, "category");
    if (const auto it = j.find("materials"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw SchemaError("field 'materials' must be an array of strings");
        for (const auto& m : *it) {
            if (!m.is_string()) throw SchemaError("field 'materials' must be an array of strings");
            q.materials.push_back(m.get<std::string>());
        }
    }
    if (q.task_kind == TaskKind::creative && !q.materials.empty()) {
        throw SchemaError("creative query '" + q.id + "' must not carry materials");
    }
    if (const auto it = j.find("reference"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw SchemaError("field 'reference' must be a string");
        q.reference = it->get<std::string>();
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(kQueryFields.begin(), kQueryFields.end(), key) == kQueryFields.end()) q.extra[key] = value;
    }
    return q;
}

json to_json(const Query& q) {
    json j = q.extra.is_object() ? q.extra : json::object();
    j["id"] = q.id;
    j["text"] = q.text;
    j["task_kind"] = to_string(q.task_kind);
    j["category"] = q.category;
    j["materials"] = q.materials;
    j["reference"] = q.reference ? json(*q.reference) : json(nullptr);
    return j;
}

DifficultyRecord difficulty_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("difficulty record must be a JSON object");
    return DifficultyRecord::from_scores(require_string(j, "query_id"), require_number(j, "s_ref"),
                                         require_number(j, "s_model"));
}

json to_json(const DifficultyRecord& r) {
    return {{"query_id", r.query_id}, {"s_ref", r.s_ref}, {"s_model", r.s_model}, {"gap", r.gap}};
}

json to_json(const CurateStats& s) {
    return {{"input_count", s.input_count},
            {"short_dropped", s.short_dropped},
            {"dup_dropped", s.dup_dropped},
            {"truncated", s.truncated},
            {"output_count", s.output_count}};
}

namespace corpus {

std::vector<Query> filter_short(std::span<const Query> queries, std::size_t min_tokens) {
    if (min_tokens < 1) throw UsageError("min_tokens must be >= 1");
    std::vector<Query> kept;
    for (const auto& q : queries) {
        if (text::count_tokens(q.text) >= min_tokens) kept.push_back(q);
    }
    return kept;
}

double jaccard_3gram(std::string_view a, std::string_view b) {
    GramInterner interner;
    const auto ga = interner.ids_of(a);
    const auto gb = interner.ids_of(b);
    return jaccard_sorted(ga, gb);
}

std::vector<Query> dedup(std::span<const Query> queries, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("dedup threshold must be in (0, 1]");
    GramInterner interner;
    std::vector<std::vector<std::uint32_t>> retained_grams;
    std::vector<Query> retained;
    for (const auto& q : queries) {
        auto grams = interner.ids_of(q.text);
        const bool duplicate = std::any_of(retained_grams.begin(), retained_grams.end(),
                                           [&](const auto& kept) { return jaccard_sorted(grams, kept) > threshold; });
        if (duplicate) continue;
        retained_grams.push_back(std::move(grams));
        retained.push_back(q);
    }
    return retained;
}

Query truncate(const Query& query, std::size_t max_tokens) {
    if (max_tokens < 1) throw UsageError("max_tokens must be >= 1");
    const std::size_t text_tokens = text::count_tokens(query.text);
    std::vector<std::size_t> material_tokens;
    std::size_t total = text_tokens;
    for (const auto& m : query.materials) {
        material_tokens.push_back(text::count_tokens(m));
        total += material_tokens.back();
    }
    if (total <= max_tokens) return query;

    Query out = query;
    std::size_t excess = total - max_tokens;
    while (excess > 0 && !out.materials.empty()) {
        const std::size_t n = material_tokens.back();
        if (n <= excess) {
            excess -= n;
            out.materials.pop_back();
            material_tokens.pop_back();
        } else {
            out.materials.back() = text::keep_tokens(out.materials.back(), n - excess);
            excess = 0;
        }
    }
    if (excess > 0) out.text = text::keep_tokens(out.text, text_tokens - excess);
    return out;
}

std::vector<DifficultyRecord> rank_by_gap(std::span<const DifficultyRecord> records, std::size_t k) {
    if (k < 1) throw UsageError("k must be >= 1");
    std::vector<DifficultyRecord> ranked(records.begin(), records.end());
    const auto by_gap = [](const DifficultyRecord& a, const DifficultyRecord& b) {
        if (a.gap != b.gap) return a.gap > b.gap;
        return a.query_id < b.query_id;
    };
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(), by_gap);
    ranked.resize(take);
    return ranked;
}

}  // namespace corpus
}  // namespace r2write
