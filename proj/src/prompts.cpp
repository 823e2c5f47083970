#include "r2write/prompts.hpp"

#include <algorithm>

#include "r2write/errors.hpp"
#include "r2write/hashing.hpp"

namespace r2write::prompts {
namespace detail {
extern const Asset kAssets[];
extern const std::size_t kAssetCount;
}  // namespace detail

std::span<const Asset> all() { return {detail::kAssets, detail::kAssetCount}; }

std::string_view get(std::string_view name) {
    for (const auto& asset : all()) {
        if (asset.name == name) return asset.text;
    }
    throw UsageError("unknown prompt asset '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, std::string>> checksums() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& asset : all()) out.emplace_back(std::string(asset.name), sha256_hex(asset.text));
    std::sort(out.begin(), out.end());
    return out;
}

std::string render(std::string_view tmpl, std::initializer_list<Slot> slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const Slot* hit = nullptr;
            for (const auto& slot : slots) {
                const std::size_t len = slot.first.size();
                if (i + len + 2 <= tmpl.size() && tmpl.compare(i + 1, len, slot.first) == 0 &&
                    tmpl[i + 1 + len] == '}') {
                    hit = &slot;
                    break;
                }
            }
            if (hit != nullptr) {
                out += hit->second;
                i += hit->first.size() + 2;
                continue;
            }
        }
        out += tmpl[i++];
    }
    return out;
}

}  // namespace r2write::prompts
