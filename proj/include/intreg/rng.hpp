#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace intreg {

/// Independent generator for a key path such as (seed, scenario, replicate,
/// dataset, purpose). Each key is split into two 32-bit words and fed through
/// std::seed_seq, so distinct paths give unrelated streams and the same path
/// always gives the same stream.
inline std::mt19937_64 make_stream(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * keys.size());
    for (auto k : keys) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

/// FNV-1a, used to turn scenario names into stream keys.
constexpr std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace intreg
