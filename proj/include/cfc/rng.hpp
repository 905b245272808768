#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cfc {

/// Derive a named sub-stream seed from a global seed so that components
/// (split, costs, init, episodes, mcts) can be re-seeded independently.
inline std::uint64_t stream_seed(std::uint64_t global, std::string_view name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= global + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t global, std::string_view name) {
    return std::mt19937_64{stream_seed(global, name)};
}

} // namespace cfc
