#pragma once

#include <cstdint>

namespace graspinf {

/// SplitMix64 finalizer. Used to derive independent per-trial / per-scene seeds so
/// that results do not depend on how work is split across threads.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) noexcept {
    return mix64(mix64(seed ^ mix64(stream)) + index);
}

}  // namespace graspinf
