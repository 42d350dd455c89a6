#pragma once

#include <cstdint>

namespace tabprompt {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a user
/// seed and a stream index so every stage stays reproducible.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace tabprompt
