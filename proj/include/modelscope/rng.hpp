#pragma once

#include <cstdint>
#include <random>

namespace modelscope {

using Engine = std::mt19937_64;

/// Independent stream for (seed, purpose, index). Replicate b of a run always
/// draws from stream(seed, purpose, b), so results do not depend on which
/// worker executes it.
inline Engine stream(std::uint64_t seed, std::uint32_t purpose, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose, static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Engine(seq);
}

namespace purpose {
inline constexpr std::uint32_t kRedundant = 0x5256;   // RV column
inline constexpr std::uint32_t kVisWeights = 0x7669;  // exponential weights
inline constexpr std::uint32_t kFence = 0x6166;       // parametric bootstrap
inline constexpr std::uint32_t kArtificial = 0x6172;
}  // namespace purpose

}  // namespace modelscope
