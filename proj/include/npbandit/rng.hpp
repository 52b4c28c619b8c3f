#pragma once

#include <cstdint>
#include <random>

namespace npbandit {

// Every consumer of randomness draws from its own stream, derived from the
// user-facing seed and a fixed tag, so adding draws in one component never
// shifts another component's sequence.
enum class StreamTag : std::uint32_t {
    reward = 1,
    oracle_noise = 2,
    random_queries = 3,
    arms = 4,
    cover = 5,
    synth_function = 6,
    instance = 7,
    probes = 8,
};

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, StreamTag tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag)};
    return Engine(seq);
}

}  // namespace npbandit
