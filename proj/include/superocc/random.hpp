#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace superocc {

/// Engine used for every stochastic operation.
using Rng = std::mt19937_64;

/// Standard normal (ziggurat) and uniform [0, 1) draws.
using NormalDist = boost::random::normal_distribution<double>;
using UniformDist = boost::random::uniform_01<double>;

/// One step of the splitmix64 generator; advances `state`.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of stream `index` under `master`: the state is the master seed mixed
/// with the index, then two splitmix64 outputs are folded together. Streams
/// for distinct indices are statistically independent in practice.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    std::uint64_t state = master ^ (0xD1B54A32D192ED03ULL * (index + 1));
    const std::uint64_t a = splitmix64(state);
    const std::uint64_t b = splitmix64(state);
    return a ^ (b << 1);
}

/// Engine for replicate `index` of the run with master seed `master`.
inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
    return Rng{derive_seed(master, index)};
}

/// Named purposes, so that e.g. simulator and oracle draws never share a stream.
enum class StreamPurpose : std::uint64_t {
    Simulation = 1,
    Oracle = 2,
    NoiseGrid = 3,
    Bounds = 4,
    Harness = 5,
};

inline std::uint64_t purpose_seed(std::uint64_t master, StreamPurpose purpose) noexcept {
    return derive_seed(master, 0xA5A5A5A500000000ULL + static_cast<std::uint64_t>(purpose));
}

}  // namespace superocc
