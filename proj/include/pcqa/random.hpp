#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pcqa {

// Platform-stable sampling on top of mt19937_64. The standard distributions are
// implementation-defined, which would break byte-identical outputs across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
    std::uint64_t index(std::uint64_t n);

    // Uniform double in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (no cached second variate).
    double normal();

private:
    std::mt19937_64 engine_;
};

// FNV-1a 64-bit; mixes string keys into per-item seeds.
std::uint64_t fnv1a(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);

}  // namespace pcqa
