#pragma once

#include <cstdint>
#include <random>

namespace steerml {

// splitmix64 finalizer; used to derive independent per-sample seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

// Seeded deterministic random stream.
//
// Uniform and normal variates are produced from raw mt19937_64 output with
// explicit conversions (53-bit mantissa, Box-Muller), so a seed yields the
// same sequence on every standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform();
    // Standard normal.
    double normal();

    // Child stream that does not overlap with this one.
    RandomStream substream(std::uint64_t index) const { return RandomStream(mix_seed(seed_, index)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace steerml
