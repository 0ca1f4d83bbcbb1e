#pragma once

#include <cstdint>
#include <string_view>

namespace navcbn {

// SplitMix64 generator. Every random draw in the project flows through this
// class so that artifacts are bit-reproducible from a single seed, without
// depending on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 mantissa bits.
    double next_double();

    // Unbiased uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    double uniform(double lo, double hi);

    // Box-Muller; caches the spare deviate.
    double normal(double mean = 0.0, double sigma = 1.0);

    // Child generator on an independent stream. Does not advance the parent.
    Rng split(std::uint64_t stream) const;

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Deterministic seed derivation from a master seed and a textual tag
// (variable name, participant id). Independent of processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

} // namespace navcbn
