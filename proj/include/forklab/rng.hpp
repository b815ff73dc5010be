#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace forklab {

// Deterministic xoshiro256** stream. std distributions are avoided on
// purpose: their output is implementation-defined, and scenario runs must be
// byte-identical across platforms.
class RngStream {
public:
    explicit RngStream(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0,1) with 53 random bits.
    double next_unit();

    // Uniform in [0, bound), bound > 0, rejection-sampled.
    uint64_t next_below(uint64_t bound);

    void fill(std::span<uint8_t> out);

private:
    uint64_t s_[4];
};

uint64_t splitmix64(uint64_t& state);

// Derives a child seed from (seed, tag); used to give every enclave handle,
// ledger, and trial its own independent stream.
uint64_t mix_seed(uint64_t seed, uint64_t tag);
uint64_t mix_seed(uint64_t seed, std::string_view domain);
uint64_t mix_seed(uint64_t seed, std::string_view domain, uint64_t tag);

}  // namespace forklab
