#include "forklab/rng.hpp"

namespace forklab {

namespace {

inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

uint64_t RngStream::next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RngStream::next_below(uint64_t bound) {
    // Rejection sampling over the top multiple of bound.
    const uint64_t limit = bound * ((~uint64_t{0}) / bound);
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

void RngStream::fill(std::span<uint8_t> out) {
    size_t i = 0;
    while (i < out.size()) {
        uint64_t x = next_u64();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<uint8_t>(x >> (56 - 8 * b));
        }
    }
}

uint64_t mix_seed(uint64_t seed, uint64_t tag) {
    uint64_t sm = seed ^ (0x6a09e667f3bcc908ULL + tag);
    uint64_t a = splitmix64(sm);
    sm ^= tag * 0x9e3779b97f4a7c15ULL;
    return a ^ splitmix64(sm);
}

uint64_t mix_seed(uint64_t seed, std::string_view domain) {
    // FNV-1a over the domain string, folded into the seed.
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : domain) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return mix_seed(seed, h);
}

uint64_t mix_seed(uint64_t seed, std::string_view domain, uint64_t tag) {
    return mix_seed(mix_seed(seed, domain), tag);
}

}  // namespace forklab
