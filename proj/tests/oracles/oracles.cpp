#include "oracles/oracles.hpp"

#include <random>

#include "forklab/codec.hpp"
#include "forklab/crypto.hpp"

namespace oracles {

double pouw_threshold(double diff, uint64_t instruction_count) {
    double q = 1.0;
    for (uint64_t i = 0; i < instruction_count; ++i) q *= (1.0 - diff);
    return 1.0 - q;
}

double closed_any_success(double p, uint32_t clones) {
    double q = 1.0;
    for (uint32_t i = 0; i < clones; ++i) q *= (1.0 - p);
    return 1.0 - q;
}

double mc_any_success(double p, uint32_t clones, uint32_t trials, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    uint32_t wins = 0;
    for (uint32_t t = 0; t < trials; ++t) {
        bool any = false;
        for (uint32_t c = 0; c < clones; ++c) {
            if (unit(gen) < p) any = true;
        }
        if (any) ++wins;
    }
    return static_cast<double>(wins) / trials;
}

double closed_lottery_favored(uint32_t k, uint32_t clones) {
    return closed_any_success(1.0 / k, clones);
}

double mc_lottery_favored(uint32_t k, uint32_t clones, uint32_t trials, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<uint32_t> draw(0, k - 1);
    uint32_t wins = 0;
    for (uint32_t t = 0; t < trials; ++t) {
        bool any = false;
        for (uint32_t c = 0; c < clones; ++c) {
            if (draw(gen) == 0) any = true;
        }
        if (any) ++wins;
    }
    return static_cast<double>(wins) / trials;
}

double closed_min_nonce_win(uint32_t clones, uint32_t honest) {
    return static_cast<double>(clones) / (clones + honest);
}

double mc_min_nonce_win(uint32_t clones, uint32_t honest, uint32_t trials, uint64_t seed) {
    std::mt19937_64 gen(seed);
    uint32_t wins = 0;
    for (uint32_t t = 0; t < trials; ++t) {
        uint64_t best = UINT64_MAX;
        bool adversary_best = false;
        for (uint32_t i = 0; i < clones + honest; ++i) {
            uint64_t nonce = gen();
            if (nonce < best) {
                best = nonce;
                adversary_best = i < clones;
            }
        }
        if (adversary_best) ++wins;
    }
    return static_cast<double>(wins) / trials;
}

int64_t counter_fold(int64_t start, const std::vector<int64_t>& adds) {
    int64_t v = start;
    for (int64_t a : adds) v += a;
    return v;
}

forklab::Digest counter_state_digest(int64_t value) {
    // Canonical counter state is the big-endian signed value.
    forklab::ByteWriter w;
    w.i64(value);
    return forklab::sha256(w.bytes());
}

}  // namespace oracles
