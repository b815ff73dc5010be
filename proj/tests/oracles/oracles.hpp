#pragma once

// Test-support oracles: closed forms and independently-seeded Monte-Carlo
// estimators, kept apart from the implementation paths they check. The MC
// side uses std::mt19937_64, a different generator family from the library's
// xoshiro streams.

#include <cstdint>
#include <vector>

#include "forklab/bytes.hpp"

namespace oracles {

// 1 - (1 - diff)^n by repeated multiplication (no pow).
double pouw_threshold(double diff, uint64_t instruction_count);

// P(any of c independent attempts with success probability p succeeds).
double closed_any_success(double p, uint32_t clones);
double mc_any_success(double p, uint32_t clones, uint32_t trials, uint64_t seed);

// P(some clone of c draws the favored one of k lottery outcomes).
double closed_lottery_favored(uint32_t k, uint32_t clones);
double mc_lottery_favored(uint32_t k, uint32_t clones, uint32_t trials, uint64_t seed);

// P(the adversary's c nonce draws contain the global minimum of c+m draws).
double closed_min_nonce_win(uint32_t clones, uint32_t honest);
double mc_min_nonce_win(uint32_t clones, uint32_t honest, uint32_t trials, uint64_t seed);

// Reference fold for the counter contract and its canonical state digest.
int64_t counter_fold(int64_t start, const std::vector<int64_t>& adds);
forklab::Digest counter_state_digest(int64_t value);

}  // namespace oracles
