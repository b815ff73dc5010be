#pragma once

#include <optional>

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::pouw {

// Success threshold t = 1 - (1 - diff)^n grows with the task's instruction
// count. The published rule compares r against t; the direction is
// configurable because success-if-below is the reading under which longer
// tasks help the miner.
struct PoUwConfig {
    double diff = 0.5;
    enum class Direction { SucceedIfBelow, SucceedIfAbove };
    Direction direction = Direction::SucceedIfBelow;
};

struct Task {
    uint64_t instruction_count = 0;
    Bytes payload;
};

struct PoUwProof {
    Bytes task_output;
    double r = 0.0;
    Digest bound_block_hash{};
    uint64_t signer_pk = 0;
    Bytes signature;
};

double threshold(double diff, uint64_t instruction_count);

// The PoUW enclave is stateless; variant selects the signing identity:
// vulnerable signs with the measurement-wide key, patched with the
// instance's ephemeral key.
EnclaveProgram pouw_program(const PoUwConfig& config, Variant variant);

Input encode_attempt(const Task& task, const Digest& head_hash);
// nullopt: the draw missed the threshold (NoLuck).
std::optional<PoUwProof> pouw_attempt(Simulation& sim, Handle h, const Task& task,
                                      const Digest& head_hash);

// Consensus-side check: proof verifies only against the current head, and in
// patched mode only under the miner's registered ephemeral key.
Result<void> verify_proof(const Simulation& sim, const PoUwProof& proof, const PoUwConfig& config,
                          const Task& task, const Digest& current_head,
                          std::optional<uint64_t> required_pk);

// Runs `trials` independent rounds with c clones; success when any clone
// produces a proof. Returns the measured frequency.
double pouw_clone_trial(uint64_t seed, const PoUwConfig& config, const Task& task, uint32_t clones,
                        uint32_t trials);

}  // namespace forklab::protocols::pouw
