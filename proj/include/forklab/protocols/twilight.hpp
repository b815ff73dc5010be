#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::twilight {

// Twilight relay enclave: stateless, identified by an ephemeral keypair
// generated at launch and never sealed. Payments are encrypted to the
// recipient's registered ephemeral public key.
EnclaveProgram relay_program();

// Establishes channel bookkeeping on the ledger: both relays register their
// ephemeral keys under dedicated roles (the channel contract).
Result<void> open_channel(Simulation& sim, Handle a, const std::string& role_a, Handle b,
                          const std::string& role_b);

// The sending relay encrypts `amount` to the recipient's public key.
Bytes twilight_pay(Simulation& sim, Handle sender, uint64_t recipient_pk, uint64_t amount);

// Claim succeeds only at the instance whose ephemeral secret matches.
Result<uint64_t> twilight_claim(Simulation& sim, Handle recipient, const Bytes& ciphertext);

}  // namespace forklab::protocols::twilight
