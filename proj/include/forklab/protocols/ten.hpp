#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::ten {

inline constexpr const char* kRollupTxKind = "ten-rollup";

// Rollup header, fields in wire order; AggregatorEphemeralID is present only
// in the patched layout.
struct TenRollup {
    Digest l1_block_header{};
    Bytes cross_chain_messages;
    Digest payload_hash{};
    Bytes payload_hash_signature;
    uint64_t batch_seq_num = 0;
    uint64_t aggregator_nonce = 0;
    Digest aggregator_l2_address{};
    std::optional<uint64_t> aggregator_ephemeral_id;
    Bytes body;
};

Bytes encode_rollup_header(const TenRollup& r);
TenRollup decode_rollup_header(const Bytes& b, bool patched);

// Ten enclave: enrolls into the network (master seed), then proposes one
// rollup per L1 block, drawing a random nonce. Variant controls whether the
// header carries the ephemeral id.
EnclaveProgram enclave_program(Variant variant);

void provision_ten(Simulation& sim, Handle h, const Bytes& master_seed,
                   const Digest& l2_address);

// Proposes on the given L1 head; at most one rollup per (instance, block).
Result<TenRollup> ten_propose(Simulation& sim, Handle h, const Block& l1_head,
                              uint64_t batch_seq);

// Role under which an aggregator's ephemeral id must be registered.
std::string aggregator_role(const Digest& l2_address);

// Ledger-side rollup gate: rollups bound to a stale L1 block are discarded
// at submission; the patched network also insists on a registered
// AggregatorEphemeralID.
class TenRollupValidator : public TxValidator {
public:
    TenRollupValidator(const CryptoProvider& crypto, uint64_t expected_signer_pk, Variant variant,
                       const mitigations::EphemeralIdRegistry* registry = nullptr,
                       uint64_t anchor_window = 0)
        : crypto_(&crypto),
          signer_pk_(expected_signer_pk),
          variant_(variant),
          registry_(registry),
          anchor_window_(anchor_window) {}
    Result<void> check(const Tx& tx, const Ledger& ledger) override;

private:
    const CryptoProvider* crypto_;
    uint64_t signer_pk_;
    Variant variant_;
    const mitigations::EphemeralIdRegistry* registry_;
    uint64_t anchor_window_;
};

struct SettleResult {
    size_t accepted_index = 0;
    TenRollup accepted;
    std::vector<std::pair<size_t, Error>> rejected;
};

// L1 contract logic: drop invalid rollups (stale anchor, bad signature,
// unregistered ephemeral id in patched mode), then accept the lowest nonce;
// ties break to the lowest proposer address. The accepted rollup lands on
// the ledger.
Result<SettleResult> ten_settle(Simulation& sim, const std::vector<TenRollup>& rollups,
                                const Digest& current_head, Variant variant,
                                const mitigations::EphemeralIdRegistry* registry,
                                uint64_t expected_signer_pk);

}  // namespace forklab::protocols::ten
