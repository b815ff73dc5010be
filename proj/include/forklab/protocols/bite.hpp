#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::bite {

inline constexpr const char* kPayTxKind = "bite-pay";

// BITE-style chain scanner: tracks account balances from payment txs in the
// blocks it is fed. Patched variant answers balance queries with a
// height-and-hash timestamp so clients can detect off-branch state.
EnclaveProgram scanner_program(Variant variant);

Bytes encode_pay(uint64_t account, int64_t amount);
Result<void> feed_block(Simulation& sim, Handle h, const Block& block);

struct BalanceReply {
    int64_t balance = 0;
    uint64_t height = 0;
    std::optional<Digest> block_hash;
};

// Vulnerable: bare balance. Patched: TimestampedResponse with HeightAndHash;
// verify with client_verify against the client's own view.
Result<Output> bite_balance_query(Simulation& sim, Handle h, uint64_t account);
BalanceReply parse_balance_vulnerable(const Output& out);
Result<BalanceReply> parse_balance_patched(const CryptoProvider& crypto, const Output& out,
                                           uint64_t enclave_pk, const ChainView& client_view,
                                           uint64_t freshness_window);

// The signing identity the scanner uses for timestamped responses.
uint64_t scanner_signer_pk(Simulation& sim, Handle h);

}  // namespace forklab::protocols::bite
