#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::secret {

inline constexpr const char* kInstantiateTxKind = "sn-instantiate";
inline constexpr const char* kIncrementTxKind = "sn-increment";

// Secret Network node enclave: runs every deployed contract instance (a
// counter per address), recovers by replaying transactions. The vulnerable
// variant applies whatever block sequence the host feeds it; the patched
// variant verifies the hash chain and timestamps query responses, and
// requires the intended contract address inside the encrypted query.
EnclaveProgram node_program(Variant variant);

void provision_node(Simulation& sim, Handle h, uint64_t consensus_io_sk);

Bytes encode_instantiate(const Digest& address, const Digest& code_hash, int64_t init);
Bytes encode_increment(const Digest& address);

// Feeds one block (with its txs) to the node; the patched node rejects
// blocks that do not extend its validated chain.
Result<void> feed_block(Simulation& sim, Handle h, const Block& block);

// --- Contract queries ----------------------------------------------------------
//
// query = contractAddress || n || clientPubKey || AEAD_k(codeHash || rawQuery)
// with k = KDF(n, agree(clientPriv, consensusIoPub)); the patched layout
// carries the intended address inside the AEAD.

struct BuiltQuery {
    Bytes query;
    uint64_t nonce = 0;
    KeyPair ephemeral;
};

BuiltQuery build_query(ToyCrypto& crypto, RngStream& client_rng, uint64_t consensus_io_pk,
                       const Digest& contract_address, const Digest& code_hash,
                       const Bytes& raw_query, Variant variant);

// Symmetric key derivation, client side; the enclave derives the same key
// from (clientPub, consensusIoPriv).
Digest derive_query_key(const CryptoProvider& crypto, uint64_t nonce, uint64_t own_sk,
                        uint64_t peer_pk);

// Host-side rewrite of the cleartext address field (the attack).
Bytes rewrite_address(const Bytes& query, const Digest& new_address);

Result<Output> deliver_query(Simulation& sim, Handle node, const Bytes& query);

struct QueryAnswer {
    int64_t count = 0;
    uint64_t height = 0;  // patched only
};

Result<QueryAnswer> open_reply_vulnerable(const CryptoProvider& crypto, const Output& reply,
                                          const Digest& key, uint64_t nonce);
Result<QueryAnswer> open_reply_patched(const CryptoProvider& crypto, const Output& reply,
                                       const Digest& key, uint64_t nonce, uint64_t io_pk,
                                       const ChainView& client_view, uint64_t freshness_window);

}  // namespace forklab::protocols::secret
