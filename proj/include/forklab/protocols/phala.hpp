#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::phala {

inline constexpr const char* kToggleTxKind = "phala-toggle";
inline constexpr const char* kHeartbeatTxKind = "phala-heartbeat";

// Eligibility: a worker sends a heartbeat for a block when the first eight
// bytes of H(worker pk || block hash) fall under min(expected, workers) /
// workers of the u64 range; expected senders per block is then
// min(expected, workers).
bool heartbeat_eligible(const CryptoProvider& crypto, uint64_t worker_pk, const Digest& block_hash,
                        uint64_t total_workers, uint64_t expected_per_block);

struct PhalaHeartbeat {
    uint64_t session_id = 0;
    uint64_t challenge_block = 0;
    uint64_t challenge_time = 0;
    uint64_t iterations = 0;
    uint32_t n_clusters = 0;
    uint32_t n_contracts = 0;
    Bytes signature;
};

// Canonical layout, fields in heartbeat order, signature appended raw.
Bytes encode_heartbeat(const PhalaHeartbeat& hb);
PhalaHeartbeat decode_heartbeat(const Bytes& b);
Bytes heartbeat_message(const PhalaHeartbeat& hb);

struct WorkerParams {
    uint64_t total_workers = 400;
    uint64_t expected_per_block = 20;
};

// The pruntime: processes blocks for its contract, issues heartbeats when
// eligible, serves encrypted contract queries. Patched variant timestamps
// query responses with the height of the last processed block.
EnclaveProgram worker_program(const WorkerParams& params, Variant variant);

struct ProvisionResult {
    uint64_t identity_pk = 0;
    uint64_t session_id = 0;
};
ProvisionResult provision_worker(Simulation& sim, Handle h, const Digest& contract_address,
                                 uint64_t contract_sk);

struct BlockOutcome {
    std::optional<Bytes> heartbeat;  // tx payload: worker pk || heartbeat
};
BlockOutcome feed_block(Simulation& sim, Handle h, const Block& block, uint32_t toggle_count);

// --- Contract queries -------------------------------------------------------------

struct QueryContext {
    KeyPair client_identity;
    Digest contract_address{};
    uint64_t contract_pk = 0;
};

struct BuiltQuery {
    Bytes query;        // full wire format
    uint64_t nonce = 0;
    KeyPair ephemeral;  // client's per-query keypair
};

// payload = AEAD_IV || clientPubKey || AEAD_k(contractAddress || n || rawQuery)
// query   = payload || clientIdentityPubKey || sign(payload)
BuiltQuery build_query(ToyCrypto& crypto, RngStream& client_rng, const QueryContext& qc,
                       const Bytes& raw_query);

struct QueryReply {
    uint8_t result = 0;
    uint64_t nonce = 0;
    uint64_t height = 0;  // patched only
};

Result<Output> deliver_query(Simulation& sim, Handle worker, const Bytes& query);
// Vulnerable-format reply: result || reflected nonce.
Result<QueryReply> parse_reply_vulnerable(const Output& out);
// Patched-format reply: TimestampedResponse around (result || nonce).
Result<QueryReply> parse_reply_patched(const CryptoProvider& crypto, const Output& out,
                                       uint64_t contract_pk, const ChainView& client_view,
                                       uint64_t freshness_window);

// --- Gatekeeper ---------------------------------------------------------------

// Validates heartbeat txs from blocks and tracks each worker's last
// heartbeat height.
class Gatekeeper {
public:
    explicit Gatekeeper(const CryptoProvider& crypto) : crypto_(&crypto) {}
    void observe_block(const Block& block);
    // Workers whose last heartbeat is more than 2x the expected period old.
    std::vector<uint64_t> missing_heartbeats(uint64_t current_height,
                                             uint64_t expected_period_blocks) const;
    std::optional<uint64_t> last_heartbeat_height(uint64_t worker_pk) const;

private:
    const CryptoProvider* crypto_;
    std::map<uint64_t, uint64_t> last_seen_;  // worker pk -> height
};

// --- Calibration -----------------------------------------------------------------

struct HeartbeatStats {
    double mean_per_block = 0.0;
    double single_worker_mean_gap_ms = 0.0;
    // Expected per-worker gap estimated from the pooled rate of all workers.
    double pooled_mean_gap_ms = 0.0;
    uint64_t total_heartbeats = 0;
    uint64_t blocks = 0;
};

HeartbeatStats measure_heartbeat_rate(uint64_t seed, uint64_t workers, uint64_t blocks,
                                      uint64_t block_interval_ms, uint64_t expected_per_block);

}  // namespace forklab::protocols::phala
