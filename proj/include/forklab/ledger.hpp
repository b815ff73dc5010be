#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "forklab/bytes.hpp"
#include "forklab/crypto.hpp"
#include "forklab/errors.hpp"
#include "forklab/events.hpp"
#include "forklab/rng.hpp"

namespace forklab {

struct Tx {
    std::string kind;
    Bytes payload;
    uint64_t id = 0;
};

struct Block {
    uint64_t height = 0;
    Digest hash{};
    Digest parent_hash{};
    std::vector<Tx> txs;
    uint64_t proposer = 0;
    uint64_t timestamp = 0;
};

struct FinalMode {
    uint64_t block_interval_ms = 1000;
};

// Nakamoto-style: competing blocks at the same height may appear; canonical
// chain is the longest, ties broken by lowest head hash.
struct EventualMode {
    uint64_t block_interval_ms = 12000;
    double fork_probability = 0.05;
    uint32_t confirmation_depth = 6;
};

using ConsensusMode = std::variant<FinalMode, EventualMode>;

uint64_t block_interval_of(const ConsensusMode& mode);

class Ledger;

// A (possibly stale or forked) prefix of some branch, as served to an
// enclave or client. Blocks are immutable once produced, so a head hash plus
// a reference to the block store is a stable snapshot.
class ChainView {
public:
    ChainView() = default;
    ChainView(const Ledger* ledger, Digest head);

    uint64_t head_height() const { return head_height_; }
    const Digest& head_hash() const { return head_; }
    const Block& head() const;
    const Block& block_at(uint64_t height) const;          // on this branch
    bool contains(uint64_t height, const Digest& hash) const;
    std::vector<Block> collect(uint64_t from_height, uint64_t to_height) const;
    std::vector<Block> collect_all() const;
    bool valid() const { return ledger_ != nullptr; }

private:
    const Ledger* ledger_ = nullptr;
    Digest head_{};
    uint64_t head_height_ = 0;
};

// How one blockchain node serves this enclave. Honest connections always
// serve the canonical head; dishonest ones follow their strategy.
struct NodeConnection {
    enum class Strategy { Honest, Stale, Branch, Silent };
    uint64_t node_id = 0;
    Strategy strategy = Strategy::Honest;
    uint64_t stale_lag = 0;    // Strategy::Stale: blocks behind canonical
    size_t branch_index = 0;   // Strategy::Branch: index into branch_heads()

    static NodeConnection honest(uint64_t node_id = 0) { return {node_id, Strategy::Honest, 0, 0}; }
    static NodeConnection stale(uint64_t lag, uint64_t node_id = 0) {
        return {node_id, Strategy::Stale, lag, 0};
    }
    static NodeConnection branch(size_t index, uint64_t node_id = 0) {
        return {node_id, Strategy::Branch, 0, index};
    }
    static NodeConnection silent(uint64_t node_id = 0) { return {node_id, Strategy::Silent, 0, 0}; }
};

// Stateful per-kind transaction validator; checked at submission, so the
// accepted-tx stream is already serialized when blocks are produced.
class TxValidator {
public:
    virtual ~TxValidator() = default;
    virtual Result<void> check(const Tx& tx, const Ledger& ledger) = 0;
};

class Ledger {
public:
    Ledger(ConsensusMode mode, uint64_t seed, EventLog* log = nullptr);

    // Produces floor((now + dt) / interval) - produced_so_far blocks, pending
    // txs in submission order; eventual mode may fork each production.
    std::vector<Block> advance(uint64_t dt_ms);

    Result<uint64_t> submit_tx(std::string kind, Bytes payload);
    void register_tx_validator(const std::string& kind, std::unique_ptr<TxValidator> validator);

    ChainView canonical_view() const;
    Result<ChainView> serve_view(const std::vector<NodeConnection>& connections) const;

    const Block& genesis() const;
    const Block& block(const Digest& hash) const;
    bool has_block(const Digest& hash) const { return blocks_.count(hash) > 0; }
    uint64_t canonical_height() const;
    const Digest& canonical_head() const { return canonical_head_; }
    // All leaf blocks, ordered (height desc, hash asc); index 0 is canonical.
    std::vector<Digest> branch_heads() const;
    std::vector<Block> all_blocks() const;  // by (height, hash)
    const ConsensusMode& mode() const { return mode_; }
    uint64_t now_ms() const { return now_; }
    size_t pending_count() const { return pending_.size(); }

private:
    friend class ChainView;
    Block make_block(const Digest& parent, std::vector<Tx> txs, uint64_t proposer);
    void adopt(const Block& b);
    void recompute_canonical();

    ConsensusMode mode_;
    EventLog* log_;
    RngStream fork_rng_;
    std::map<Digest, Block> blocks_;
    std::map<Digest, std::vector<Digest>> children_;
    Digest genesis_hash_{};
    Digest canonical_head_{};
    std::vector<Tx> pending_;
    std::map<std::string, std::unique_ptr<TxValidator>> validators_;
    uint64_t now_ = 0;
    uint64_t produced_ = 0;
    uint64_t next_tx_id_ = 1;
};

Digest block_content_hash(const Digest& parent_hash, uint64_t height, const std::vector<Tx>& txs,
                          uint64_t proposer);

}  // namespace forklab
