#include "forklab/ledger.hpp"

#include <algorithm>

#include "forklab/codec.hpp"

namespace forklab {

uint64_t block_interval_of(const ConsensusMode& mode) {
    return std::visit([](const auto& m) { return m.block_interval_ms; }, mode);
}

Digest block_content_hash(const Digest& parent_hash, uint64_t height, const std::vector<Tx>& txs,
                          uint64_t proposer) {
    ByteWriter w;
    w.str("block").digest(parent_hash).u64(height);
    w.u32(static_cast<uint32_t>(txs.size()));
    for (const Tx& tx : txs) {
        w.str(tx.kind).blob(tx.payload).u64(tx.id);
    }
    w.u64(proposer);
    return sha256(w.bytes());
}

// --- ChainView -------------------------------------------------------------

ChainView::ChainView(const Ledger* ledger, Digest head) : ledger_(ledger), head_(head) {
    head_height_ = ledger_->block(head_).height;
}

const Block& ChainView::head() const {
    return ledger_->block(head_);
}

const Block& ChainView::block_at(uint64_t height) const {
    if (height > head_height_) throw ForklabError(ErrorCode::BrokenChain, "height above view head");
    const Block* b = &ledger_->block(head_);
    while (b->height > height) b = &ledger_->block(b->parent_hash);
    return *b;
}

bool ChainView::contains(uint64_t height, const Digest& hash) const {
    if (height > head_height_) return false;
    return block_at(height).hash == hash;
}

std::vector<Block> ChainView::collect(uint64_t from_height, uint64_t to_height) const {
    to_height = std::min(to_height, head_height_);
    std::vector<Block> out;
    if (from_height > to_height) return out;
    const Block* b = &block_at(to_height);
    while (true) {
        out.push_back(*b);
        if (b->height == from_height) break;
        b = &ledger_->block(b->parent_hash);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<Block> ChainView::collect_all() const {
    return collect(0, head_height_);
}

// --- Ledger ----------------------------------------------------------------

Ledger::Ledger(ConsensusMode mode, uint64_t seed, EventLog* log)
    : mode_(mode), log_(log), fork_rng_(mix_seed(seed, "ledger-forks")) {
    Block g;
    g.height = 0;
    g.parent_hash = Digest{};
    g.proposer = 0;
    g.timestamp = 0;
    g.hash = block_content_hash(g.parent_hash, g.height, g.txs, g.proposer);
    genesis_hash_ = g.hash;
    canonical_head_ = g.hash;
    blocks_.emplace(g.hash, std::move(g));
}

Block Ledger::make_block(const Digest& parent, std::vector<Tx> txs, uint64_t proposer) {
    const Block& p = block(parent);
    Block b;
    b.height = p.height + 1;
    b.parent_hash = parent;
    b.txs = std::move(txs);
    b.proposer = proposer;
    b.timestamp = now_;
    b.hash = block_content_hash(b.parent_hash, b.height, b.txs, b.proposer);
    return b;
}

void Ledger::adopt(const Block& b) {
    children_[b.parent_hash].push_back(b.hash);
    blocks_.emplace(b.hash, b);
    if (log_)
        log_->record("block_produced", {{"height", ev_u64(b.height)},
                                        {"hash", short_hex(b.hash)},
                                        {"parent", short_hex(b.parent_hash)},
                                        {"txs", ev_u64(b.txs.size())},
                                        {"proposer", ev_u64(b.proposer)}});
    recompute_canonical();
}

void Ledger::recompute_canonical() {
    auto heads = branch_heads();
    canonical_head_ = heads.front();
}

std::vector<Digest> Ledger::branch_heads() const {
    std::vector<Digest> leaves;
    for (const auto& [hash, b] : blocks_) {
        if (children_.find(hash) == children_.end()) leaves.push_back(hash);
    }
    std::sort(leaves.begin(), leaves.end(), [this](const Digest& a, const Digest& b) {
        uint64_t ha = blocks_.at(a).height, hb = blocks_.at(b).height;
        if (ha != hb) return ha > hb;
        return a < b;  // longest chain, ties by lowest hash
    });
    return leaves;
}

std::vector<Block> Ledger::advance(uint64_t dt_ms) {
    const uint64_t interval = block_interval_of(mode_);
    now_ += dt_ms;
    std::vector<Block> out;
    while ((produced_ + 1) * interval <= now_) {
        ++produced_;
        std::vector<Tx> txs = std::move(pending_);
        pending_.clear();
        Block main = make_block(canonical_head_, std::move(txs), produced_);
        adopt(main);
        out.push_back(main);
        if (auto* ev = std::get_if<EventualMode>(&mode_)) {
            if (fork_rng_.next_unit() < ev->fork_probability) {
                // Competing empty block at the same height, same parent.
                Block rival = make_block(main.parent_hash, {}, produced_ + (uint64_t{1} << 32));
                adopt(rival);
                out.push_back(rival);
                if (log_)
                    log_->record("fork_produced", {{"height", ev_u64(rival.height)},
                                                   {"hash", short_hex(rival.hash)}});
            }
        }
    }
    return out;
}

Result<uint64_t> Ledger::submit_tx(std::string kind, Bytes payload) {
    Tx tx{std::move(kind), std::move(payload), next_tx_id_};
    auto it = validators_.find(tx.kind);
    if (it != validators_.end()) {
        auto verdict = it->second->check(tx, *this);
        if (!verdict.ok()) {
            if (log_)
                log_->record("tx_rejected", {{"kind", tx.kind},
                                             {"reason", std::string(to_string(verdict.error().code))},
                                             {"detail", verdict.error().detail}});
            return verdict.error();
        }
    }
    ++next_tx_id_;
    if (log_) log_->record("tx_submitted", {{"kind", tx.kind}, {"id", ev_u64(tx.id)}});
    pending_.push_back(std::move(tx));
    return pending_.back().id;
}

void Ledger::register_tx_validator(const std::string& kind, std::unique_ptr<TxValidator> validator) {
    if (validators_.count(kind))
        throw ForklabError(ErrorCode::DuplicateKind, "validator already registered: " + kind);
    validators_.emplace(kind, std::move(validator));
}

ChainView Ledger::canonical_view() const {
    return ChainView(this, canonical_head_);
}

Result<ChainView> Ledger::serve_view(const std::vector<NodeConnection>& connections) const {
    std::optional<ChainView> best;
    auto consider = [&](ChainView v) {
        if (!best || v.head_height() > best->head_height() ||
            (v.head_height() == best->head_height() && v.head_hash() < best->head_hash())) {
            best = v;
        }
    };
    auto heads = branch_heads();
    for (const NodeConnection& c : connections) {
        switch (c.strategy) {
            case NodeConnection::Strategy::Honest:
                consider(canonical_view());
                break;
            case NodeConnection::Strategy::Stale: {
                uint64_t h = canonical_height() >= c.stale_lag ? canonical_height() - c.stale_lag : 0;
                consider(ChainView(this, canonical_view().block_at(h).hash));
                break;
            }
            case NodeConnection::Strategy::Branch:
                if (c.branch_index < heads.size()) consider(ChainView(this, heads[c.branch_index]));
                break;
            case NodeConnection::Strategy::Silent:
                break;
        }
    }
    if (!best) return make_error(ErrorCode::NoConnections, "no connection served a chain");
    return *best;
}

const Block& Ledger::genesis() const {
    return blocks_.at(genesis_hash_);
}

const Block& Ledger::block(const Digest& hash) const {
    auto it = blocks_.find(hash);
    if (it == blocks_.end()) throw ForklabError(ErrorCode::BrokenChain, "unknown block hash");
    return it->second;
}

uint64_t Ledger::canonical_height() const {
    return blocks_.at(canonical_head_).height;
}

std::vector<Block> Ledger::all_blocks() const {
    std::vector<Block> out;
    out.reserve(blocks_.size());
    for (const auto& [h, b] : blocks_) out.push_back(b);
    std::sort(out.begin(), out.end(), [](const Block& a, const Block& b) {
        if (a.height != b.height) return a.height < b.height;
        return a.hash < b.hash;
    });
    return out;
}

}  // namespace forklab
