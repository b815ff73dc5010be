#include "doctest.h"

#include <map>

#include "forklab/codec.hpp"
#include "forklab/ledger.hpp"

using namespace forklab;

TEST_CASE("advance: final mode produces floor(dt/interval) blocks in order") {
    Ledger ledger(FinalMode{12000}, 1);
    auto blocks = ledger.advance(36000);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[0].height == 1);
    CHECK(blocks[2].height == 3);
    CHECK(ledger.canonical_height() == 3);

    CHECK(ledger.advance(0).empty());
    // Partial intervals accumulate.
    CHECK(ledger.advance(6000).empty());
    CHECK(ledger.advance(6000).size() == 1);
}

TEST_CASE("advance: forced fork yields two blocks at one height") {
    Ledger ledger(EventualMode{12000, 1.0, 6}, 2);
    auto blocks = ledger.advance(12000);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].height == 1);
    CHECK(blocks[1].height == 1);
    CHECK(blocks[0].hash != blocks[1].hash);
    CHECK(blocks[0].parent_hash == blocks[1].parent_hash);
    CHECK(ledger.branch_heads().size() == 2);
}

TEST_CASE("submit_tx: pending txs land in the next block, in order") {
    Ledger ledger(FinalMode{1000}, 3);
    (void)ledger.submit_tx("a", to_bytes("1")).expect("a");
    (void)ledger.submit_tx("b", to_bytes("2")).expect("b");
    auto blocks = ledger.advance(1000);
    REQUIRE(blocks.size() == 1);
    REQUIRE(blocks[0].txs.size() == 2);
    CHECK(blocks[0].txs[0].kind == "a");
    CHECK(blocks[0].txs[1].kind == "b");
    CHECK(blocks[0].txs[0].id < blocks[0].txs[1].id);
}

namespace {

class RejectOdd : public TxValidator {
public:
    Result<void> check(const Tx& tx, const Ledger&) override {
        if (!tx.payload.empty() && tx.payload[0] % 2 == 1)
            return make_error(ErrorCode::ValidationFailed, "odd payload");
        return {};
    }
};

}  // namespace

TEST_CASE("register_tx_validator: gate at submission, duplicate kind rejected") {
    Ledger ledger(FinalMode{1000}, 4);
    ledger.register_tx_validator("gated", std::make_unique<RejectOdd>());
    CHECK(ledger.submit_tx("gated", Bytes{2}).ok());
    auto rejected = ledger.submit_tx("gated", Bytes{3});
    REQUIRE_FALSE(rejected.ok());
    CHECK(rejected.code() == ErrorCode::ValidationFailed);
    CHECK_THROWS_AS(ledger.register_tx_validator("gated", std::make_unique<RejectOdd>()),
                    ForklabError);
}

TEST_CASE("serve_view: honest connection wins, stale lags, branches diverge") {
    Ledger ledger(FinalMode{1000}, 5);
    ledger.advance(5000);

    auto honest = ledger.serve_view({NodeConnection::honest()});
    REQUIRE(honest.ok());
    CHECK(honest.value().head_height() == 5);

    auto stale = ledger.serve_view({NodeConnection::stale(2)});
    REQUIRE(stale.ok());
    CHECK(stale.value().head_height() == 3);

    // One honest among dishonest connections still yields the canonical head.
    auto mixed = ledger.serve_view({NodeConnection::stale(2), NodeConnection::silent(),
                                    NodeConnection::stale(4), NodeConnection::honest()});
    REQUIRE(mixed.ok());
    CHECK(mixed.value().head_height() == 5);

    auto none = ledger.serve_view({NodeConnection::silent()});
    REQUIRE_FALSE(none.ok());
    CHECK(none.code() == ErrorCode::NoConnections);
}

TEST_CASE("serve_view: two clones can be fed the two sides of a fork") {
    Ledger ledger(EventualMode{1000, 1.0, 6}, 6);
    (void)ledger.submit_tx("pay", to_bytes("x")).expect("pay");
    ledger.advance(1000);
    auto heads = ledger.branch_heads();
    REQUIRE(heads.size() == 2);
    auto a = ledger.serve_view({NodeConnection::branch(0)});
    auto b = ledger.serve_view({NodeConnection::branch(1)});
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.value().head_height() == b.value().head_height());
    CHECK(a.value().head_hash() != b.value().head_hash());
}

TEST_CASE("final-mode uniqueness: no two blocks share a height") {
    Ledger ledger(FinalMode{1000}, 7);
    for (int i = 0; i < 30; ++i) {
        (void)ledger.submit_tx("t", Bytes{static_cast<uint8_t>(i)});
        ledger.advance(700);
    }
    std::map<uint64_t, int> seen;
    for (const Block& b : ledger.all_blocks()) seen[b.height]++;
    for (const auto& [h, n] : seen) {
        (void)h;
        CHECK(n == 1);
    }
}

TEST_CASE("hash chain integrity and content hash") {
    Ledger ledger(EventualMode{1000, 0.3, 6}, 8);
    ledger.advance(20000);
    for (const Block& b : ledger.all_blocks()) {
        CHECK(block_content_hash(b.parent_hash, b.height, b.txs, b.proposer) == b.hash);
        if (b.height > 0) {
            const Block& parent = ledger.block(b.parent_hash);
            CHECK(parent.height == b.height - 1);
        }
    }
}

TEST_CASE("longest-chain convergence after forks stop") {
    // Forks for a while, then none: the canonical chain keeps extending and
    // every honest view agrees with it.
    Ledger forky(EventualMode{1000, 1.0, 3}, 9);
    forky.advance(3000);
    uint64_t forked_height = forky.canonical_height();
    CHECK(forky.branch_heads().size() > 1);

    Ledger calm(EventualMode{1000, 0.0, 3}, 10);
    calm.advance(3000);
    CHECK(calm.branch_heads().size() == 1);
    uint64_t h0 = calm.canonical_height();
    calm.advance(3000);
    CHECK(calm.canonical_height() == h0 + 3);
    auto v = calm.serve_view({NodeConnection::honest()});
    REQUIRE(v.ok());
    CHECK(v.value().head_hash() == calm.canonical_head());
    (void)forked_height;
}

TEST_CASE("view soundness: honest serve is never below canonical at serve time") {
    Ledger ledger(EventualMode{1000, 0.5, 6}, 11);
    for (int i = 0; i < 10; ++i) {
        ledger.advance(1000);
        auto v = ledger.serve_view({NodeConnection::honest(), NodeConnection::stale(3)});
        REQUIRE(v.ok());
        CHECK(v.value().head_height() >= ledger.canonical_height());
    }
}

TEST_CASE("chain view: block_at walks the branch, contains checks membership") {
    Ledger ledger(FinalMode{1000}, 12);
    ledger.advance(4000);
    ChainView v = ledger.canonical_view();
    CHECK(v.head_height() == 4);
    CHECK(v.block_at(0).height == 0);
    CHECK(v.block_at(2).height == 2);
    CHECK(v.contains(2, v.block_at(2).hash));
    Digest bogus{};
    CHECK_FALSE(v.contains(2, bogus));
    auto blocks = v.collect(1, 3);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks.front().height == 1);
    CHECK(blocks.back().height == 3);
}
