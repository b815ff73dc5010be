#include "doctest.h"

#include "forklab/codec.hpp"
#include "forklab/mitigations.hpp"
#include "forklab/protocols/phala.hpp"
#include "forklab/protocols/secret.hpp"
#include "forklab/protocols/ten.hpp"

using namespace forklab;
using namespace forklab::protocols;

// Frozen encodings: these layouts are the module contract, so any byte-level
// drift is a break, not a refactor.

TEST_CASE("golden: phala heartbeat layout") {
    ToyCrypto crypto;
    RngStream rng(777);
    KeyPair worker = crypto.keygen(rng);
    phala::PhalaHeartbeat hb;
    hb.session_id = 0x1111111111111111ULL;
    hb.challenge_block = 42;
    hb.challenge_time = 94500;
    hb.iterations = 1000000;
    hb.n_clusters = 1;
    hb.n_contracts = 3;
    hb.signature = crypto.sign(worker.sk, phala::heartbeat_message(hb));
    Bytes b = phala::encode_heartbeat(hb);

    // session_id(8) challenge_block(8) challenge_time(8) iterations(8)
    // n_clusters(4) n_contracts(4) signature(32)
    REQUIRE(b.size() == 72);
    CHECK(to_hex(b) ==
          "1111111111111111000000000000002a000000000001712400000000000f4240000000010000000322"
          "189ef7b8d52d071f5f00fb81ffea6af87e3a290e3880d650ea4e8e744fe488");
    CHECK(b[0] == 0x11);
    CHECK(b[15] == 42);  // challenge_block is the second u64

    phala::PhalaHeartbeat back = phala::decode_heartbeat(b);
    CHECK(back.session_id == hb.session_id);
    CHECK(back.challenge_block == hb.challenge_block);
    CHECK(back.challenge_time == hb.challenge_time);
    CHECK(back.iterations == hb.iterations);
    CHECK(back.n_clusters == hb.n_clusters);
    CHECK(back.n_contracts == hb.n_contracts);
    CHECK(back.signature == hb.signature);
    CHECK(crypto.verify(worker.pk, phala::heartbeat_message(back), back.signature));
}

TEST_CASE("golden: phala query layout (AEAD_IV || clientPubKey || ct || idPk || sig)") {
    ToyCrypto crypto;
    RngStream qrng(778);
    phala::QueryContext qc;
    qc.client_identity = crypto.keygen(qrng);
    qc.contract_address = sha256(to_bytes("contract-address"));
    KeyPair contract = crypto.keygen(qrng);
    qc.contract_pk = contract.pk;
    RngStream crng(779);
    phala::BuiltQuery q = phala::build_query(crypto, crng, qc, to_bytes("get_data"));

    REQUIRE(q.query.size() == 124);
    CHECK(to_hex(q.query) ==
          "b10563a2536e5a38d9d977e108f712360bd4ba4862494b4db162e7bd666d43ae86a2e8e48d21fbf55e"
          "96387b68b31223745e458d2d71fc4035a676f0a2d133744dda5a6048bc5cbd77abe239b7ed8f0192fa"
          "46410d4935d00121b211ad4b59461812d65f5c5888cd6852c426adc04aac34cdbd98c7dbace7d296c6"
          "cf");
    CHECK(q.nonce == 15791459358598619330ULL);

    // Structure: iv(12) clientPubKey(8) ciphertext(payload-20) idPk(8) sig(32);
    // the ciphertext covers contractAddress(32) || n(8) || rawQuery(8) + tag(16).
    size_t ct_len = 32 + 8 + 8 + 16;
    CHECK(q.query.size() == 12 + 8 + ct_len + 8 + 32);
    // The client identity pk sits 40 bytes from the end, big-endian.
    ByteReader tail(std::span<const uint8_t>(q.query.data() + q.query.size() - 40, 8));
    CHECK(tail.u64() == qc.client_identity.pk);
}

TEST_CASE("golden: secret query layout, cleartext address first") {
    ToyCrypto crypto;
    RngStream srng(780);
    KeyPair io = crypto.keygen(srng);
    Digest code_hash = sha256(to_bytes("code"));
    Digest addr = sha256(to_bytes("address-a"));

    RngStream crng(781);
    secret::BuiltQuery v = secret::build_query(crypto, crng, io.pk, addr, code_hash,
                                               to_bytes("get_count"), Variant::Vulnerable);
    REQUIRE(v.query.size() == 105);
    CHECK(to_hex(v.query) ==
          "3565d931690612aa38419f94053c377e60df0aa38b10c9f272ec625b7cbf08f90ace5dc0a15d22920b"
          "f0c25d3672744a9894c14d35f2886af18d40ca121171030faf0ffb385a673fb728ffaa94082729d665"
          "cf8b52be49b2fd65ee7355e6d7df8fe8ef8deb28bc85fc");
    CHECK(v.nonce == 778662867504013970ULL);
    // contractAddress(32) || n(8) || clientPubKey(8) || ct(codeHash(32)+raw(9)+tag(16))
    CHECK(v.query.size() == 32 + 8 + 8 + (32 + 9 + 16));
    CHECK(Bytes(v.query.begin(), v.query.begin() + 32) == Bytes(addr.begin(), addr.end()));

    // Patched layout carries the intended address inside the AEAD: 32 more bytes.
    RngStream crng2(781);
    secret::BuiltQuery p = secret::build_query(crypto, crng2, io.pk, addr, code_hash,
                                               to_bytes("get_count"), Variant::Patched);
    REQUIRE(p.query.size() == 137);
    CHECK(to_hex(p.query) ==
          "3565d931690612aa38419f94053c377e60df0aa38b10c9f272ec625b7cbf08f90ace5dc0a15d22920b"
          "f0c25d3672744a9894c14d35f2886af18d40ca121171030faf0ffb385a673fb728ffaa94082729846"
          "562e558d72e76b11e152eb887ca3c278eee0668d5b92ef255e9cf86a2302df73904404e2be55a640f8"
          "85546e7975d67b77de70bd58390cd");
}

TEST_CASE("golden: ten rollup header layout, ephemeral id appended in patched form") {
    ToyCrypto crypto;
    RngStream rng(777);
    (void)crypto.keygen(rng);  // aligns the stream with the generator fixture
    ten::TenRollup r;
    r.l1_block_header = sha256(to_bytes("l1-head"));
    r.cross_chain_messages = to_bytes("xc");
    r.body = to_bytes("batch");
    r.payload_hash = sha256(r.body);
    KeyPair signer = crypto.keygen(rng);
    r.payload_hash_signature = crypto.sign(signer.sk, to_bytes("sig-material"));
    r.batch_seq_num = 9;
    r.aggregator_nonce = 0x0102030405060708ULL;
    r.aggregator_l2_address = sha256(to_bytes("l2-addr"));

    Bytes vul = ten::encode_rollup_header(r);
    REQUIRE(vul.size() == 154);
    CHECK(to_hex(vul) ==
          "764a05690b193f7e6db7b3356f98a8bb901be106334544a3579c62ac0c2eaddf0000000278634bb24e"
          "fc9641afc5ded1ca77eabb6e2fcf062d2112ccd61bd8bd6acd89180bae00000020161a8d40b0fca5db"
          "87130eb0aa41652151f894340fbbef785d3d55d43d7d3c5100000000000000090102030405060708"
          "1428f6fdb1d93d821f6acafbee53623247cb52b5b0e1fb38af21f8426529366e");

    r.aggregator_ephemeral_id = 0xAABBCCDDEEFF0011ULL;
    Bytes pat = ten::encode_rollup_header(r);
    REQUIRE(pat.size() == 162);
    CHECK(Bytes(pat.begin(), pat.begin() + 154) == vul);
    CHECK(to_hex(Bytes(pat.end() - 8, pat.end())) == "aabbccddeeff0011");

    ten::TenRollup back = ten::decode_rollup_header(pat, /*patched=*/true);
    CHECK(back.l1_block_header == r.l1_block_header);
    CHECK(back.cross_chain_messages == r.cross_chain_messages);
    CHECK(back.payload_hash == r.payload_hash);
    CHECK(back.batch_seq_num == 9);
    CHECK(back.aggregator_nonce == r.aggregator_nonce);
    CHECK(back.aggregator_l2_address == r.aggregator_l2_address);
    CHECK(back.aggregator_ephemeral_id == r.aggregator_ephemeral_id);
}

TEST_CASE("golden: timestamped response layout") {
    ToyCrypto crypto;
    RngStream rng(777);
    (void)crypto.keygen(rng);
    (void)crypto.keygen(rng);
    KeyPair ek = crypto.keygen(rng);
    auto ts = mitigations::timestamp_response(crypto, ek.sk, to_bytes("payload"), 1234,
                                              sha256(to_bytes("block-hash")));
    Bytes b = mitigations::encode_timestamped_response(ts);
    REQUIRE(b.size() == 88);
    CHECK(to_hex(b) ==
          "000000077061796c6f616400000000000004d201020b5468de679b37b645c1677576ba981f5b65c1ac"
          "949a57de34058f214b397f000000201561f7be43e87e5ed51f341f542dc90a20a48428b42ecd13ef5b"
          "f7ee66d08481");
    // payload blob, u64 height, flag, digest, signature blob.
    CHECK(b[3] == 7);           // payload length prefix
    CHECK(b[18] == 0xd2);       // height low byte at offset 11+8-1
    CHECK(b[19] == 1);          // hash-present flag
    auto back = mitigations::decode_timestamped_response(b);
    CHECK(back.height == 1234);
    CHECK(back.payload == to_bytes("payload"));
    REQUIRE(back.block_hash.has_value());
    CHECK(*back.block_hash == sha256(to_bytes("block-hash")));
}

TEST_CASE("golden: state commit tx layout") {
    mitigations::StateCommitTx c{"contract-1", sha256(to_bytes("prev")), sha256(to_bytes("new")),
                                 sha256(to_bytes("anchor"))};
    Bytes b = mitigations::encode_state_commit(c);
    REQUIRE(b.size() == 110);
    CHECK(to_hex(b) ==
          "0000000a636f6e74726163742d3184fd9bac333ad79154348296204fa7f8c537a96e08983e5f73b3f5"
          "aca8e8edf711507a0e2f5e69d5dfa40a62a1bd7b6ee57e6bcd85c67c9b8431b36fff21c43779bfb0e2"
          "ba76b9d447606ddbcc494834f05a4c11deb052e74b49ea307a3c5bcd");
    auto back = mitigations::decode_state_commit(b);
    CHECK(back.contract == "contract-1");
    CHECK(back.prev_digest == c.prev_digest);
    CHECK(back.new_digest == c.new_digest);
    CHECK(back.anchor_hash == c.anchor_hash);
}

TEST_CASE("re-encoding is byte-stable") {
    ToyCrypto crypto;
    RngStream rng(999);
    KeyPair k = crypto.keygen(rng);
    auto ts = mitigations::timestamp_response(crypto, k.sk, to_bytes("x"), 5, std::nullopt);
    Bytes once = mitigations::encode_timestamped_response(ts);
    Bytes twice =
        mitigations::encode_timestamped_response(mitigations::decode_timestamped_response(once));
    CHECK(once == twice);
}
