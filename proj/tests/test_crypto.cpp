#include "doctest.h"

#include "forklab/crypto.hpp"

using namespace forklab;

TEST_CASE("sha256 matches FIPS vectors") {
    CHECK(to_hex(sha256(to_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(sha256(Bytes{})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256(to_bytes("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // Multi-block input (>64 bytes).
    std::string a(1000, 'a');
    CHECK(to_hex(sha256(to_bytes(a))) ==
          "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3");
}

TEST_CASE("key agreement is symmetric and pair-specific") {
    ToyCrypto crypto;
    RngStream rng(11);
    KeyPair a = crypto.keygen(rng);
    KeyPair b = crypto.keygen(rng);
    KeyPair c = crypto.keygen(rng);
    CHECK(crypto.agree(a.sk, b.pk) == crypto.agree(b.sk, a.pk));
    CHECK(crypto.agree(a.sk, b.pk) != crypto.agree(a.sk, c.pk));
    CHECK(crypto.agree(b.sk, c.pk) == crypto.agree(c.sk, b.pk));
}

TEST_CASE("aead round-trips; wrong key or tampering fails") {
    ToyCrypto crypto;
    RngStream rng(12);
    Digest k1 = crypto.hash(to_bytes("key-one"));
    Digest k2 = crypto.hash(to_bytes("key-two"));
    Bytes iv = crypto.random_bytes(rng, 12);
    Bytes msg = to_bytes("the forking way");

    Bytes ct = crypto.aead_encrypt(k1, iv, msg);
    auto back = crypto.aead_decrypt(k1, iv, ct);
    REQUIRE(back.ok());
    CHECK(back.value() == msg);

    CHECK_FALSE(crypto.aead_decrypt(k2, iv, ct).ok());

    for (size_t i = 0; i < ct.size(); i += 5) {
        Bytes tampered = ct;
        tampered[i] ^= 0x01;
        CHECK_FALSE(crypto.aead_decrypt(k1, iv, tampered).ok());
    }
    Bytes other_iv = iv;
    other_iv[0] ^= 0xff;
    CHECK_FALSE(crypto.aead_decrypt(k1, other_iv, ct).ok());
}

TEST_CASE("aead decrypt fails under every non-matching key in a sampled set") {
    ToyCrypto crypto;
    RngStream rng(13);
    Digest key = crypto.hash(to_bytes("the-key"));
    Bytes iv = crypto.random_bytes(rng, 12);
    Bytes ct = crypto.aead_encrypt(key, iv, to_bytes("payload"));
    for (int i = 0; i < 50; ++i) {
        Bytes raw = crypto.random_bytes(rng, 32);
        Digest wrong = crypto.hash(raw);
        if (wrong == key) continue;
        CHECK_FALSE(crypto.aead_decrypt(wrong, iv, ct).ok());
    }
}

TEST_CASE("signatures verify only under the matching public key") {
    ToyCrypto crypto;
    RngStream rng(14);
    KeyPair a = crypto.keygen(rng);
    KeyPair b = crypto.keygen(rng);
    Bytes msg = to_bytes("signed message");
    Bytes sig = crypto.sign(a.sk, msg);
    CHECK(crypto.verify(a.pk, msg, sig));
    CHECK_FALSE(crypto.verify(b.pk, msg, sig));
    CHECK_FALSE(crypto.verify(a.pk, to_bytes("signed messagf"), sig));
    Bytes forged = sig;
    forged[0] ^= 1;
    CHECK_FALSE(crypto.verify(a.pk, msg, forged));
    // Unregistered key: nothing to verify against.
    CHECK_FALSE(crypto.verify(a.pk + 1, msg, sig));
}

TEST_CASE("derive_keypair is deterministic in its secret material") {
    ToyCrypto crypto;
    Bytes secret = to_bytes("master-seed");
    KeyPair k1 = crypto.derive_keypair(secret);
    KeyPair k2 = crypto.derive_keypair(secret);
    CHECK(k1.pk == k2.pk);
    CHECK(k1.sk == k2.sk);
    KeyPair other = crypto.derive_keypair(to_bytes("other-seed"));
    CHECK(other.pk != k1.pk);
}

TEST_CASE("kdf separates contexts") {
    ToyCrypto crypto;
    Bytes key = to_bytes("base");
    CHECK(crypto.kdf(key, to_bytes("a")) != crypto.kdf(key, to_bytes("b")));
    CHECK(crypto.kdf(key, to_bytes("a")) == crypto.kdf(key, to_bytes("a")));
}
