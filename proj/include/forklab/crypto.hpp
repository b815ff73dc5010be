#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "forklab/bytes.hpp"
#include "forklab/errors.hpp"
#include "forklab/rng.hpp"

namespace forklab {

struct KeyPair {
    uint64_t sk = 0;
    uint64_t pk = 0;
};

// Abstract crypto surface used by enclaves and clients. The default provider
// is a deterministic construction whose failure semantics are what matter:
// decryption under a wrong key fails, key agreement is symmetric, signatures
// verify only under the matching public key.
class CryptoProvider {
public:
    virtual ~CryptoProvider() = default;

    virtual Digest hash(std::span<const uint8_t> data) const = 0;
    virtual Digest kdf(std::span<const uint8_t> key, std::span<const uint8_t> context) const = 0;

    virtual KeyPair keygen(RngStream& rng) = 0;
    // Diffie-Hellman style: agree(skA, pkB) == agree(skB, pkA).
    virtual Digest agree(uint64_t sk, uint64_t pk) const = 0;

    // Ciphertext carries an appended 16-byte tag.
    virtual Bytes aead_encrypt(const Digest& key, std::span<const uint8_t> iv,
                               std::span<const uint8_t> plaintext) const = 0;
    virtual Result<Bytes> aead_decrypt(const Digest& key, std::span<const uint8_t> iv,
                                       std::span<const uint8_t> ciphertext) const = 0;

    virtual Bytes sign(uint64_t sk, std::span<const uint8_t> msg) const = 0;
    virtual bool verify(uint64_t pk, std::span<const uint8_t> msg,
                        std::span<const uint8_t> sig) const = 0;

    virtual double uniform_unit(RngStream& rng) const { return rng.next_unit(); }
    virtual Bytes random_bytes(RngStream& rng, size_t n) const {
        Bytes out(n);
        rng.fill(out);
        return out;
    }

    Digest hash(const Bytes& b) const { return hash(std::span<const uint8_t>(b)); }
};

// Hash-backed provider: SHA-256 everywhere, DH over a 61-bit prime field,
// stream-cipher AEAD with a hashed tag, and signatures checked through a
// provider-internal pk->sk registry (hosts never see it).
class ToyCrypto : public CryptoProvider {
public:
    Digest hash(std::span<const uint8_t> data) const override;
    Digest kdf(std::span<const uint8_t> key, std::span<const uint8_t> context) const override;
    KeyPair keygen(RngStream& rng) override;
    Digest agree(uint64_t sk, uint64_t pk) const override;
    Bytes aead_encrypt(const Digest& key, std::span<const uint8_t> iv,
                       std::span<const uint8_t> plaintext) const override;
    Result<Bytes> aead_decrypt(const Digest& key, std::span<const uint8_t> iv,
                               std::span<const uint8_t> ciphertext) const override;
    Bytes sign(uint64_t sk, std::span<const uint8_t> msg) const override;
    bool verify(uint64_t pk, std::span<const uint8_t> msg,
                std::span<const uint8_t> sig) const override;

    // Deterministic keypair from a secret scalar source; used for keys that
    // must be re-derivable from a shared seed (network master keys).
    KeyPair derive_keypair(std::span<const uint8_t> secret_material);

private:
    std::map<uint64_t, uint64_t> registry_;  // pk -> sk
};

Digest sha256(std::span<const uint8_t> data);

}  // namespace forklab
