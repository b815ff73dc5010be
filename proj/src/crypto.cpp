#include "forklab/crypto.hpp"

#include <cstring>

#include "forklab/codec.hpp"

namespace forklab {

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), self-contained so digests are identical everywhere.

namespace {

constexpr uint32_t kSha256K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

inline uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

struct Sha256Ctx {
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    uint8_t block[64];
    size_t block_len = 0;
    uint64_t total_len = 0;

    void compress(const uint8_t* p) {
        uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
                   (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + s1 + ch + kSha256K[i] + w[i];
            uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    void update(std::span<const uint8_t> data) {
        total_len += data.size();
        for (uint8_t byte : data) {
            block[block_len++] = byte;
            if (block_len == 64) {
                compress(block);
                block_len = 0;
            }
        }
    }

    Digest finish() {
        uint64_t bit_len = total_len * 8;
        uint8_t pad = 0x80;
        update(std::span<const uint8_t>(&pad, 1));
        uint8_t zero = 0;
        while (block_len != 56) update(std::span<const uint8_t>(&zero, 1));
        uint8_t len_be[8];
        for (int i = 0; i < 8; ++i) len_be[i] = static_cast<uint8_t>(bit_len >> (56 - 8 * i));
        update(std::span<const uint8_t>(len_be, 8));
        Digest out;
        for (int i = 0; i < 8; ++i) {
            out[4 * i] = static_cast<uint8_t>(h[i] >> 24);
            out[4 * i + 1] = static_cast<uint8_t>(h[i] >> 16);
            out[4 * i + 2] = static_cast<uint8_t>(h[i] >> 8);
            out[4 * i + 3] = static_cast<uint8_t>(h[i]);
        }
        return out;
    }
};

// DH group: Z_p^* with the Mersenne prime p = 2^61 - 1, generator 3.
constexpr uint64_t kDhPrime = 2305843009213693951ULL;
constexpr uint64_t kDhGen = 3;

uint64_t mulmod(uint64_t a, uint64_t b) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(a) * b) % kDhPrime);
}

uint64_t powmod(uint64_t base, uint64_t exp) {
    uint64_t result = 1;
    base %= kDhPrime;
    while (exp > 0) {
        if (exp & 1) result = mulmod(result, base);
        base = mulmod(base, base);
        exp >>= 1;
    }
    return result;
}

Digest tagged_hash(std::string_view tag, std::span<const uint8_t> a, std::span<const uint8_t> b) {
    ByteWriter w;
    w.str(tag).blob(a).blob(b);
    return sha256(w.bytes());
}

constexpr size_t kTagLen = 16;

}  // namespace

Digest sha256(std::span<const uint8_t> data) {
    Sha256Ctx ctx;
    ctx.update(data);
    return ctx.finish();
}

Digest ToyCrypto::hash(std::span<const uint8_t> data) const {
    return sha256(data);
}

Digest ToyCrypto::kdf(std::span<const uint8_t> key, std::span<const uint8_t> context) const {
    return tagged_hash("kdf", key, context);
}

KeyPair ToyCrypto::keygen(RngStream& rng) {
    uint64_t sk = 2 + rng.next_below(kDhPrime - 3);
    KeyPair kp{sk, powmod(kDhGen, sk)};
    registry_[kp.pk] = kp.sk;
    return kp;
}

KeyPair ToyCrypto::derive_keypair(std::span<const uint8_t> secret_material) {
    Digest d = tagged_hash("keypair", secret_material, {});
    uint64_t sk = 0;
    for (int i = 0; i < 8; ++i) sk = (sk << 8) | d[i];
    sk = 2 + sk % (kDhPrime - 3);
    KeyPair kp{sk, powmod(kDhGen, sk)};
    registry_[kp.pk] = kp.sk;
    return kp;
}

Digest ToyCrypto::agree(uint64_t sk, uint64_t pk) const {
    uint64_t shared = powmod(pk, sk);
    ByteWriter w;
    w.str("dh-shared").u64(shared);
    return sha256(w.bytes());
}

Bytes ToyCrypto::aead_encrypt(const Digest& key, std::span<const uint8_t> iv,
                              std::span<const uint8_t> plaintext) const {
    Bytes out;
    out.reserve(plaintext.size() + kTagLen);
    // Keystream blocks: H("ks" || key || iv || counter).
    for (size_t off = 0; off < plaintext.size(); off += 32) {
        ByteWriter w;
        w.str("ks").digest(key).blob(iv).u64(off / 32);
        Digest ks = sha256(w.bytes());
        size_t n = std::min<size_t>(32, plaintext.size() - off);
        for (size_t i = 0; i < n; ++i) out.push_back(plaintext[off + i] ^ ks[i]);
    }
    ByteWriter w;
    w.str("tag").digest(key).blob(iv).blob(out);
    Digest tag = sha256(w.bytes());
    out.insert(out.end(), tag.begin(), tag.begin() + kTagLen);
    return out;
}

Result<Bytes> ToyCrypto::aead_decrypt(const Digest& key, std::span<const uint8_t> iv,
                                      std::span<const uint8_t> ciphertext) const {
    if (ciphertext.size() < kTagLen)
        return make_error(ErrorCode::DecryptFail, "ciphertext shorter than tag");
    std::span<const uint8_t> body = ciphertext.subspan(0, ciphertext.size() - kTagLen);
    std::span<const uint8_t> tag = ciphertext.subspan(ciphertext.size() - kTagLen);
    ByteWriter w;
    w.str("tag").digest(key).blob(iv).blob(body);
    Digest expect = sha256(w.bytes());
    if (!std::equal(tag.begin(), tag.end(), expect.begin()))
        return make_error(ErrorCode::DecryptFail, "authentication tag mismatch");
    Bytes out;
    out.reserve(body.size());
    for (size_t off = 0; off < body.size(); off += 32) {
        ByteWriter kw;
        kw.str("ks").digest(key).blob(iv).u64(off / 32);
        Digest ks = sha256(kw.bytes());
        size_t n = std::min<size_t>(32, body.size() - off);
        for (size_t i = 0; i < n; ++i) out.push_back(body[off + i] ^ ks[i]);
    }
    return out;
}

Bytes ToyCrypto::sign(uint64_t sk, std::span<const uint8_t> msg) const {
    ByteWriter w;
    w.str("sig").u64(sk).blob(msg);
    Digest d = sha256(w.bytes());
    return Bytes(d.begin(), d.end());
}

bool ToyCrypto::verify(uint64_t pk, std::span<const uint8_t> msg,
                       std::span<const uint8_t> sig) const {
    auto it = registry_.find(pk);
    if (it == registry_.end()) return false;
    Bytes expect = sign(it->second, msg);
    return sig.size() == expect.size() && std::equal(sig.begin(), sig.end(), expect.begin());
}

}  // namespace forklab
