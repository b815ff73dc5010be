#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "forklab/bytes.hpp"
#include "forklab/errors.hpp"

namespace forklab {

// Canonical serialization: big-endian integers, u32-length-prefixed blobs,
// fields in declaration order. State digests and golden wire-format tests
// depend on this encoding being stable.
class ByteWriter {
public:
    ByteWriter& u8(uint8_t v) {
        buf_.push_back(v);
        return *this;
    }
    ByteWriter& u32(uint32_t v) {
        for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        return *this;
    }
    ByteWriter& u64(uint64_t v) {
        for (int i = 7; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        return *this;
    }
    ByteWriter& i64(int64_t v) { return u64(static_cast<uint64_t>(v)); }
    ByteWriter& raw(std::span<const uint8_t> b) {
        append(buf_, b);
        return *this;
    }
    ByteWriter& blob(std::span<const uint8_t> b) {
        u32(static_cast<uint32_t>(b.size()));
        return raw(b);
    }
    ByteWriter& str(std::string_view s) {
        u32(static_cast<uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
        return *this;
    }
    ByteWriter& digest(const Digest& d) { return raw(std::span<const uint8_t>(d.data(), d.size())); }

    Bytes take() { return std::move(buf_); }
    const Bytes& bytes() const { return buf_; }

private:
    Bytes buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : d_(data) {}
    explicit ByteReader(const Bytes& data) : d_(data) {}

    uint8_t u8() {
        need(1);
        return d_[pos_++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | d_[pos_++];
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | d_[pos_++];
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    Bytes raw(size_t n) {
        need(n);
        Bytes out(d_.begin() + pos_, d_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }
    Bytes blob() { return raw(u32()); }
    std::string str() {
        Bytes b = blob();
        return std::string(b.begin(), b.end());
    }
    Digest digest() {
        need(32);
        Digest d;
        for (size_t i = 0; i < 32; ++i) d[i] = d_[pos_ + i];
        pos_ += 32;
        return d;
    }
    Bytes rest() { return raw(d_.size() - pos_); }
    size_t remaining() const { return d_.size() - pos_; }
    bool done() const { return pos_ == d_.size(); }

private:
    void need(size_t n) const {
        if (d_.size() - pos_ < n) throw ForklabError(ErrorCode::MalformedMessage, "short read");
    }
    std::span<const uint8_t> d_;
    size_t pos_ = 0;
};

}  // namespace forklab
