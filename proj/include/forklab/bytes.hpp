#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forklab {

using Bytes = std::vector<uint8_t>;
using Digest = std::array<uint8_t, 32>;

std::string to_hex(std::span<const uint8_t> data);
Bytes from_hex(std::string_view hex);

inline std::string to_hex(const Digest& d) {
    return to_hex(std::span<const uint8_t>(d.data(), d.size()));
}

// Abbreviated digest for log lines; full digests are logged where evidence
// reconstruction needs them.
std::string short_hex(const Digest& d, size_t chars = 16);

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const uint8_t> b) {
    return std::string(b.begin(), b.end());
}

inline void append(Bytes& out, std::span<const uint8_t> more) {
    out.insert(out.end(), more.begin(), more.end());
}

inline Bytes concat(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    Bytes out(a.begin(), a.end());
    append(out, b);
    return out;
}

}  // namespace forklab
