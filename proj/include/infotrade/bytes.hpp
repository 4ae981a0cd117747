#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace infotrade {

using Bytes = std::vector<uint8_t>;

inline void append_u32be(Bytes& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void append_u64be(Bytes& out, uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<uint8_t>(v >> shift));
    }
}

inline uint32_t read_u32be(std::span<const uint8_t> in, size_t offset) {
    return (static_cast<uint32_t>(in[offset]) << 24) |
           (static_cast<uint32_t>(in[offset + 1]) << 16) |
           (static_cast<uint32_t>(in[offset + 2]) << 8) |
           static_cast<uint32_t>(in[offset + 3]);
}

inline uint64_t read_u64be(std::span<const uint8_t> in, size_t offset) {
    uint64_t v = 0;
    for (size_t i = 0; i < 8; ++i) {
        v = (v << 8) | in[offset + i];
    }
    return v;
}

inline void append_bytes(Bytes& out, std::span<const uint8_t> data) {
    out.insert(out.end(), data.begin(), data.end());
}

// Length-prefixed component framing used by all oracle query encodings.
inline void append_framed(Bytes& out, std::span<const uint8_t> data) {
    append_u32be(out, static_cast<uint32_t>(data.size()));
    append_bytes(out, data);
}

std::string to_hex(std::span<const uint8_t> data);
Bytes from_hex(const std::string& hex);

// Deterministic byte stream from a seeded engine: one uint64 draw per
// 8 output bytes, emitted big-endian.
Bytes sample_bytes(std::mt19937_64& rng, size_t count);

}  // namespace infotrade
