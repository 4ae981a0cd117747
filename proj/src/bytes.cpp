#include "infotrade/bytes.hpp"

#include <stdexcept>

namespace infotrade {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("not a hex digit");
}
}  // namespace

std::string to_hex(std::span<const uint8_t> data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) {
        throw std::invalid_argument("odd-length hex string");
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<uint8_t>(hex_value(hex[i]) * 16 + hex_value(hex[i + 1])));
    }
    return out;
}

Bytes sample_bytes(std::mt19937_64& rng, size_t count) {
    Bytes out;
    out.reserve(count);
    while (out.size() < count) {
        uint64_t word = rng();
        for (int shift = 56; shift >= 0 && out.size() < count; shift -= 8) {
            out.push_back(static_cast<uint8_t>(word >> shift));
        }
    }
    return out;
}

}  // namespace infotrade
