#include "sbb/base64.hpp"

#include "sbb/util.hpp"

#include <bit>
#include <cstring>

namespace sbb {

static constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const void * data, size_t n_bytes) {
    const uint8_t * p = static_cast<const uint8_t *>(data);
    std::string out;
    out.reserve((n_bytes + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= n_bytes; i += 3) {
        uint32_t v = (uint32_t(p[i]) << 16) | (uint32_t(p[i + 1]) << 8) | p[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    const size_t rem = n_bytes - i;
    if (rem == 1) {
        uint32_t v = uint32_t(p[i]) << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2) {
        uint32_t v = (uint32_t(p[i]) << 16) | (uint32_t(p[i + 1]) << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
    int8_t rev[256];
    std::memset(rev, -1, sizeof(rev));
    for (int i = 0; i < 64; i++) {
        rev[static_cast<uint8_t>(kAlphabet[i])] = static_cast<int8_t>(i);
    }
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    uint32_t acc    = 0;
    int      n_bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        int8_t v = rev[static_cast<uint8_t>(c)];
        if (v < 0) {
            throw ValidationError("invalid base64 character");
        }
        acc = (acc << 6) | static_cast<uint32_t>(v);
        n_bits += 6;
        if (n_bits >= 8) {
            n_bits -= 8;
            out.push_back(static_cast<uint8_t>((acc >> n_bits) & 0xff));
        }
    }
    return out;
}

std::string floats_to_base64(const std::vector<float> & values) {
    static_assert(sizeof(float) == 4);
    std::vector<uint8_t> bytes(values.size() * 4);
    for (size_t i = 0; i < values.size(); i++) {
        uint32_t bits;
        std::memcpy(&bits, &values[i], 4);
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap32(bits);
        }
        std::memcpy(&bytes[i * 4], &bits, 4);
    }
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<float> base64_to_floats(std::string_view text) {
    std::vector<uint8_t> bytes = base64_decode(text);
    if (bytes.size() % 4 != 0) {
        throw ValidationError("base64 float payload is not a multiple of 4 bytes");
    }
    std::vector<float> out(bytes.size() / 4);
    for (size_t i = 0; i < out.size(); i++) {
        uint32_t bits;
        std::memcpy(&bits, &bytes[i * 4], 4);
        if constexpr (std::endian::native == std::endian::big) {
            bits = __builtin_bswap32(bits);
        }
        std::memcpy(&out[i], &bits, 4);
    }
    return out;
}

}  // namespace sbb
