#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sbb {

std::string          base64_encode(const void * data, size_t n_bytes);
std::vector<uint8_t> base64_decode(std::string_view text);

// Direction vectors are persisted as base64 of little-endian float32 bytes
// so that serialized directions round-trip bit-exactly across platforms.
std::string        floats_to_base64(const std::vector<float> & values);
std::vector<float> base64_to_floats(std::string_view text);

}  // namespace sbb
