#pragma once

// GGUF model-container reader: header/metadata/tensor-info parsing plus
// dequantization of the tensor encodings used by small chat models
// (F32, F16, Q8_0, Q4_0, Q4_K, Q6_K).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbb/util.hpp"

namespace sbb::gguf {

// Tensor element encodings (container type ids).
enum class TensorType : std::uint32_t {
    f32  = 0,
    f16  = 1,
    q4_0 = 2,
    q8_0 = 8,
    q4_k = 12,
    q6_k = 14,
};

const char * tensor_type_name(std::uint32_t t);

// Bytes occupied by `n_elements` values of type `t` (block-padded).
// Throws ValidationError for unsupported types or misaligned counts.
std::size_t tensor_byte_size(std::uint32_t t, std::uint64_t n_elements);

// Metadata value: a small tagged union covering every GGUF scalar plus
// homogeneous arrays of them (nested arrays are rejected).
struct Value {
    enum class Kind { int_scalar, uint_scalar, float_scalar, boolean, string, array };
    Kind               kind = Kind::uint_scalar;
    std::int64_t       i = 0;
    std::uint64_t      u = 0;
    double             f = 0.0;
    bool               b = false;
    std::string        s;
    std::vector<Value> items;  // kind == array

    std::int64_t  as_int() const;    // int/uint/bool, range-checked
    double        as_float() const;  // float or any integer
    bool          as_bool() const;
    const std::string & as_string() const;
    const std::vector<Value> & as_array() const;
};

struct TensorInfo {
    std::string                name;
    std::vector<std::uint64_t> shape;   // shape[0] = fastest-varying (row) dim
    std::uint32_t              type = 0;
    std::uint64_t              offset = 0;  // relative to the data section
    std::uint64_t              n_elements() const;
};

class File {
  public:
    // Reads and validates the whole container. Throws IoError on filesystem
    // problems, ValidationError on malformed content.
    static File open(const std::string & path);

    std::uint32_t version() const { return version_; }

    bool          has(const std::string & key) const;
    const Value & value(const std::string & key) const;  // throws if missing
    // Typed lookups with defaults for optional keys.
    std::int64_t  get_int(const std::string & key, std::int64_t fallback) const;
    std::int64_t  require_int(const std::string & key) const;
    double        get_float(const std::string & key, double fallback) const;
    bool          get_bool(const std::string & key, bool fallback) const;
    std::string   require_string(const std::string & key) const;

    const std::map<std::string, Value> & metadata() const { return metadata_; }
    const std::vector<TensorInfo> &      tensors() const { return tensors_; }

    bool               has_tensor(const std::string & name) const;
    const TensorInfo & tensor(const std::string & name) const;
    // Dequantizes the named tensor to float32 (layout preserved: shape[0]
    // contiguous).
    std::vector<float> tensor_f32(const std::string & name) const;

  private:
    std::uint32_t                        version_ = 0;
    std::map<std::string, Value>         metadata_;
    std::vector<TensorInfo>              tensors_;
    std::map<std::string, std::size_t>   by_name_;
    std::vector<std::uint8_t>            data_;  // tensor data section
};

// IEEE 754 binary16 -> float32.
float half_to_float(std::uint16_t h);

// Dequantizes `n` elements of encoding `type` from `bytes` (exposed for
// oracle tests against hand-built blocks).
std::vector<float> dequantize(std::uint32_t type, const std::uint8_t * bytes,
                              std::size_t byte_len, std::uint64_t n);

} // namespace sbb::gguf
