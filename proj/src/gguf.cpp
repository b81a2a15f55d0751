#include "sbb/gguf.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace sbb::gguf {

namespace {

constexpr std::uint32_t kMagic = 0x46554747;  // "GGUF" little-endian

// Metadata value type ids from the container spec.
enum : std::uint32_t {
    kU8 = 0, kI8 = 1, kU16 = 2, kI16 = 3, kU32 = 4, kI32 = 5,
    kF32 = 6, kBool = 7, kString = 8, kArray = 9, kU64 = 10, kI64 = 11,
    kF64 = 12,
};

class Cursor {
  public:
    Cursor(const std::uint8_t * data, std::size_t size) : data_(data), size_(size) {}

    std::size_t pos() const { return pos_; }

    template <typename T> T read() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > size_)
            throw ValidationError("gguf: truncated file (unexpected end of data)");
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string read_string() {
        const auto len = read<std::uint64_t>();
        if (len > size_ - pos_)
            throw ValidationError("gguf: string length exceeds file size");
        std::string s(reinterpret_cast<const char *>(data_ + pos_),
                      static_cast<std::size_t>(len));
        pos_ += static_cast<std::size_t>(len);
        return s;
    }

    void seek(std::size_t p) {
        if (p > size_) throw ValidationError("gguf: seek past end of file");
        pos_ = p;
    }

  private:
    const std::uint8_t * data_;
    std::size_t          size_;
    std::size_t          pos_ = 0;
};

Value read_value(Cursor & c, std::uint32_t type, bool inside_array) {
    Value v;
    switch (type) {
        case kU8:  v.kind = Value::Kind::uint_scalar; v.u = c.read<std::uint8_t>(); break;
        case kI8:  v.kind = Value::Kind::int_scalar;  v.i = c.read<std::int8_t>(); break;
        case kU16: v.kind = Value::Kind::uint_scalar; v.u = c.read<std::uint16_t>(); break;
        case kI16: v.kind = Value::Kind::int_scalar;  v.i = c.read<std::int16_t>(); break;
        case kU32: v.kind = Value::Kind::uint_scalar; v.u = c.read<std::uint32_t>(); break;
        case kI32: v.kind = Value::Kind::int_scalar;  v.i = c.read<std::int32_t>(); break;
        case kU64: v.kind = Value::Kind::uint_scalar; v.u = c.read<std::uint64_t>(); break;
        case kI64: v.kind = Value::Kind::int_scalar;  v.i = c.read<std::int64_t>(); break;
        case kF32: v.kind = Value::Kind::float_scalar; v.f = c.read<float>(); break;
        case kF64: v.kind = Value::Kind::float_scalar; v.f = c.read<double>(); break;
        case kBool:
            v.kind = Value::Kind::boolean;
            v.b = c.read<std::uint8_t>() != 0;
            break;
        case kString:
            v.kind = Value::Kind::string;
            v.s = c.read_string();
            break;
        case kArray: {
            if (inside_array)
                throw ValidationError("gguf: nested metadata arrays are not supported");
            v.kind = Value::Kind::array;
            const auto elem_type = c.read<std::uint32_t>();
            const auto count = c.read<std::uint64_t>();
            v.items.reserve(static_cast<std::size_t>(count));
            for (std::uint64_t k = 0; k < count; ++k)
                v.items.push_back(read_value(c, elem_type, true));
            break;
        }
        default:
            throw ValidationError("gguf: unknown metadata value type " +
                                  std::to_string(type));
    }
    return v;
}

} // namespace

const char * tensor_type_name(std::uint32_t t) {
    switch (static_cast<TensorType>(t)) {
        case TensorType::f32:  return "F32";
        case TensorType::f16:  return "F16";
        case TensorType::q4_0: return "Q4_0";
        case TensorType::q8_0: return "Q8_0";
        case TensorType::q4_k: return "Q4_K";
        case TensorType::q6_k: return "Q6_K";
    }
    return "unsupported";
}

std::size_t tensor_byte_size(std::uint32_t t, std::uint64_t n) {
    auto blocks = [&](std::uint64_t per_block, std::uint64_t bytes) {
        if (n % per_block != 0)
            throw ValidationError(std::string("gguf: ") + tensor_type_name(t) +
                                  " tensor size not a multiple of its block");
        return static_cast<std::size_t>(n / per_block * bytes);
    };
    switch (static_cast<TensorType>(t)) {
        case TensorType::f32:  return static_cast<std::size_t>(n * 4);
        case TensorType::f16:  return static_cast<std::size_t>(n * 2);
        case TensorType::q8_0: return blocks(32, 34);
        case TensorType::q4_0: return blocks(32, 18);
        case TensorType::q4_k: return blocks(256, 144);
        case TensorType::q6_k: return blocks(256, 210);
    }
    throw ValidationError("gguf: unsupported tensor encoding id " + std::to_string(t));
}

std::int64_t Value::as_int() const {
    switch (kind) {
        case Kind::int_scalar: return i;
        case Kind::uint_scalar:
            if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
                throw ValidationError("gguf: unsigned metadata value out of range");
            return static_cast<std::int64_t>(u);
        case Kind::boolean: return b ? 1 : 0;
        default: throw ValidationError("gguf: metadata value is not an integer");
    }
}

double Value::as_float() const {
    switch (kind) {
        case Kind::float_scalar: return f;
        case Kind::int_scalar: return static_cast<double>(i);
        case Kind::uint_scalar: return static_cast<double>(u);
        default: throw ValidationError("gguf: metadata value is not a number");
    }
}

bool Value::as_bool() const {
    if (kind == Kind::boolean) return b;
    if (kind == Kind::int_scalar || kind == Kind::uint_scalar) return as_int() != 0;
    throw ValidationError("gguf: metadata value is not a boolean");
}

const std::string & Value::as_string() const {
    if (kind != Kind::string)
        throw ValidationError("gguf: metadata value is not a string");
    return s;
}

const std::vector<Value> & Value::as_array() const {
    if (kind != Kind::array)
        throw ValidationError("gguf: metadata value is not an array");
    return items;
}

std::uint64_t TensorInfo::n_elements() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

File File::open(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("gguf: cannot open '" + path + "'");
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("gguf: read failed for '" + path + "'");

    Cursor c(raw.data(), raw.size());
    if (c.read<std::uint32_t>() != kMagic)
        throw ValidationError("gguf: '" + path + "' is not a GGUF file (bad magic)");

    File f;
    f.version_ = c.read<std::uint32_t>();
    if (f.version_ != 2 && f.version_ != 3)
        throw ValidationError("gguf: unsupported container version " +
                              std::to_string(f.version_));

    const auto n_tensors = c.read<std::uint64_t>();
    const auto n_kv = c.read<std::uint64_t>();

    for (std::uint64_t k = 0; k < n_kv; ++k) {
        std::string key = c.read_string();
        const auto  type = c.read<std::uint32_t>();
        f.metadata_[key] = read_value(c, type, false);
    }

    for (std::uint64_t t = 0; t < n_tensors; ++t) {
        TensorInfo info;
        info.name = c.read_string();
        const auto n_dims = c.read<std::uint32_t>();
        if (n_dims == 0 || n_dims > 4)
            throw ValidationError("gguf: tensor '" + info.name +
                                  "' has unsupported rank " + std::to_string(n_dims));
        for (std::uint32_t d = 0; d < n_dims; ++d)
            info.shape.push_back(c.read<std::uint64_t>());
        info.type = c.read<std::uint32_t>();
        info.offset = c.read<std::uint64_t>();
        f.by_name_[info.name] = f.tensors_.size();
        f.tensors_.push_back(std::move(info));
    }

    std::uint64_t alignment = 32;
    if (auto it = f.metadata_.find("general.alignment"); it != f.metadata_.end())
        alignment = static_cast<std::uint64_t>(it->second.as_int());
    if (alignment == 0 || (alignment & (alignment - 1)) != 0)
        throw ValidationError("gguf: general.alignment must be a power of two");

    std::size_t data_start = c.pos();
    data_start = (data_start + alignment - 1) / alignment * alignment;
    if (data_start > raw.size())
        throw ValidationError("gguf: data section starts past end of file");
    f.data_.assign(raw.begin() + static_cast<std::ptrdiff_t>(data_start), raw.end());

    for (const auto & info : f.tensors_) {
        const std::size_t need = tensor_byte_size(info.type, info.n_elements());
        if (info.offset % alignment != 0)
            throw ValidationError("gguf: tensor '" + info.name + "' is misaligned");
        if (info.offset + need > f.data_.size())
            throw ValidationError("gguf: tensor '" + info.name +
                                  "' extends past end of file");
    }
    return f;
}

bool File::has(const std::string & key) const { return metadata_.count(key) != 0; }

const Value & File::value(const std::string & key) const {
    auto it = metadata_.find(key);
    if (it == metadata_.end())
        throw ValidationError("gguf: missing metadata key '" + key + "'");
    return it->second;
}

std::int64_t File::get_int(const std::string & key, std::int64_t fallback) const {
    return has(key) ? value(key).as_int() : fallback;
}

std::int64_t File::require_int(const std::string & key) const {
    return value(key).as_int();
}

double File::get_float(const std::string & key, double fallback) const {
    return has(key) ? value(key).as_float() : fallback;
}

bool File::get_bool(const std::string & key, bool fallback) const {
    return has(key) ? value(key).as_bool() : fallback;
}

std::string File::require_string(const std::string & key) const {
    return value(key).as_string();
}

bool File::has_tensor(const std::string & name) const {
    return by_name_.count(name) != 0;
}

const TensorInfo & File::tensor(const std::string & name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end())
        throw ValidationError("gguf: missing tensor '" + name + "'");
    return tensors_[it->second];
}

std::vector<float> File::tensor_f32(const std::string & name) const {
    const TensorInfo & info = tensor(name);
    const std::size_t  need = tensor_byte_size(info.type, info.n_elements());
    return dequantize(info.type, data_.data() + info.offset, need,
                      info.n_elements());
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = (h >> 15) & 1;
    const std::uint32_t exp = (h >> 10) & 0x1F;
    const std::uint32_t mant = h & 0x3FF;
    std::uint32_t out;
    if (exp == 0) {
        if (mant == 0) {
            out = sign << 31;  // signed zero
        } else {               // subnormal: renormalize
            int           e = -1;
            std::uint32_t m = mant;
            while ((m & 0x400) == 0) { m <<= 1; ++e; }
            out = (sign << 31) | static_cast<std::uint32_t>(127 - 15 - e) << 23 |
                  ((m & 0x3FF) << 13);
        }
    } else if (exp == 0x1F) {
        out = (sign << 31) | 0x7F800000 | (mant << 13);  // inf / nan
    } else {
        out = (sign << 31) | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    float f;
    std::memcpy(&f, &out, sizeof(f));
    return f;
}

namespace {

std::uint16_t read_u16(const std::uint8_t * p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

void dequant_q8_0(const std::uint8_t * src, std::uint64_t n, float * dst) {
    for (std::uint64_t b = 0; b < n / 32; ++b) {
        const std::uint8_t * blk = src + b * 34;
        const float          d = half_to_float(read_u16(blk));
        const auto *         q = reinterpret_cast<const std::int8_t *>(blk + 2);
        for (int j = 0; j < 32; ++j) dst[b * 32 + j] = d * static_cast<float>(q[j]);
    }
}

void dequant_q4_0(const std::uint8_t * src, std::uint64_t n, float * dst) {
    for (std::uint64_t b = 0; b < n / 32; ++b) {
        const std::uint8_t * blk = src + b * 18;
        const float          d = half_to_float(read_u16(blk));
        const std::uint8_t * q = blk + 2;
        for (int j = 0; j < 16; ++j) {
            dst[b * 32 + j] = d * (static_cast<float>(q[j] & 0x0F) - 8.0f);
            dst[b * 32 + j + 16] = d * (static_cast<float>(q[j] >> 4) - 8.0f);
        }
    }
}

// Unpacks the twelve packed 6-bit (scale, min) pairs of a K-quant super-block.
void unpack_q4k_scales(const std::uint8_t * s, std::uint8_t * sc, std::uint8_t * m) {
    for (int j = 0; j < 8; ++j) {
        if (j < 4) {
            sc[j] = s[j] & 63;
            m[j] = s[j + 4] & 63;
        } else {
            sc[j] = static_cast<std::uint8_t>((s[j + 4] & 0x0F) | ((s[j - 4] >> 6) << 4));
            m[j] = static_cast<std::uint8_t>((s[j + 4] >> 4) | ((s[j] >> 6) << 4));
        }
    }
}

void dequant_q4_k(const std::uint8_t * src, std::uint64_t n, float * dst) {
    for (std::uint64_t b = 0; b < n / 256; ++b) {
        const std::uint8_t * blk = src + b * 144;
        const float          d = half_to_float(read_u16(blk));
        const float          dmin = half_to_float(read_u16(blk + 2));
        std::uint8_t         sc[8], mn[8];
        unpack_q4k_scales(blk + 4, sc, mn);
        const std::uint8_t * q = blk + 16;  // 128 bytes of nibbles
        float *              y = dst + b * 256;
        // Each 32-byte chunk feeds one pair of 32-element sub-blocks: low
        // nibbles first, then high nibbles.
        for (int chunk = 0; chunk < 4; ++chunk) {
            const float dl = d * static_cast<float>(sc[chunk * 2]);
            const float ml = dmin * static_cast<float>(mn[chunk * 2]);
            const float dh = d * static_cast<float>(sc[chunk * 2 + 1]);
            const float mh = dmin * static_cast<float>(mn[chunk * 2 + 1]);
            for (int l = 0; l < 32; ++l) {
                const std::uint8_t byte = q[chunk * 32 + l];
                y[chunk * 64 + l] = dl * static_cast<float>(byte & 0x0F) - ml;
                y[chunk * 64 + 32 + l] = dh * static_cast<float>(byte >> 4) - mh;
            }
        }
    }
}

void dequant_q6_k(const std::uint8_t * src, std::uint64_t n, float * dst) {
    for (std::uint64_t b = 0; b < n / 256; ++b) {
        const std::uint8_t * blk = src + b * 210;
        const std::uint8_t * ql = blk;          // 128 bytes: low 4 bits
        const std::uint8_t * qh = blk + 128;    // 64 bytes: high 2 bits
        const auto * scales = reinterpret_cast<const std::int8_t *>(blk + 192);
        const float  d = half_to_float(read_u16(blk + 208));
        float *      y = dst + b * 256;
        for (int half = 0; half < 2; ++half) {
            const std::uint8_t * l4 = ql + half * 64;
            const std::uint8_t * h2 = qh + half * 32;
            const std::int8_t *  sc = scales + half * 8;
            float *              out = y + half * 128;
            for (int l = 0; l < 32; ++l) {
                const int is = l / 16;  // 16-element scale granule
                const int q1 = static_cast<int>(l4[l] & 0x0F) |
                               ((static_cast<int>(h2[l]) >> 0 & 3) << 4);
                const int q2 = static_cast<int>(l4[l + 32] & 0x0F) |
                               ((static_cast<int>(h2[l]) >> 2 & 3) << 4);
                const int q3 = static_cast<int>(l4[l] >> 4) |
                               ((static_cast<int>(h2[l]) >> 4 & 3) << 4);
                const int q4 = static_cast<int>(l4[l + 32] >> 4) |
                               ((static_cast<int>(h2[l]) >> 6 & 3) << 4);
                out[l] = d * static_cast<float>(sc[is]) * static_cast<float>(q1 - 32);
                out[l + 32] =
                    d * static_cast<float>(sc[is + 2]) * static_cast<float>(q2 - 32);
                out[l + 64] =
                    d * static_cast<float>(sc[is + 4]) * static_cast<float>(q3 - 32);
                out[l + 96] =
                    d * static_cast<float>(sc[is + 6]) * static_cast<float>(q4 - 32);
            }
        }
    }
}

} // namespace

std::vector<float> dequantize(std::uint32_t type, const std::uint8_t * bytes,
                              std::size_t byte_len, std::uint64_t n) {
    if (tensor_byte_size(type, n) != byte_len)
        throw ValidationError("gguf: dequantize byte length mismatch");
    std::vector<float> out(static_cast<std::size_t>(n));
    switch (static_cast<TensorType>(type)) {
        case TensorType::f32:
            std::memcpy(out.data(), bytes, byte_len);
            break;
        case TensorType::f16:
            for (std::uint64_t j = 0; j < n; ++j)
                out[j] = half_to_float(read_u16(bytes + j * 2));
            break;
        case TensorType::q8_0: dequant_q8_0(bytes, n, out.data()); break;
        case TensorType::q4_0: dequant_q4_0(bytes, n, out.data()); break;
        case TensorType::q4_k: dequant_q4_k(bytes, n, out.data()); break;
        case TensorType::q6_k: dequant_q6_k(bytes, n, out.data()); break;
    }
    for (float v : out)
        if (!std::isfinite(v))
            throw ValidationError("gguf: non-finite value after dequantization");
    return out;
}

} // namespace sbb::gguf
