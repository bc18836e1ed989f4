#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twin {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Raised for any malformed binary or text input (PLY, SPCF, STRJ, OBJ, PPM).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

static_assert(std::endian::native == std::endian::little, "binary codecs assume a little-endian host");

class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void raw(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void tag(const char (&magic)[5]) { raw(magic, 4); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { raw(&v, sizeof v); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

private:
    Bytes& out_;
};

class ByteReader {
public:
    explicit ByteReader(ByteView in) : in_(in) {}

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }

    template <typename T>
    T read()
    {
        if (remaining() < sizeof(T)) {
            throw FormatError("truncated input: need " + std::to_string(pos_ + sizeof(T)) + " bytes, have " +
                              std::to_string(in_.size()));
        }
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    bool match(const char (&magic)[5])
    {
        if (remaining() < 4 || std::memcmp(in_.data() + pos_, magic, 4) != 0) {
            return false;
        }
        pos_ += 4;
        return true;
    }

private:
    ByteView in_;
    std::size_t pos_ = 0;
};

}  // namespace twin
