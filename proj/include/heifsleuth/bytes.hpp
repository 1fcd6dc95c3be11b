#ifndef HEIFSLEUTH_BYTES_HPP
#define HEIFSLEUTH_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace heifsleuth {

using ByteSpan = std::span<const uint8_t>;
using ByteBuffer = std::vector<uint8_t>;

// Half-open absolute byte range [start, end).
struct ByteRange {
    uint64_t start = 0;
    uint64_t end = 0;

    uint64_t length() const { return end - start; }
    bool empty() const { return end <= start; }
    bool contains(uint64_t off) const { return off >= start && off < end; }
    bool overlaps(const ByteRange& o) const { return start < o.end && o.start < end; }
    bool operator==(const ByteRange&) const = default;
};

// All multi-byte integers in ISOBMFF are big-endian.
inline uint16_t read_u16be(ByteSpan data, uint64_t off) {
    return static_cast<uint16_t>(data[off] << 8 | data[off + 1]);
}

inline uint32_t read_u32be(ByteSpan data, uint64_t off) {
    return static_cast<uint32_t>(data[off]) << 24 | static_cast<uint32_t>(data[off + 1]) << 16 |
           static_cast<uint32_t>(data[off + 2]) << 8 | static_cast<uint32_t>(data[off + 3]);
}

inline uint64_t read_u64be(ByteSpan data, uint64_t off) {
    return static_cast<uint64_t>(read_u32be(data, off)) << 32 | read_u32be(data, off + 4);
}

inline void write_u16be(ByteBuffer& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void write_u32be(ByteBuffer& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void write_u64be(ByteBuffer& out, uint64_t v) {
    write_u32be(out, static_cast<uint32_t>(v >> 32));
    write_u32be(out, static_cast<uint32_t>(v));
}

inline void patch_u32be(ByteBuffer& buf, size_t off, uint32_t v) {
    buf[off] = static_cast<uint8_t>(v >> 24);
    buf[off + 1] = static_cast<uint8_t>(v >> 16);
    buf[off + 2] = static_cast<uint8_t>(v >> 8);
    buf[off + 3] = static_cast<uint8_t>(v);
}

// Forward cursor over a byte span; all reads are bounds-checked and a
// failed read latches the truncated() flag instead of throwing.
class ByteReader {
public:
    ByteReader(ByteSpan data, uint64_t pos, uint64_t end)
        : data_(data), pos_(pos), end_(end < data.size() ? end : data.size()) {}
    explicit ByteReader(ByteSpan data) : ByteReader(data, 0, data.size()) {}

    uint64_t pos() const { return pos_; }
    uint64_t remaining() const { return pos_ < end_ ? end_ - pos_ : 0; }
    bool truncated() const { return truncated_; }

    uint8_t u8() {
        if (!need(1)) return 0;
        return data_[pos_++];
    }
    uint16_t u16() {
        if (!need(2)) return 0;
        uint16_t v = read_u16be(data_, pos_);
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        if (!need(4)) return 0;
        uint32_t v = read_u32be(data_, pos_);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        if (!need(8)) return 0;
        uint64_t v = read_u64be(data_, pos_);
        pos_ += 8;
        return v;
    }
    // Variable-width unsigned: width in {0,1,2,4,8} bytes; width 0 reads nothing.
    uint64_t uint(unsigned width) {
        switch (width) {
            case 0: return 0;
            case 1: return u8();
            case 2: return u16();
            case 4: return u32();
            case 8: return u64();
            default:
                truncated_ = true;
                return 0;
        }
    }
    std::string cstring() {
        std::string s;
        while (pos_ < end_ && data_[pos_] != 0) s.push_back(static_cast<char>(data_[pos_++]));
        if (pos_ < end_) ++pos_;  // consume the NUL
        return s;
    }
    void skip(uint64_t n) {
        if (!need(n)) return;
        pos_ += n;
    }

private:
    bool need(uint64_t n) {
        if (remaining() < n) {
            truncated_ = true;
            pos_ = end_;
            return false;
        }
        return true;
    }

    ByteSpan data_;
    uint64_t pos_;
    uint64_t end_;
    bool truncated_ = false;
};

}  // namespace heifsleuth

#endif
