#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sectlab {

// All on-disk integers in this project are little-endian, independent of
// the host byte order.

inline std::uint16_t read_le16(std::span<const std::uint8_t> buf, std::size_t off) {
    return static_cast<std::uint16_t>(buf[off] | (buf[off + 1] << 8));
}

inline std::uint32_t read_le32(std::span<const std::uint8_t> buf, std::size_t off) {
    return static_cast<std::uint32_t>(buf[off]) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 8) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 3]) << 24);
}

inline std::uint64_t read_le64(std::span<const std::uint8_t> buf, std::size_t off) {
    return static_cast<std::uint64_t>(read_le32(buf, off)) |
           (static_cast<std::uint64_t>(read_le32(buf, off + 4)) << 32);
}

inline void write_le16(std::uint8_t* out, std::uint16_t v) {
    out[0] = static_cast<std::uint8_t>(v & 0xff);
    out[1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
}

inline void write_le32(std::uint8_t* out, std::uint32_t v) {
    out[0] = static_cast<std::uint8_t>(v & 0xff);
    out[1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
    out[2] = static_cast<std::uint8_t>((v >> 16) & 0xff);
    out[3] = static_cast<std::uint8_t>((v >> 24) & 0xff);
}

inline void write_le64(std::uint8_t* out, std::uint64_t v) {
    write_le32(out, static_cast<std::uint32_t>(v & 0xffffffffu));
    write_le32(out + 4, static_cast<std::uint32_t>(v >> 32));
}

// Smallest multiple of `alignment` that is >= value. alignment must be >= 1.
inline std::uint64_t align_up(std::uint64_t value, std::uint64_t alignment) {
    const std::uint64_t rem = value % alignment;
    return rem == 0 ? value : value + (alignment - rem);
}

// FNV-1a, used to derive per-input RNG streams from content.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace sectlab
