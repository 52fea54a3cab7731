#pragma once

// Wire protocol for the grid-simulator / middleware link. One frame:
//   [magic 0x51 0x48][type u8][tick u32][count u16][count x f32 payload]
// All multi-byte fields big-endian. Type 0x01 carries measurements,
// 0x02 carries set points, 0xFF signals a protocol error before close.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "aqflow/grid.hpp"

namespace aqflow::hil {

class ProtocolError : public GridError {
public:
    explicit ProtocolError(const std::string& msg) : GridError("protocol: " + msg) {}
};

inline constexpr uint8_t kMagic0 = 0x51;
inline constexpr uint8_t kMagic1 = 0x48;
inline constexpr size_t kHeaderSize = 9;

enum class FrameType : uint8_t {
    Measurement = 0x01,
    Setpoint = 0x02,
    Error = 0xFF,
};

struct Frame {
    FrameType type = FrameType::Error;
    uint32_t tick = 0;
    std::vector<float> payload;

    bool operator==(const Frame& o) const {
        if (type != o.type || tick != o.tick || payload.size() != o.payload.size())
            return false;
        // Bit-exact comparison; NaN payloads must round-trip too.
        for (size_t i = 0; i < payload.size(); ++i) {
            uint32_t a, b;
            std::memcpy(&a, &payload[i], 4);
            std::memcpy(&b, &o.payload[i], 4);
            if (a != b) return false;
        }
        return true;
    }
};

namespace detail {

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

inline uint32_t get_u32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

}  // namespace detail

inline std::vector<uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > 0xFFFF)
        throw ProtocolError("payload exceeds 65535 floats");
    std::vector<uint8_t> out;
    out.reserve(kHeaderSize + 4 * f.payload.size());
    out.push_back(kMagic0);
    out.push_back(kMagic1);
    out.push_back(static_cast<uint8_t>(f.type));
    detail::put_u32(out, f.tick);
    detail::put_u16(out, static_cast<uint16_t>(f.payload.size()));
    for (float x : f.payload) {
        uint32_t bits;
        std::memcpy(&bits, &x, 4);
        detail::put_u32(out, bits);
    }
    return out;
}

inline bool valid_frame_type(uint8_t t) {
    return t == static_cast<uint8_t>(FrameType::Measurement) ||
           t == static_cast<uint8_t>(FrameType::Setpoint) ||
           t == static_cast<uint8_t>(FrameType::Error);
}

// Decodes one complete frame; the buffer must hold exactly the frame.
inline Frame decode_frame(const std::vector<uint8_t>& buf) {
    if (buf.size() < kHeaderSize) throw ProtocolError("short frame");
    if (buf[0] != kMagic0 || buf[1] != kMagic1) throw ProtocolError("bad magic");
    if (!valid_frame_type(buf[2])) throw ProtocolError("unknown frame type");
    Frame f;
    f.type = static_cast<FrameType>(buf[2]);
    f.tick = detail::get_u32(buf.data() + 3);
    const size_t count = detail::get_u16(buf.data() + 7);
    if (buf.size() != kHeaderSize + 4 * count) throw ProtocolError("payload length mismatch");
    f.payload.resize(count);
    for (size_t i = 0; i < count; ++i) {
        const uint32_t bits = detail::get_u32(buf.data() + kHeaderSize + 4 * i);
        std::memcpy(&f.payload[i], &bits, 4);
    }
    return f;
}

}  // namespace aqflow::hil
