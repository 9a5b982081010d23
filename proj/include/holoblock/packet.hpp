#pragma once

#include <cstdint>

#include "bytes.hpp"
#include "result.hpp"
#include "types.hpp"

namespace holoblock {

constexpr std::size_t kPacketHeaderSize = 12;
constexpr std::size_t kPacketMaxPayload = 244;

// 12-byte header + payload.  total_length counts header and payload, so the
// valid range is [12, 256].  The wire stores it in one byte; 256 does not
// fit, so the length byte carries total_length mod 256 (0x00 means 256).
// Values 1..11 can never appear on a well-formed wire.
struct Packet {
    std::uint8_t identification = 0;
    std::uint16_t total_length = kPacketHeaderSize;
    std::uint8_t priority = 0;              // 0 = lowest .. 3 = highest
    std::uint8_t ttl = 0;
    NodeId source = kNoNode;
    NodeId destination = kNoNode;
    Bytes payload;

    bool operator==(const Packet&) const = default;
};

enum class PacketError {
    TruncatedHeader,
    LengthMismatch,
    LengthOutOfRange,
};

inline const char* to_string(PacketError e) {
    switch (e) {
        case PacketError::TruncatedHeader:  return "TruncatedHeader";
        case PacketError::LengthMismatch:   return "LengthMismatch";
        case PacketError::LengthOutOfRange: return "LengthOutOfRange";
    }
    return "?";
}

inline Packet make_packet(std::uint8_t identification, std::uint8_t priority,
                          std::uint8_t ttl, NodeId source, NodeId destination,
                          Bytes payload) {
    Packet p;
    p.identification = identification;
    p.priority = priority;
    p.ttl = ttl;
    p.source = source;
    p.destination = destination;
    p.total_length = static_cast<std::uint16_t>(kPacketHeaderSize + payload.size());
    p.payload = std::move(payload);
    return p;
}

inline Result<Bytes, PacketError> serialize_packet(const Packet& p) {
    if (p.total_length < kPacketHeaderSize || p.total_length > 256)
        return PacketError::LengthOutOfRange;
    if (p.total_length != kPacketHeaderSize + p.payload.size())
        return PacketError::LengthMismatch;
    Bytes out;
    out.reserve(p.total_length);
    put_u8(out, p.identification);
    put_u8(out, static_cast<std::uint8_t>(p.total_length & 0xff));
    put_u8(out, p.priority);
    put_u8(out, p.ttl);
    put_u32be(out, p.source);
    put_u32be(out, p.destination);
    out.insert(out.end(), p.payload.begin(), p.payload.end());
    return out;
}

inline Result<Packet, PacketError> parse_packet(const Bytes& buf) {
    if (buf.size() < kPacketHeaderSize) return PacketError::TruncatedHeader;
    std::uint16_t total = buf[1] == 0 ? 256 : buf[1];
    if (total < kPacketHeaderSize) return PacketError::LengthOutOfRange;
    if (total != buf.size()) return PacketError::LengthMismatch;
    Packet p;
    p.identification = buf[0];
    p.total_length = total;
    p.priority = buf[2];
    p.ttl = buf[3];
    p.source = get_u32be(buf.data() + 4);
    p.destination = get_u32be(buf.data() + 8);
    p.payload.assign(buf.begin() + kPacketHeaderSize, buf.end());
    return p;
}

} // namespace holoblock
