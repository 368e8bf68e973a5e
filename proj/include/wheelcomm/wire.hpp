#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "wheelcomm/bytes.hpp"

namespace wheelcomm {

// Datagram layout, little-endian throughout:
//
//   'W' 'T' | version u8 = 1 | kind u8 | sender_id u32 | topic_len u8 | topic
//   DATA      seq u64 | payload_len u32 | payload
//   HEARTBEAT first u64 | last u64
//   ACKNACK   ack_floor u64 | count u16 | seq u64 x count
//   ANNOUNCE  node_id u32 | topic_count u8 | (len u8 | topic) x topic_count
//   GAP       count u16 | seq u64 x count
//
// sender_id is the writer for DATA, HEARTBEAT and GAP, the reader for ACKNACK
// and the participant for ANNOUNCE.

inline constexpr std::uint8_t kWireMagic0 = 0x57;  // 'W'
inline constexpr std::uint8_t kWireMagic1 = 0x54;  // 'T'
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kMaxDatagram = 65507;
inline constexpr std::size_t kMaxPayload = 64 * 1024;

enum class PacketKind : std::uint8_t {
    Data = 1,
    Heartbeat = 2,
    AckNack = 3,
    Announce = 4,
    Gap = 5,
};

struct DataBody {
    std::uint64_t seq = 0;
    Bytes payload;
    friend bool operator==(const DataBody&, const DataBody&) = default;
};

// [first, last]; first == last + 1 means nothing is available.
struct HeartbeatBody {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
    friend bool operator==(const HeartbeatBody&, const HeartbeatBody&) = default;
};

// Every seq below ack_floor is received; `missing` lists repair requests.
struct AckNackBody {
    std::uint64_t ack_floor = 0;
    std::vector<std::uint64_t> missing;
    friend bool operator==(const AckNackBody&, const AckNackBody&) = default;
};

// Topics the announcing participant subscribes to.
struct AnnounceBody {
    std::uint32_t node_id = 0;
    std::vector<std::string> topics;
    friend bool operator==(const AnnounceBody&, const AnnounceBody&) = default;
};

// Sequence numbers the writer can no longer supply.
struct GapBody {
    std::vector<std::uint64_t> seqs;
    friend bool operator==(const GapBody&, const GapBody&) = default;
};

using PacketBody = std::variant<DataBody, HeartbeatBody, AckNackBody, AnnounceBody, GapBody>;

struct WirePacket {
    std::uint32_t sender_id = 0;
    std::string topic;
    PacketBody body;

    PacketKind kind() const noexcept;
    friend bool operator==(const WirePacket&, const WirePacket&) = default;
};

class EncodeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Throws EncodeError when a field exceeds its length prefix or the datagram
/// would exceed kMaxDatagram.
Bytes encode(const WirePacket& pkt);
/// Throws DecodeError on bad magic, version, kind, truncation or trailing bytes.
WirePacket decode(ByteView bytes);

}  // namespace wheelcomm
