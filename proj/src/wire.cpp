#include "wheelcomm/wire.hpp"

#include <limits>

namespace wheelcomm {

namespace {

void put_short_string(ByteWriter& w, const std::string& s, const char* what) {
    if (s.size() > std::numeric_limits<std::uint8_t>::max())
        throw EncodeError(std::string(what) + " longer than 255 bytes");
    w.u8(static_cast<std::uint8_t>(s.size()));
    w.raw(s);
}

void put_seq_list(ByteWriter& w, const std::vector<std::uint64_t>& seqs) {
    if (seqs.size() > std::numeric_limits<std::uint16_t>::max()) throw EncodeError("too many sequence numbers");
    w.u16(static_cast<std::uint16_t>(seqs.size()));
    for (auto s : seqs) w.u64(s);
}

std::vector<std::uint64_t> get_seq_list(ByteReader& r) {
    const auto n = r.u16();
    std::vector<std::uint64_t> out;
    out.reserve(n);
    for (std::uint16_t i = 0; i < n; ++i) out.push_back(r.u64());
    return out;
}

}  // namespace

PacketKind WirePacket::kind() const noexcept {
    return static_cast<PacketKind>(body.index() + 1);
}

Bytes encode(const WirePacket& pkt) {
    Bytes out;
    ByteWriter w(out);
    w.u8(kWireMagic0);
    w.u8(kWireMagic1);
    w.u8(kWireVersion);
    w.u8(static_cast<std::uint8_t>(pkt.kind()));
    w.u32(pkt.sender_id);
    put_short_string(w, pkt.topic, "topic");

    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, DataBody>) {
                if (b.payload.size() > std::numeric_limits<std::uint32_t>::max()) throw EncodeError("payload too large");
                w.u64(b.seq);
                w.u32(static_cast<std::uint32_t>(b.payload.size()));
                w.raw(b.payload);
            } else if constexpr (std::is_same_v<T, HeartbeatBody>) {
                w.u64(b.first);
                w.u64(b.last);
            } else if constexpr (std::is_same_v<T, AckNackBody>) {
                w.u64(b.ack_floor);
                put_seq_list(w, b.missing);
            } else if constexpr (std::is_same_v<T, AnnounceBody>) {
                if (b.topics.size() > std::numeric_limits<std::uint8_t>::max()) throw EncodeError("too many topics");
                w.u32(b.node_id);
                w.u8(static_cast<std::uint8_t>(b.topics.size()));
                for (const auto& t : b.topics) put_short_string(w, t, "topic");
            } else {
                put_seq_list(w, b.seqs);
            }
        },
        pkt.body);

    if (out.size() > kMaxDatagram) throw EncodeError("datagram exceeds " + std::to_string(kMaxDatagram) + " bytes");
    return out;
}

WirePacket decode(ByteView bytes) {
    ByteReader r(bytes);
    if (r.u8() != kWireMagic0 || r.u8() != kWireMagic1) throw DecodeError("bad magic", 0);
    if (r.u8() != kWireVersion) throw DecodeError("unsupported version", 2);
    const auto kind = r.u8();

    WirePacket pkt;
    pkt.sender_id = r.u32();
    pkt.topic = r.str(r.u8());

    switch (static_cast<PacketKind>(kind)) {
        case PacketKind::Data: {
            DataBody b;
            b.seq = r.u64();
            auto payload = r.raw(r.u32());
            b.payload.assign(payload.begin(), payload.end());
            pkt.body = std::move(b);
            break;
        }
        case PacketKind::Heartbeat: {
            HeartbeatBody b;
            b.first = r.u64();
            b.last = r.u64();
            pkt.body = b;
            break;
        }
        case PacketKind::AckNack: {
            AckNackBody b;
            b.ack_floor = r.u64();
            b.missing = get_seq_list(r);
            pkt.body = std::move(b);
            break;
        }
        case PacketKind::Announce: {
            AnnounceBody b;
            b.node_id = r.u32();
            const auto n = r.u8();
            for (std::uint8_t i = 0; i < n; ++i) b.topics.push_back(r.str(r.u8()));
            pkt.body = std::move(b);
            break;
        }
        case PacketKind::Gap: {
            pkt.body = GapBody{get_seq_list(r)};
            break;
        }
        default:
            throw DecodeError("unknown packet kind " + std::to_string(kind), 3);
    }
    if (!r.empty()) r.fail("trailing bytes");
    return pkt;
}

}  // namespace wheelcomm
