#include "wheelcomm/wheel_message.hpp"

#include <stdexcept>

#include "wheelcomm/wire.hpp"

namespace wheelcomm {

void encode_message(const WheelMessage& msg, Bytes& out) {
    if (msg.blocks.size() > kSensorCount) throw std::length_error("too many blocks in message");
    ByteWriter w(out);
    w.u32(msg.node_id);
    w.u64(static_cast<std::uint64_t>(msg.assembled_at));
    w.u8(static_cast<std::uint8_t>(msg.blocks.size()));
    for (const auto& b : msg.blocks) {
        const auto& spec = default_spec(b.sensor);
        if (b.samples.size() != static_cast<std::size_t>(b.sample_count) * spec.channels())
            throw std::invalid_argument("block sample vector does not match sample_count");
        w.u8(static_cast<std::uint8_t>(b.sensor));
        w.u32(b.task_count);
        w.u64(static_cast<std::uint64_t>(b.task_timestamp));
        w.u16(b.sample_count);
        switch (b.sensor) {
            case SensorId::AM:
            case SensorId::TP:
                for (auto v : b.samples) w.i32(v);
                break;
            case SensorId::IMU:
                for (auto v : b.samples) w.i16(static_cast<std::int16_t>(v));
                break;
            case SensorId::BSOC:
                for (auto v : b.samples) w.u16(static_cast<std::uint16_t>(v & 0x0FFF));
                break;
        }
    }
}

Bytes encode_message(const WheelMessage& msg) {
    Bytes out;
    encode_message(msg, out);
    return out;
}

WheelMessage decode_message(ByteView bytes, std::size_t base_offset) {
    ByteReader r(bytes, base_offset);
    WheelMessage msg;
    msg.node_id = r.u32();
    msg.assembled_at = static_cast<Tick>(r.u64());
    const auto n = r.u8();
    if (n > kSensorCount) r.fail("too many blocks");
    unsigned seen = 0;
    for (std::uint8_t i = 0; i < n; ++i) {
        SensorBlock b;
        const auto id = r.u8();
        if (id >= kSensorCount) r.fail("unknown sensor id " + std::to_string(id));
        if (seen & (1u << id)) r.fail("duplicate sensor block");
        seen |= 1u << id;
        b.sensor = static_cast<SensorId>(id);
        b.task_count = r.u32();
        b.task_timestamp = static_cast<Tick>(r.u64());
        b.sample_count = r.u16();
        const auto values = static_cast<std::size_t>(b.sample_count) * default_spec(b.sensor).channels();
        b.samples.reserve(values);
        for (std::size_t k = 0; k < values; ++k) {
            switch (b.sensor) {
                case SensorId::AM:
                case SensorId::TP: b.samples.push_back(r.i32()); break;
                case SensorId::IMU: b.samples.push_back(r.i16()); break;
                case SensorId::BSOC: {
                    const auto v = r.u16();
                    if (v & 0xF000) r.fail("BSoC value uses reserved bits");
                    b.samples.push_back(v);
                    break;
                }
            }
        }
        msg.blocks.push_back(std::move(b));
    }
    if (!r.empty()) r.fail("trailing bytes after message");
    return msg;
}

std::optional<WheelMessage> assemble_message(std::uint32_t node_id, std::vector<SensorBlock> pending, Tick now) {
    if (pending.empty()) return std::nullopt;
    unsigned seen = 0;
    for (const auto& b : pending) {
        const auto bit = 1u << static_cast<unsigned>(b.sensor);
        if (seen & bit) throw std::invalid_argument("two pending blocks for sensor " + std::string(sensor_name(b.sensor)));
        seen |= bit;
    }
    WheelMessage msg{node_id, now, std::move(pending)};
    if (encode_message(msg).size() > kMaxPayload) throw std::length_error("assembled message exceeds maximum payload");
    return msg;
}

}  // namespace wheelcomm
