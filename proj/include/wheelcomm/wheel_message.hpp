#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wheelcomm/bytes.hpp"
#include "wheelcomm/sensor_model.hpp"

namespace wheelcomm {

/// Output of one sensor-task activation.
struct SensorBlock {
    SensorId sensor{};
    std::uint32_t task_count = 0;  // 1, 2, 3, ... per sensor
    Tick task_timestamp = 0;       // activation tick of the producing task
    std::uint16_t sample_count = 0;
    std::vector<std::int32_t> samples;  // sample_count x channels, row-major

    friend bool operator==(const SensorBlock&, const SensorBlock&) = default;
};

/// The single aggregated message: at most one block per sensor.
struct WheelMessage {
    std::uint32_t node_id = 0;
    Tick assembled_at = 0;
    std::vector<SensorBlock> blocks;

    friend bool operator==(const WheelMessage&, const WheelMessage&) = default;
};

// Message layout (little-endian):
//   node_id u32 | assembled_at u64 | block_count u8 |
//   per block: sensor u8 | task_count u32 | task_timestamp u64 | sample_count u16 |
//              values (AM i32, IMU i16, TP i32, BSoC u16 with the top 4 bits zero)
Bytes encode_message(const WheelMessage& msg);
void encode_message(const WheelMessage& msg, Bytes& out);
/// Throws DecodeError (offsets relative to base_offset) on malformed input.
WheelMessage decode_message(ByteView bytes, std::size_t base_offset = 0);

/// One message holding every pending block, or nullopt when nothing is
/// pending. Throws std::invalid_argument for two blocks of the same sensor and
/// std::length_error if the encoded message would exceed kMaxPayload.
std::optional<WheelMessage> assemble_message(std::uint32_t node_id, std::vector<SensorBlock> pending, Tick now);

}  // namespace wheelcomm
