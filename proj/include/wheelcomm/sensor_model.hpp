#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wheelcomm/random.hpp"

namespace wheelcomm {

enum class SensorId : std::uint8_t { AM = 0, IMU = 1, TP = 2, BSOC = 3 };

inline constexpr int kSensorCount = 4;
inline constexpr SensorId kAllSensors[kSensorCount] = {SensorId::AM, SensorId::IMU, SensorId::TP,
                                                       SensorId::BSOC};

std::string_view sensor_name(SensorId id);
/// Parses "AM", "IMU", "TP" or "BSoC" (case-insensitive). Throws std::invalid_argument.
SensorId parse_sensor(std::string_view name);

/// Precision, rate and channel layout of one sensor module.
///
/// The sample rate is held in millihertz so that rates such as 562.5 Hz stay
/// exact and sample counting over a millisecond window is integer arithmetic.
class SensorSpec {
public:
    /// Throws std::invalid_argument unless precision, rate and channels are all positive.
    SensorSpec(SensorId id, std::uint32_t precision_bits, std::uint64_t sample_rate_mhz,
               std::uint32_t channels);

    SensorId id() const noexcept { return id_; }
    std::uint32_t precision_bits() const noexcept { return precision_; }
    std::uint64_t sample_rate_mhz() const noexcept { return rate_mhz_; }
    double sample_rate_hz() const noexcept { return static_cast<double>(rate_mhz_) / 1000.0; }
    std::uint32_t channels() const noexcept { return channels_; }

    /// Bytes used per channel value on the wire (precision rounded up to 8/16/32 bits).
    std::uint32_t wire_bytes_per_value() const noexcept;
    bool is_signed() const noexcept { return id_ != SensorId::BSOC; }

    /// Samples (multi-channel frames) acquired over [0, t_ms).
    std::uint64_t samples_before(Tick t_ms) const noexcept;

    /// Number of payload bits carried by `frames` frames.
    std::uint64_t payload_bits(std::uint64_t frames) const noexcept {
        return frames * channels_ * precision_;
    }

    friend bool operator==(const SensorSpec&, const SensorSpec&) = default;

private:
    SensorId id_;
    std::uint32_t precision_;
    std::uint64_t rate_mhz_;
    std::uint32_t channels_;
};

/// Prototype sensor modules: AM 32 bit / 32 kHz / 1 ch, IMU 16 bit / 562.5 Hz / 6 ch,
/// TP 32 bit / 5 Hz / 2 ch, BSoC 12 bit / 1 Hz / 1 ch.
const SensorSpec& default_spec(SensorId id);
std::vector<SensorSpec> default_specs();

/// precision x sample_rate x channels, in bit/s.
double data_rate(const SensorSpec& spec);

/// Sum of data rates in kbit/s. Throws std::invalid_argument("no sensors") on an empty list.
double total_required_rate(std::span<const SensorSpec> specs);

struct AcousticProfile {
    double tone_hz = 1000.0;
    double amplitude = 0.25;    // fraction of full scale
    double noise_floor = 0.02;  // fraction of full scale
};

struct ImuProfile {
    double wheel_speed_hz = 13.94;  // 100 km/h on a 225/45R17 tire
    double vertical_load_n = 5256.0;
};

struct PressureProfile {
    double pressure_bar = 2.5;
    double temp_c = 25.0;
};

struct BatteryProfile {
    double start_mv = 4100.0;
    double drain_mv_per_s = 0.05;
};

struct SignalConfig {
    std::uint64_t seed = 1;
    AcousticProfile am;
    ImuProfile imu;
    PressureProfile tp;
    BatteryProfile bsoc;
};

/// A run of consecutive frames, row-major (frame, channel).
struct SampleBatch {
    SensorId sensor{};
    std::uint64_t first_index = 0;  // global index of the first frame
    std::uint32_t channels = 0;
    std::vector<std::int32_t> values;

    std::size_t frames() const noexcept { return channels == 0 ? 0 : values.size() / channels; }
    friend bool operator==(const SampleBatch&, const SampleBatch&) = default;
};

/// Frames whose acquisition instants fall in [from_tick, to_tick).
///
/// Each frame's value depends only on (seed, sensor, frame index), so splitting
/// a horizon into windows never changes the stream. Throws std::invalid_argument
/// if from_tick >= to_tick; a window shorter than one sample period yields an
/// empty batch.
SampleBatch generate_samples(const SensorSpec& spec, const SignalConfig& cfg, Tick from_tick,
                             Tick to_tick);

/// Frame value generator shared by generate_samples; exposed for range checks.
void synthesize_frame(const SensorSpec& spec, const SignalConfig& cfg, std::uint64_t index,
                      std::span<std::int32_t> out);

/// Remainder accumulator that hands out whole frames per elapsed window.
/// Equivalent to differencing samples_before() but advanced incrementally.
class SampleCadence {
public:
    explicit SampleCadence(std::uint64_t rate_mhz) : rate_mhz_(rate_mhz) {}

    std::uint64_t advance(Tick elapsed_ms) noexcept {
        acc_ += rate_mhz_ * static_cast<std::uint64_t>(elapsed_ms);
        const std::uint64_t whole = acc_ / 1'000'000;
        acc_ -= whole * 1'000'000;
        return whole;
    }

    std::uint64_t remainder_umhz() const noexcept { return acc_; }

private:
    std::uint64_t rate_mhz_;
    std::uint64_t acc_ = 0;
};

}  // namespace wheelcomm
