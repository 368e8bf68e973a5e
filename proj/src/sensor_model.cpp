#include "wheelcomm/sensor_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace wheelcomm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAccelLsbPerG = 32768.0 / 30.0;    // +-30 g range
constexpr double kGyroLsbPerDps = 32768.0 / 4000.0;  // +-4000 dps range
constexpr double kBsocFullScaleMv = 5000.0;
constexpr double kMaxLoadN = 9198.0;

std::int32_t clamp_to_bits(double v, std::uint32_t bits, bool is_signed) {
    double lo = 0.0;
    double hi = 0.0;
    if (is_signed) {
        hi = std::ldexp(1.0, static_cast<int>(bits) - 1) - 1.0;
        lo = -hi - 1.0;
    } else {
        hi = std::ldexp(1.0, static_cast<int>(bits)) - 1.0;
    }
    return static_cast<std::int32_t>(std::llround(std::clamp(v, lo, hi)));
}

// Symmetric noise in [-1, 1) keyed by (seed, sensor, frame, channel).
double noise(std::uint64_t seed, SensorId id, std::uint64_t index, std::uint32_t channel) {
    const auto key = mix64(seed, (static_cast<std::uint64_t>(id) << 8) | channel, index);
    return 2.0 * unit_interval(key) - 1.0;
}

}  // namespace

std::string_view sensor_name(SensorId id) {
    switch (id) {
        case SensorId::AM: return "AM";
        case SensorId::IMU: return "IMU";
        case SensorId::TP: return "TP";
        case SensorId::BSOC: return "BSoC";
    }
    return "?";
}

SensorId parse_sensor(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (auto id : kAllSensors) {
        std::string candidate(sensor_name(id));
        std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (candidate == upper) return id;
    }
    throw std::invalid_argument("unknown sensor '" + std::string(name) + "'");
}

SensorSpec::SensorSpec(SensorId id, std::uint32_t precision_bits, std::uint64_t sample_rate_mhz,
                       std::uint32_t channels)
    : id_(id), precision_(precision_bits), rate_mhz_(sample_rate_mhz), channels_(channels) {
    if (precision_bits == 0 || precision_bits > 32) throw std::invalid_argument("precision must be in 1..32 bits");
    if (sample_rate_mhz == 0) throw std::invalid_argument("sample rate must be positive");
    if (channels == 0) throw std::invalid_argument("channels must be >= 1");
}

std::uint32_t SensorSpec::wire_bytes_per_value() const noexcept {
    if (precision_ <= 8) return 1;
    if (precision_ <= 16) return 2;
    return 4;
}

std::uint64_t SensorSpec::samples_before(Tick t_ms) const noexcept {
    if (t_ms <= 0) return 0;
    return static_cast<std::uint64_t>(t_ms) * rate_mhz_ / 1'000'000;
}

const SensorSpec& default_spec(SensorId id) {
    static const SensorSpec specs[kSensorCount] = {
        SensorSpec(SensorId::AM, 32, 32'000'000, 1),
        SensorSpec(SensorId::IMU, 16, 562'500, 6),
        SensorSpec(SensorId::TP, 32, 5'000, 2),
        SensorSpec(SensorId::BSOC, 12, 1'000, 1),
    };
    return specs[static_cast<int>(id)];
}

std::vector<SensorSpec> default_specs() {
    std::vector<SensorSpec> out;
    for (auto id : kAllSensors) out.push_back(default_spec(id));
    return out;
}

double data_rate(const SensorSpec& spec) {
    // Exact in bit/s: rate_mhz * precision * channels is an integer multiple of 1/1000.
    const auto milli_bits = spec.sample_rate_mhz() * spec.precision_bits() * spec.channels();
    return static_cast<double>(milli_bits) / 1000.0;
}

double total_required_rate(std::span<const SensorSpec> specs) {
    if (specs.empty()) throw std::invalid_argument("no sensors");
    std::uint64_t milli_bits = 0;
    for (const auto& s : specs) milli_bits += s.sample_rate_mhz() * s.precision_bits() * s.channels();
    return static_cast<double>(milli_bits) / 1e6;
}

void synthesize_frame(const SensorSpec& spec, const SignalConfig& cfg, std::uint64_t index,
                      std::span<std::int32_t> out) {
    const double t = static_cast<double>(index) * 1000.0 / static_cast<double>(spec.sample_rate_mhz());
    const auto bits = spec.precision_bits();
    const bool sgn = spec.is_signed();
    const auto id = spec.id();

    switch (id) {
        case SensorId::AM: {
            const double full = std::ldexp(1.0, static_cast<int>(bits) - 1) - 1.0;
            const double v = cfg.am.amplitude * std::sin(kTwoPi * cfg.am.tone_hz * t) +
                             cfg.am.noise_floor * noise(cfg.seed, id, index, 0);
            for (auto& o : out) o = clamp_to_bits(v * full, bits, sgn);
            break;
        }
        case SensorId::IMU: {
            const double theta = std::fmod(kTwoPi * cfg.imu.wheel_speed_hz * t, kTwoPi);
            // Contact patch: radial acceleration dips while the sensor passes the road.
            const double wrapped = theta > std::numbers::pi ? theta - kTwoPi : theta;
            const double patch = -2.0 * (cfg.imu.vertical_load_n / kMaxLoadN) *
                                 std::exp(-(wrapped * wrapped) / 0.05);
            const double accel_g[3] = {std::sin(theta), 0.0, std::cos(theta) + patch};
            const double gyro_dps[3] = {0.0, 360.0 * cfg.imu.wheel_speed_hz, 0.0};
            for (std::uint32_t c = 0; c < out.size(); ++c) {
                const double n = noise(cfg.seed, id, index, c);
                const double v = c < 3 ? (accel_g[c] + 0.02 * n) * kAccelLsbPerG
                                       : (gyro_dps[c - 3] + 0.5 * n) * kGyroLsbPerDps;
                out[c] = clamp_to_bits(v, bits, sgn);
            }
            break;
        }
        case SensorId::TP: {
            // Pressure in 0.01 mbar, temperature in 0.01 degC.
            const double p = cfg.tp.pressure_bar * 1000.0 * 100.0 + 20.0 * noise(cfg.seed, id, index, 0);
            const double temp = cfg.tp.temp_c * 100.0 + 5.0 * noise(cfg.seed, id, index, 1);
            if (!out.empty()) out[0] = clamp_to_bits(p, bits, sgn);
            if (out.size() > 1) out[1] = clamp_to_bits(temp, bits, sgn);
            for (std::size_t c = 2; c < out.size(); ++c) out[c] = 0;
            break;
        }
        case SensorId::BSOC: {
            const double mv = cfg.bsoc.start_mv - cfg.bsoc.drain_mv_per_s * t;
            const double code = mv * (std::ldexp(1.0, static_cast<int>(bits)) - 1.0) / kBsocFullScaleMv;
            for (auto& o : out) o = clamp_to_bits(code, bits, sgn);
            break;
        }
    }
}

SampleBatch generate_samples(const SensorSpec& spec, const SignalConfig& cfg, Tick from_tick,
                             Tick to_tick) {
    if (from_tick >= to_tick) throw std::invalid_argument("sample window must satisfy from < to");
    SampleBatch batch;
    batch.sensor = spec.id();
    batch.channels = spec.channels();
    batch.first_index = spec.samples_before(from_tick);
    const auto end = spec.samples_before(to_tick);
    batch.values.resize((end - batch.first_index) * spec.channels());
    for (auto i = batch.first_index; i < end; ++i) {
        std::span<std::int32_t> frame(batch.values.data() + (i - batch.first_index) * spec.channels(),
                                      spec.channels());
        synthesize_frame(spec, cfg, i, frame);
    }
    return batch;
}

}  // namespace wheelcomm
