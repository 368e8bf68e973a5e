#include <doctest.h>

#include <cstdint>
#include <vector>

#include "wheelcomm/sensor_model.hpp"

using namespace wheelcomm;

namespace {

// Oracle: floor(k * r) - floor((k - 1) * r) with r = rate * window, computed in
// exact rational arithmetic (rate in mHz, window in ms).
std::vector<std::uint64_t> window_sizes_oracle(std::uint64_t rate_mhz, Tick window, int count) {
    std::vector<std::uint64_t> out;
    for (int k = 1; k <= count; ++k) {
        const auto hi = static_cast<std::uint64_t>(k) * window * rate_mhz / 1'000'000;
        const auto lo = static_cast<std::uint64_t>(k - 1) * window * rate_mhz / 1'000'000;
        out.push_back(hi - lo);
    }
    return out;
}

std::int64_t lo_bound(const SensorSpec& s) {
    return s.is_signed() ? -(std::int64_t{1} << (s.precision_bits() - 1)) : 0;
}
std::int64_t hi_bound(const SensorSpec& s) {
    return s.is_signed() ? (std::int64_t{1} << (s.precision_bits() - 1)) - 1
                         : (std::int64_t{1} << s.precision_bits()) - 1;
}

}  // namespace

TEST_CASE("data rates reproduce the sensor table") {
    CHECK(data_rate(default_spec(SensorId::AM)) == 1'024'000.0);
    CHECK(data_rate(default_spec(SensorId::IMU)) == 54'000.0);
    CHECK(data_rate(default_spec(SensorId::TP)) == 320.0);
    CHECK(data_rate(default_spec(SensorId::BSOC)) == 12.0);
    CHECK(data_rate(SensorSpec(SensorId::BSOC, 1, 1'000, 1)) == 1.0);
}

TEST_CASE("total required rate") {
    CHECK(total_required_rate(default_specs()) == doctest::Approx(1078.332).epsilon(1e-12));
    const std::vector<SensorSpec> am{default_spec(SensorId::AM)};
    CHECK(total_required_rate(am) == 1024.0);
    const std::vector<SensorSpec> two{default_spec(SensorId::BSOC), default_spec(SensorId::BSOC)};
    CHECK(total_required_rate(two) == doctest::Approx(0.024));
    CHECK_THROWS_WITH_AS(total_required_rate(std::vector<SensorSpec>{}), "no sensors", std::invalid_argument);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(SensorSpec(SensorId::AM, 0, 1000, 1), std::invalid_argument);
    CHECK_THROWS_AS(SensorSpec(SensorId::AM, 33, 1000, 1), std::invalid_argument);
    CHECK_THROWS_AS(SensorSpec(SensorId::AM, 8, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(SensorSpec(SensorId::AM, 8, 1000, 0), std::invalid_argument);
    CHECK(default_spec(SensorId::IMU).channels() == 6);
    CHECK(default_spec(SensorId::BSOC).wire_bytes_per_value() == 2);
}

TEST_CASE("sensor names") {
    CHECK(sensor_name(SensorId::BSOC) == "BSoC");
    CHECK(parse_sensor("bsoc") == SensorId::BSOC);
    CHECK(parse_sensor("Imu") == SensorId::IMU);
    CHECK_THROWS_AS(parse_sensor("GPS"), std::invalid_argument);
}

TEST_CASE("AM 7 ms window holds 224 samples") {
    const auto batch = generate_samples(default_spec(SensorId::AM), SignalConfig{}, 0, 7);
    CHECK(batch.frames() == 224);
    CHECK(batch.values.size() == 224);
    CHECK(batch.first_index == 0);
}

TEST_CASE("IMU 10 ms windows follow the floor-difference sequence") {
    const auto& imu = default_spec(SensorId::IMU);
    const auto oracle = window_sizes_oracle(imu.sample_rate_mhz(), 10, 64);
    // Frozen oracle output for the first eight windows.
    CHECK(std::vector<std::uint64_t>(oracle.begin(), oracle.begin() + 8) ==
          std::vector<std::uint64_t>{5, 6, 5, 6, 6, 5, 6, 6});

    SampleCadence cadence(imu.sample_rate_mhz());
    std::uint64_t total = 0;
    for (int k = 0; k < 64; ++k) {
        const auto batch = generate_samples(imu, SignalConfig{}, k * 10, (k + 1) * 10);
        CHECK(batch.frames() == oracle[static_cast<std::size_t>(k)]);
        CHECK(cadence.advance(10) == oracle[static_cast<std::size_t>(k)]);
        total += batch.frames();
    }
    CHECK(total == 360);  // 640 ms * 562.5 Hz
}

TEST_CASE("no drift over arbitrary windowing") {
    for (auto id : kAllSensors) {
        const auto& spec = default_spec(id);
        std::uint64_t total = 0;
        Tick t = 0;
        std::uint64_t next_index = 0;
        for (Tick w : {1, 3, 7, 2, 11, 5, 13, 997, 1, 1, 64}) {
            const auto batch = generate_samples(spec, SignalConfig{}, t, t + w);
            CHECK(batch.first_index == next_index);
            next_index += batch.frames();
            total += batch.frames();
            t += w;
        }
        CHECK(total == spec.samples_before(t));
        CHECK(total == static_cast<std::uint64_t>(t) * spec.sample_rate_mhz() / 1'000'000);
    }
}

TEST_CASE("windowing does not change the stream") {
    const SignalConfig cfg{};
    for (auto id : kAllSensors) {
        const auto& spec = default_spec(id);
        const auto whole = generate_samples(spec, cfg, 0, 2000);
        std::vector<std::int32_t> pieces;
        for (Tick t = 0; t < 2000; t += 7) {
            const auto b = generate_samples(spec, cfg, t, std::min<Tick>(t + 7, 2000));
            pieces.insert(pieces.end(), b.values.begin(), b.values.end());
        }
        CHECK(pieces == whole.values);
    }
}

TEST_CASE("determinism and seed sensitivity") {
    SignalConfig a;
    SignalConfig b;
    b.seed = 2;
    const auto& am = default_spec(SensorId::AM);
    CHECK(generate_samples(am, a, 0, 50) == generate_samples(am, a, 0, 50));
    CHECK(generate_samples(am, a, 0, 50) != generate_samples(am, b, 0, 50));
}

TEST_CASE("short windows are empty, inverted windows are errors") {
    const auto& bsoc = default_spec(SensorId::BSOC);
    CHECK(generate_samples(bsoc, SignalConfig{}, 1, 500).frames() == 0);
    CHECK_THROWS_AS(generate_samples(bsoc, SignalConfig{}, 5, 5), std::invalid_argument);
    CHECK_THROWS_AS(generate_samples(bsoc, SignalConfig{}, 6, 5), std::invalid_argument);
}

TEST_CASE("samples fit the sensor precision, including extreme profiles") {
    SignalConfig loud;
    loud.am.amplitude = 5.0;
    loud.am.noise_floor = 5.0;
    loud.imu.vertical_load_n = 1e7;
    loud.imu.wheel_speed_hz = 1e4;
    loud.tp.pressure_bar = 1e6;
    loud.tp.temp_c = -1e6;
    loud.bsoc.start_mv = 1e9;
    for (const auto& cfg : {SignalConfig{}, loud}) {
        for (auto id : kAllSensors) {
            const auto& spec = default_spec(id);
            const auto batch = generate_samples(spec, cfg, 0, 3000);
            for (auto v : batch.values) {
                REQUIRE(v >= lo_bound(spec));
                REQUIRE(v <= hi_bound(spec));
            }
        }
    }
}

TEST_CASE("signal models respond to their profiles") {
    SignalConfig low;
    SignalConfig high;
    low.tp.pressure_bar = 1.0;
    high.tp.pressure_bar = 3.0;
    const auto& tp = default_spec(SensorId::TP);
    const auto a = generate_samples(tp, low, 0, 1000);
    const auto b = generate_samples(tp, high, 0, 1000);
    REQUIRE(a.frames() == 5);
    CHECK(b.values[0] > a.values[0]);

    // Battery drains.
    const auto& bsoc = default_spec(SensorId::BSOC);
    SignalConfig drain;
    drain.bsoc.drain_mv_per_s = 10.0;
    const auto v = generate_samples(bsoc, drain, 0, 60'000);
    REQUIRE(v.frames() == 60);
    CHECK(v.values.back() < v.values.front());
}
