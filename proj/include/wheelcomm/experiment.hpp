#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wheelcomm/pubsub.hpp"
#include "wheelcomm/recorder.hpp"
#include "wheelcomm/transport.hpp"
#include "wheelcomm/wheel_node.hpp"

namespace wheelcomm {

/// Rolling circumference of a 225/45R17 tire in metres.
inline constexpr double kTireCircumferenceM = 1.9927;

/// Wheel rotation frequency for a vehicle speed.
double wheel_speed_hz(double speed_kmh, double circumference_m = kTireCircumferenceM);

struct Scenario {
    std::string label;
    double load_n = 5256.0;
    double pressure_bar = 2.5;
    double speed_kmh = 100.0;
};

struct ExperimentConfig {
    double duration_s = 10.0;
    LinkParams link;
    QosPolicy qos;
    SignalConfig signal;
    Tick jitter_ms = 0;
    std::uint64_t seed = 1;
    std::optional<Scenario> scenario;  // overrides the matching signal fields
    SinkPolicy recorder;
    Tick drain_ms = 1000;  // run time after the sensors stop
    std::vector<TaskTableEntry> tasks = default_task_table();
    Tick announce_period = 100;

    /// Throws std::invalid_argument if duration_s <= 0 or any part is invalid.
    void validate() const;
    Tick duration_ms() const;
};

/// Parses the JSON config document. Unknown keys are rejected. Throws
/// std::invalid_argument naming the offending key.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

inline constexpr std::uint32_t kRecorderId = 100;

struct ExperimentResult {
    std::vector<LogRecord> log;
    NodeStats node;
    ChannelStats channel;
    std::uint64_t messages_delivered = 0;  // handed to the recorder
    std::uint64_t reader_lost = 0;         // seqs the reader gave up on
    std::uint64_t recorder_dropped = 0;
    std::uint64_t bad_payloads = 0;
    std::uint64_t retransmissions = 0;
    Tick simulated_ms = 0;
    double wall_ms = 0.0;
};

/// Runs node, channel and recorder on one simulated clock. Deterministic for
/// a given config.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Human-readable multi-line summary.
std::string summarize(const ExperimentResult& r);

}  // namespace wheelcomm
