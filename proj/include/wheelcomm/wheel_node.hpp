#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wheelcomm/pubsub.hpp"
#include "wheelcomm/rt_scheduler.hpp"
#include "wheelcomm/sensor_model.hpp"
#include "wheelcomm/transport.hpp"
#include "wheelcomm/wheel_message.hpp"

namespace wheelcomm {

/// One row of the node's task schedule. Names are fixed:
/// wifi, command, publisher, am, imu, tp, bsoc.
struct TaskTableEntry {
    std::string name;
    int core = 0;
    int priority = 1;
    Tick period = 1;
    Tick phase = 0;
    friend bool operator==(const TaskTableEntry&, const TaskTableEntry&) = default;
};

/// core 0: wifi (1, 4 ms), command (2, 7 ms);
/// core 1: publisher (1, 4 ms), am (2, 7 ms), imu (3, 10 ms), tp (4, 200 ms), bsoc (5, 1000 ms).
std::vector<TaskTableEntry> default_task_table();

/// Nominal period of a sensor's task in the default table.
Tick default_sensor_period(SensorId id);
std::string_view sensor_task_name(SensorId id);

enum class Command : std::uint8_t { Stop = 0, Start = 1 };

struct NodeConfig {
    std::uint32_t node_id = 1;
    SignalConfig signal;
    QosPolicy qos;
    Tick jitter = 0;  // applied to every task
    std::uint64_t jitter_seed = 0;
    std::vector<TaskTableEntry> tasks = default_task_table();
    std::size_t sensor_queue_capacity = 4;
    std::size_t tx_queue_capacity = 256;
    Tick announce_period = 100;
    std::string topic = "wheel/data";
    std::string command_topic = "wheel/command";
    bool acquiring = true;
    bool record_trace = false;
};

struct NodeStats {
    std::array<std::uint64_t, kSensorCount> blocks_produced{};
    std::array<std::uint64_t, kSensorCount> queue_overflow{};  // oldest block evicted
    std::uint64_t messages_published = 0;
    std::uint64_t tx_overflow = 0;
    std::uint64_t datagrams_sent = 0;
    std::uint64_t commands = 0;
    std::uint64_t bad_commands = 0;
};

/// The wheel-sensor node: seven tasks on the simulated dual-core scheduler,
/// a pub/sub participant and a transport endpoint.
///
/// Sensor tasks read the samples of their period window into a SensorBlock
/// and push it to a per-sensor queue. The publisher packs at most one block
/// per sensor into a WheelMessage, publishes it and queues the packets for
/// the Wi-Fi task, which owns the transport.
class WheelNode {
public:
    using PublishHook = std::function<void(const WheelMessage&, std::uint64_t seq)>;

    /// Throws std::invalid_argument for an incomplete or unknown task table
    /// and SchedulerError for invalid task parameters.
    WheelNode(NodeConfig cfg, Transport& transport);

    WheelNode(const WheelNode&) = delete;
    WheelNode& operator=(const WheelNode&) = delete;

    /// Executes one scheduler tick.
    void step();
    void run_until(Tick end_exclusive);
    Tick now() const noexcept { return sched_.now(); }

    bool acquiring() const noexcept { return acquiring_; }
    void set_acquiring(bool on) noexcept { acquiring_ = on; }
    void on_publish(PublishHook hook) { hook_ = std::move(hook); }

    const NodeConfig& config() const noexcept { return cfg_; }
    const NodeStats& stats() const noexcept { return stats_; }
    Scheduler& scheduler() noexcept { return sched_; }
    const Scheduler& scheduler() const noexcept { return sched_; }
    Participant& participant() noexcept { return participant_; }

private:
    void sensor_task(TaskContext& ctx, SensorId id, const TaskTableEntry& row);
    void publisher_task();
    void wifi_task(TaskContext& ctx);
    void command_task();
    void transmit(const Outgoing& o, Tick now);

    NodeConfig cfg_;
    Transport& transport_;
    Scheduler sched_;
    Participant participant_;
    std::array<QueueHandle, kSensorCount> sensor_q_{};
    QueueHandle tx_q_{};
    QueueHandle cmd_q_{};
    std::array<std::uint32_t, kSensorCount> task_count_{};
    bool acquiring_ = true;
    NodeStats stats_;
    PublishHook hook_;
};

}  // namespace wheelcomm
