#include "wheelcomm/wheel_node.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace wheelcomm {

namespace {

constexpr std::string_view kSensorTaskNames[kSensorCount] = {"am", "imu", "tp", "bsoc"};

}  // namespace

std::vector<TaskTableEntry> default_task_table() {
    return {
        {"wifi", 0, 1, 4, 0},    {"command", 0, 2, 7, 0}, {"publisher", 1, 1, 4, 0}, {"am", 1, 2, 7, 0},
        {"imu", 1, 3, 10, 0},    {"tp", 1, 4, 200, 0},    {"bsoc", 1, 5, 1000, 0},
    };
}

Tick default_sensor_period(SensorId id) {
    static constexpr Tick periods[kSensorCount] = {7, 10, 200, 1000};
    return periods[static_cast<int>(id)];
}

std::string_view sensor_task_name(SensorId id) { return kSensorTaskNames[static_cast<int>(id)]; }

WheelNode::WheelNode(NodeConfig cfg, Transport& transport)
    : cfg_(std::move(cfg)),
      transport_(transport),
      sched_(SchedulerConfig{kDefaultPriorityOrder, cfg_.jitter_seed, cfg_.record_trace}),
      participant_(cfg_.node_id, cfg_.announce_period),
      acquiring_(cfg_.acquiring) {
    cfg_.qos.validate();
    if (cfg_.sensor_queue_capacity < 1) throw std::invalid_argument("sensor queue capacity must be >= 1");
    if (cfg_.tx_queue_capacity < 1) throw std::invalid_argument("tx queue capacity must be >= 1");

    std::map<std::string, const TaskTableEntry*> rows;
    for (const auto& row : cfg_.tasks) {
        static constexpr std::string_view known[] = {"wifi", "command", "publisher", "am", "imu", "tp", "bsoc"};
        if (std::find(std::begin(known), std::end(known), row.name) == std::end(known))
            throw std::invalid_argument("unknown task '" + row.name + "' in task table");
        if (!rows.emplace(row.name, &row).second)
            throw std::invalid_argument("task '" + row.name + "' listed twice");
    }
    if (rows.size() != 7) throw std::invalid_argument("task table must list all seven node tasks");

    for (int i = 0; i < kSensorCount; ++i)
        sensor_q_[i] = sched_.create_queue(cfg_.sensor_queue_capacity, OverflowPolicy::DropOldest);
    tx_q_ = sched_.create_queue(cfg_.tx_queue_capacity, OverflowPolicy::RejectNew);
    cmd_q_ = sched_.create_queue(16, OverflowPolicy::DropOldest);

    participant_.create_writer(cfg_.topic, cfg_.qos);
    participant_.create_reader(cfg_.command_topic, Reliability::Reliable);

    auto spawn = [&](const TaskTableEntry& row, TaskHandler handler) {
        sched_.spawn(TaskSpec{row.name, row.core, row.priority, row.period, row.phase, 1, cfg_.jitter,
                              std::move(handler)});
    };
    // Spawn order follows the task table, which fixes round-robin order.
    for (const auto& row : cfg_.tasks) {
        if (row.name == "wifi") {
            spawn(row, [this](TaskContext& ctx) { wifi_task(ctx); });
        } else if (row.name == "command") {
            spawn(row, [this](TaskContext&) { command_task(); });
        } else if (row.name == "publisher") {
            spawn(row, [this](TaskContext&) { publisher_task(); });
        } else {
            const auto id = parse_sensor(row.name);
            const auto frames = default_spec(id).samples_before(row.period);
            if (frames > 0xFFFF) throw std::invalid_argument("period of task '" + row.name + "' overflows a block");
            spawn(row, [this, id, row](TaskContext& ctx) { sensor_task(ctx, id, row); });
        }
    }
}

void WheelNode::step() { sched_.advance_tick(); }

void WheelNode::run_until(Tick end_exclusive) {
    while (sched_.now() < end_exclusive) step();
}

void WheelNode::sensor_task(TaskContext& ctx, SensorId id, const TaskTableEntry& row) {
    if (!acquiring_) return;
    const auto n = static_cast<Tick>(ctx.activation_count() - 1);
    const Tick from = row.phase + n * row.period;
    const auto batch = generate_samples(default_spec(id), cfg_.signal, from, from + row.period);
    const auto i = static_cast<std::size_t>(id);
    SensorBlock block{id, ++task_count_[i], ctx.activation_tick(), static_cast<std::uint16_t>(batch.frames()),
                      batch.values};
    ++stats_.blocks_produced[i];
    if (sched_.queue_send(sensor_q_[i], std::move(block)) == SendResult::Overflow) ++stats_.queue_overflow[i];
}

void WheelNode::publisher_task() {
    std::vector<SensorBlock> pending;
    for (auto q : sensor_q_)
        if (auto item = sched_.queue_try_receive(q)) pending.push_back(std::any_cast<SensorBlock>(std::move(*item)));
    auto msg = assemble_message(cfg_.node_id, std::move(pending), sched_.now());
    if (!msg) return;
    const auto seq = participant_.writer(cfg_.topic)->next_seq();
    auto out = participant_.publish(cfg_.topic, encode_message(*msg));
    ++stats_.messages_published;
    for (auto& o : out)
        if (sched_.queue_send(tx_q_, std::move(o)) == SendResult::Overflow) ++stats_.tx_overflow;
    if (hook_) hook_(*msg, seq);
}

void WheelNode::transmit(const Outgoing& o, Tick now) {
    transport_.send(Datagram{cfg_.node_id, o.destination, encode(o.packet)}, now);
    ++stats_.datagrams_sent;
}

void WheelNode::wifi_task(TaskContext& ctx) {
    const auto now = ctx.now();
    for (auto& d : transport_.poll(cfg_.node_id, now)) {
        std::vector<TopicDelivery> delivered;
        for (const auto& o : participant_.on_datagram(d.bytes, now, delivered)) transmit(o, now);
        for (auto& td : delivered)
            if (td.topic == cfg_.command_topic) sched_.queue_send(cmd_q_, std::move(td.delivery.payload));
    }
    while (auto item = sched_.queue_try_receive(tx_q_)) transmit(std::any_cast<const Outgoing&>(*item), now);
    for (const auto& o : participant_.on_timer(now)) transmit(o, now);
}

void WheelNode::command_task() {
    while (auto item = sched_.queue_try_receive(cmd_q_)) {
        const auto& payload = std::any_cast<const Bytes&>(*item);
        if (payload.size() != 1 || payload[0] > static_cast<std::uint8_t>(Command::Start)) {
            ++stats_.bad_commands;
            continue;
        }
        ++stats_.commands;
        acquiring_ = static_cast<Command>(payload[0]) == Command::Start;
    }
}

}  // namespace wheelcomm
