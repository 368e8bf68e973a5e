#include "wheelcomm/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"

namespace wheelcomm {

using nlohmann::json;

double wheel_speed_hz(double speed_kmh, double circumference_m) {
    if (circumference_m <= 0) throw std::invalid_argument("circumference must be > 0");
    return speed_kmh / 3.6 / circumference_m;
}

void ExperimentConfig::validate() const {
    if (!(duration_s > 0)) throw std::invalid_argument("duration_s must be > 0");
    link.validate();
    qos.validate();
    recorder.validate();
    if (jitter_ms < 0) throw std::invalid_argument("jitter_ms must be >= 0");
    if (drain_ms < 0) throw std::invalid_argument("drain_ms must be >= 0");
    if (announce_period < 1) throw std::invalid_argument("announce_ms must be >= 1");
    if (scenario && !(scenario->load_n >= 0 && scenario->pressure_bar >= 0 && scenario->speed_kmh >= 0))
        throw std::invalid_argument("scenario values must be >= 0");
}

Tick ExperimentConfig::duration_ms() const { return static_cast<Tick>(std::llround(duration_s * 1000.0)); }

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw std::invalid_argument(std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("unknown key '" + std::string(where) + (where.empty() ? "" : ".") + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out, std::string_view where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument("bad value for '" + std::string(where) + (where.empty() ? "" : ".") + key +
                                    "': " + e.what());
    }
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    check_keys(j, "", {"duration_s", "link", "qos", "signal", "jitter_ms", "seed", "scenario", "recorder",
                       "drain_ms", "tasks", "announce_ms"});
    read(j, "duration_s", cfg.duration_s, "");
    read(j, "jitter_ms", cfg.jitter_ms, "");
    read(j, "seed", cfg.seed, "");
    read(j, "drain_ms", cfg.drain_ms, "");
    read(j, "announce_ms", cfg.announce_period, "");

    if (j.contains("link")) {
        const auto& l = j["link"];
        check_keys(l, "link", {"latency_ms", "jitter_ms", "drop_prob", "reorder", "bandwidth_bps"});
        read(l, "latency_ms", cfg.link.base_latency, "link");
        read(l, "jitter_ms", cfg.link.jitter, "link");
        read(l, "drop_prob", cfg.link.drop_prob, "link");
        read(l, "reorder", cfg.link.allow_reorder, "link");
        read(l, "bandwidth_bps", cfg.link.bandwidth_bps, "link");
    }
    if (j.contains("qos")) {
        const auto& q = j["qos"];
        check_keys(q, "qos", {"reliability", "history_depth", "heartbeat_ms"});
        std::string rel = "reliable";
        read(q, "reliability", rel, "qos");
        if (rel == "reliable")
            cfg.qos.reliability = Reliability::Reliable;
        else if (rel == "best_effort")
            cfg.qos.reliability = Reliability::BestEffort;
        else
            throw std::invalid_argument("qos.reliability must be 'reliable' or 'best_effort'");
        read(q, "history_depth", cfg.qos.history_depth, "qos");
        read(q, "heartbeat_ms", cfg.qos.heartbeat_period, "qos");
    }
    if (j.contains("signal")) {
        const auto& s = j["signal"];
        check_keys(s, "signal", {"seed", "am", "imu", "tp", "bsoc"});
        read(s, "seed", cfg.signal.seed, "signal");
        if (s.contains("am")) {
            check_keys(s["am"], "signal.am", {"tone_hz", "amplitude", "noise_floor"});
            read(s["am"], "tone_hz", cfg.signal.am.tone_hz, "signal.am");
            read(s["am"], "amplitude", cfg.signal.am.amplitude, "signal.am");
            read(s["am"], "noise_floor", cfg.signal.am.noise_floor, "signal.am");
        }
        if (s.contains("imu")) {
            check_keys(s["imu"], "signal.imu", {"wheel_speed_hz", "vertical_load_n"});
            read(s["imu"], "wheel_speed_hz", cfg.signal.imu.wheel_speed_hz, "signal.imu");
            read(s["imu"], "vertical_load_n", cfg.signal.imu.vertical_load_n, "signal.imu");
        }
        if (s.contains("tp")) {
            check_keys(s["tp"], "signal.tp", {"pressure_bar", "temp_c"});
            read(s["tp"], "pressure_bar", cfg.signal.tp.pressure_bar, "signal.tp");
            read(s["tp"], "temp_c", cfg.signal.tp.temp_c, "signal.tp");
        }
        if (s.contains("bsoc")) {
            check_keys(s["bsoc"], "signal.bsoc", {"start_mv", "drain_mv_per_s"});
            read(s["bsoc"], "start_mv", cfg.signal.bsoc.start_mv, "signal.bsoc");
            read(s["bsoc"], "drain_mv_per_s", cfg.signal.bsoc.drain_mv_per_s, "signal.bsoc");
        }
    }
    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        check_keys(s, "scenario", {"label", "load_n", "pressure_bar", "speed_kmh"});
        Scenario sc;
        read(s, "label", sc.label, "scenario");
        read(s, "load_n", sc.load_n, "scenario");
        read(s, "pressure_bar", sc.pressure_bar, "scenario");
        read(s, "speed_kmh", sc.speed_kmh, "scenario");
        cfg.scenario = sc;
    }
    if (j.contains("recorder")) {
        const auto& r = j["recorder"];
        check_keys(r, "recorder", {"mode", "queue_capacity", "sink_delay_ms"});
        std::string mode = "buffered";
        read(r, "mode", mode, "recorder");
        if (mode == "buffered")
            cfg.recorder.mode = SinkMode::Buffered;
        else if (mode == "streaming")
            cfg.recorder.mode = SinkMode::Streaming;
        else
            throw std::invalid_argument("recorder.mode must be 'buffered' or 'streaming'");
        read(r, "queue_capacity", cfg.recorder.queue_capacity, "recorder");
        read(r, "sink_delay_ms", cfg.recorder.sink_delay, "recorder");
    }
    if (j.contains("tasks")) {
        if (!j["tasks"].is_array()) throw std::invalid_argument("tasks must be an array");
        cfg.tasks.clear();
        for (const auto& t : j["tasks"]) {
            check_keys(t, "tasks[]", {"name", "core", "priority", "period_ms", "phase_ms"});
            TaskTableEntry row;
            read(t, "name", row.name, "tasks[]");
            read(t, "core", row.core, "tasks[]");
            read(t, "priority", row.priority, "tasks[]");
            read(t, "period_ms", row.period, "tasks[]");
            read(t, "phase_ms", row.phase, "tasks[]");
            cfg.tasks.push_back(std::move(row));
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

namespace {

void send_all(SimChannel& channel, std::uint32_t source, const std::vector<Outgoing>& out, Tick now) {
    for (const auto& o : out) channel.send(Datagram{source, o.destination, encode(o.packet)}, now);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();

    NodeConfig node_cfg;
    node_cfg.signal = cfg.signal;
    if (cfg.scenario) {
        node_cfg.signal.imu.vertical_load_n = cfg.scenario->load_n;
        node_cfg.signal.imu.wheel_speed_hz = wheel_speed_hz(cfg.scenario->speed_kmh);
        node_cfg.signal.tp.pressure_bar = cfg.scenario->pressure_bar;
    }
    node_cfg.qos = cfg.qos;
    node_cfg.jitter = cfg.jitter_ms;
    node_cfg.jitter_seed = mix64(cfg.seed, 2);
    node_cfg.tasks = cfg.tasks;
    node_cfg.announce_period = cfg.announce_period;

    SimChannel channel(cfg.link, mix64(cfg.seed, 1));
    channel.attach(node_cfg.node_id);
    channel.attach(kRecorderId);

    WheelNode node(node_cfg, channel);
    Participant rx(kRecorderId, cfg.announce_period);
    auto& reader = rx.create_reader(node_cfg.topic, cfg.qos.reliability);
    Recorder recorder(cfg.recorder);

    ExperimentResult result;
    const Tick duration = cfg.duration_ms();
    const Tick end = duration + cfg.drain_ms;
    for (Tick t = 0; t < end; ++t) {
        for (auto& d : channel.poll(kRecorderId, t)) {
            std::vector<TopicDelivery> delivered;
            send_all(channel, kRecorderId, rx.on_datagram(d.bytes, t, delivered), t);
            for (auto& td : delivered) {
                try {
                    recorder.deliver(t, decode_message(td.delivery.payload));
                } catch (const DecodeError&) {
                    ++result.bad_payloads;
                }
            }
        }
        send_all(channel, kRecorderId, rx.on_timer(t), t);
        if (t == duration) node.set_acquiring(false);
        node.step();
        recorder.advance(t);
    }
    recorder.finish();

    result.node = node.stats();
    result.channel = channel.stats();
    result.messages_delivered = recorder.delivered();
    result.reader_lost = reader.lost_count();
    result.recorder_dropped = recorder.dropped();
    result.retransmissions = node.participant().writer(node_cfg.topic)->retransmissions();
    result.simulated_ms = end;
    result.log = recorder.take_records();
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::string summarize(const ExperimentResult& r) {
    std::ostringstream out;
    out << "simulated:          " << r.simulated_ms << " ms (" << r.wall_ms << " ms wall)\n";
    out << "messages published: " << r.node.messages_published << "\n";
    out << "messages received:  " << r.messages_delivered << "\n";
    out << "messages logged:    " << r.log.size() << "\n";
    out << "reader lost:        " << r.reader_lost << "\n";
    out << "recorder dropped:   " << r.recorder_dropped << "\n";
    out << "retransmissions:    " << r.retransmissions << "\n";
    out << "datagrams sent:     " << r.channel.sent << " (dropped " << r.channel.dropped << ")\n";
    out << "blocks produced:   ";
    for (int i = 0; i < kSensorCount; ++i)
        out << " " << sensor_name(kAllSensors[i]) << "=" << r.node.blocks_produced[i];
    out << "\n";
    return out.str();
}

}  // namespace wheelcomm
