#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "wheelcomm/analysis.hpp"
#include "wheelcomm/experiment.hpp"
#include "wheelcomm/recorder.hpp"
#include "wheelcomm/sensor_model.hpp"
#include "wheelcomm/wheel_message.hpp"
#include "wheelcomm/wire.hpp"

namespace py = pybind11;
using namespace wheelcomm;

namespace {

Bytes to_bytes(const py::bytes& b) {
    const std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

py::array_t<std::int32_t> batch_array(const SampleBatch& batch) {
    const auto frames = static_cast<py::ssize_t>(batch.frames());
    const auto channels = static_cast<py::ssize_t>(batch.channels);
    py::array_t<std::int32_t> out({frames, channels});
    std::copy(batch.values.begin(), batch.values.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_wheelcomm, m) {
    m.doc() = "Wheel-sensor node simulation, pub/sub transport and log analysis";

    py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
    py::register_exception<LogFormatError>(m, "LogFormatError", PyExc_ValueError);
    py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);
    py::register_exception<EncodeError>(m, "EncodeError", PyExc_ValueError);

    py::enum_<SensorId>(m, "SensorId")
        .value("AM", SensorId::AM)
        .value("IMU", SensorId::IMU)
        .value("TP", SensorId::TP)
        .value("BSOC", SensorId::BSOC);
    m.def("sensor_name", [](SensorId id) { return std::string(sensor_name(id)); });
    m.def("parse_sensor", &parse_sensor);
    m.def("default_sensor_period", &default_sensor_period);

    // ---- sensor model
    py::class_<SensorSpec>(m, "SensorSpec")
        .def(py::init<SensorId, std::uint32_t, std::uint64_t, std::uint32_t>(), py::arg("id"),
             py::arg("precision_bits"), py::arg("sample_rate_mhz"), py::arg("channels"))
        .def_property_readonly("id", &SensorSpec::id)
        .def_property_readonly("precision_bits", &SensorSpec::precision_bits)
        .def_property_readonly("sample_rate_mhz", &SensorSpec::sample_rate_mhz)
        .def_property_readonly("sample_rate_hz", &SensorSpec::sample_rate_hz)
        .def_property_readonly("channels", &SensorSpec::channels)
        .def("samples_before", &SensorSpec::samples_before)
        .def("__repr__", [](const SensorSpec& s) {
            return "SensorSpec(" + std::string(sensor_name(s.id())) + ", " + std::to_string(s.precision_bits()) +
                   " bit, " + std::to_string(s.sample_rate_mhz()) + " mHz, " + std::to_string(s.channels()) +
                   " ch)";
        });
    m.def("default_spec", &default_spec, py::return_value_policy::copy);
    m.def("default_specs", &default_specs);
    m.def("data_rate", &data_rate, "Data rate in bit/s.");
    m.def(
        "total_required_rate",
        [](const std::vector<SensorSpec>& specs) { return total_required_rate(specs); },
        py::arg("specs") = default_specs(), "Sum of sensor data rates in kbit/s.");

    py::class_<SignalConfig>(m, "SignalConfig")
        .def(py::init<>())
        .def_readwrite("seed", &SignalConfig::seed)
        .def_property(
            "wheel_speed_hz", [](const SignalConfig& c) { return c.imu.wheel_speed_hz; },
            [](SignalConfig& c, double v) { c.imu.wheel_speed_hz = v; })
        .def_property(
            "vertical_load_n", [](const SignalConfig& c) { return c.imu.vertical_load_n; },
            [](SignalConfig& c, double v) { c.imu.vertical_load_n = v; })
        .def_property(
            "pressure_bar", [](const SignalConfig& c) { return c.tp.pressure_bar; },
            [](SignalConfig& c, double v) { c.tp.pressure_bar = v; });

    m.def(
        "generate_samples",
        [](const SensorSpec& spec, const SignalConfig& cfg, Tick from_tick, Tick to_tick) {
            return batch_array(generate_samples(spec, cfg, from_tick, to_tick));
        },
        py::arg("spec"), py::arg("cfg"), py::arg("from_tick"), py::arg("to_tick"),
        "Frames acquired in [from_tick, to_tick) as an int32 array of shape (frames, channels).");
    m.def("wheel_speed_hz", &wheel_speed_hz, py::arg("speed_kmh"),
          py::arg("circumference_m") = kTireCircumferenceM);

    // ---- messages and logs
    py::class_<SensorBlock>(m, "SensorBlock")
        .def(py::init<>())
        .def_readwrite("sensor", &SensorBlock::sensor)
        .def_readwrite("task_count", &SensorBlock::task_count)
        .def_readwrite("task_timestamp", &SensorBlock::task_timestamp)
        .def_readwrite("sample_count", &SensorBlock::sample_count)
        .def_readwrite("samples", &SensorBlock::samples)
        .def(py::self == py::self);

    py::class_<WheelMessage>(m, "WheelMessage")
        .def(py::init<>())
        .def_readwrite("node_id", &WheelMessage::node_id)
        .def_readwrite("assembled_at", &WheelMessage::assembled_at)
        .def_readwrite("blocks", &WheelMessage::blocks)
        .def(py::self == py::self);
    m.def("encode_message", [](const WheelMessage& msg) { return from_bytes(encode_message(msg)); });
    m.def("decode_message", [](const py::bytes& b) { return decode_message(to_bytes(b)); });

    py::class_<LogRecord>(m, "LogRecord")
        .def(py::init<>())
        .def(py::init([](Tick recv_ms, WheelMessage msg) { return LogRecord{recv_ms, std::move(msg)}; }),
             py::arg("recv_ms"), py::arg("message"))
        .def_readwrite("recv_ms", &LogRecord::recv_ms)
        .def_readwrite("message", &LogRecord::message)
        .def(py::self == py::self);

    m.def("encode_log", [](const std::vector<LogRecord>& log) { return from_bytes(encode_log(log)); });
    m.def(
        "decode_log",
        [](const py::bytes& b) {
            auto r = decode_log(to_bytes(b));
            if (r.error) throw LogFormatError(*r.error);
            return r.records;
        },
        "Raises LogFormatError on any format problem.");
    m.def("write_log", [](const std::vector<LogRecord>& log, const std::filesystem::path& path) {
        write_log(log, path);
    });
    m.def("load_log", &load_log);

    py::class_<BlockMeta>(m, "BlockMeta")
        .def(py::init<>())
        .def_readwrite("sensor", &BlockMeta::sensor)
        .def_readwrite("count", &BlockMeta::count)
        .def_readwrite("ts_ms", &BlockMeta::ts_ms)
        .def_readwrite("n_samples", &BlockMeta::n_samples)
        .def_readwrite("recv_ms", &BlockMeta::recv_ms)
        .def_readwrite("node", &BlockMeta::node)
        .def(py::self == py::self)
        .def("__repr__", [](const BlockMeta& b) {
            return "BlockMeta(" + std::string(sensor_name(b.sensor)) + ", count=" + std::to_string(b.count) +
                   ", ts_ms=" + std::to_string(b.ts_ms) + ")";
        });
    m.def("block_metadata", [](const std::vector<LogRecord>& log) { return block_metadata(log); });
    m.def(
        "export_jsonl",
        [](const std::vector<LogRecord>& log, bool include_samples) { return export_jsonl(log, include_samples); },
        py::arg("log"), py::arg("include_samples") = false);
    m.def("import_jsonl", [](const std::string& text) { return import_jsonl(text); });

    py::enum_<SinkMode>(m, "SinkMode").value("BUFFERED", SinkMode::Buffered).value("STREAMING", SinkMode::Streaming);
    py::class_<SinkPolicy>(m, "SinkPolicy")
        .def(py::init([](SinkMode mode, std::size_t capacity, Tick delay) {
                 SinkPolicy p{mode, capacity, delay};
                 p.validate();
                 return p;
             }),
             py::arg("mode") = SinkMode::Buffered, py::arg("queue_capacity") = 8, py::arg("sink_delay") = 0)
        .def_readwrite("mode", &SinkPolicy::mode)
        .def_readwrite("queue_capacity", &SinkPolicy::queue_capacity)
        .def_readwrite("sink_delay", &SinkPolicy::sink_delay);

    py::class_<RecordResult>(m, "RecordResult")
        .def_readonly("log", &RecordResult::log)
        .def_readonly("drop_count", &RecordResult::drop_count)
        .def_readonly("drop_pct", &RecordResult::drop_pct);
    m.def("record", [](const std::vector<LogRecord>& arrivals, const SinkPolicy& policy) {
        return record(arrivals, policy);
    });

    // ---- experiment
    py::class_<LinkParams>(m, "LinkParams")
        .def(py::init([](Tick latency, Tick jitter, double drop, bool reorder, std::uint64_t bw) {
                 LinkParams l{latency, jitter, drop, reorder, bw};
                 l.validate();
                 return l;
             }),
             py::arg("base_latency") = 2, py::arg("jitter") = 1, py::arg("drop_prob") = 0.001,
             py::arg("allow_reorder") = false, py::arg("bandwidth_bps") = 0)
        .def_static("ideal", &LinkParams::ideal)
        .def_readwrite("base_latency", &LinkParams::base_latency)
        .def_readwrite("jitter", &LinkParams::jitter)
        .def_readwrite("drop_prob", &LinkParams::drop_prob)
        .def_readwrite("allow_reorder", &LinkParams::allow_reorder)
        .def_readwrite("bandwidth_bps", &LinkParams::bandwidth_bps);

    py::enum_<Reliability>(m, "Reliability")
        .value("BEST_EFFORT", Reliability::BestEffort)
        .value("RELIABLE", Reliability::Reliable);
    py::class_<QosPolicy>(m, "QosPolicy")
        .def(py::init([](Reliability r, std::size_t depth, Tick hb) {
                 QosPolicy q{r, depth, hb};
                 q.validate();
                 return q;
             }),
             py::arg("reliability") = Reliability::Reliable, py::arg("history_depth") = 128,
             py::arg("heartbeat_period") = 50)
        .def_readwrite("reliability", &QosPolicy::reliability)
        .def_readwrite("history_depth", &QosPolicy::history_depth)
        .def_readwrite("heartbeat_period", &QosPolicy::heartbeat_period);

    py::class_<ChannelStats>(m, "ChannelStats")
        .def_readonly("sent", &ChannelStats::sent)
        .def_readonly("delivered", &ChannelStats::delivered)
        .def_readonly("dropped", &ChannelStats::dropped)
        .def_readonly("in_flight", &ChannelStats::in_flight);

    py::class_<NodeStats>(m, "NodeStats")
        .def_readonly("blocks_produced", &NodeStats::blocks_produced)
        .def_readonly("queue_overflow", &NodeStats::queue_overflow)
        .def_readonly("messages_published", &NodeStats::messages_published)
        .def_readonly("tx_overflow", &NodeStats::tx_overflow)
        .def_readonly("datagrams_sent", &NodeStats::datagrams_sent);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("duration_s", &ExperimentConfig::duration_s)
        .def_readwrite("link", &ExperimentConfig::link)
        .def_readwrite("qos", &ExperimentConfig::qos)
        .def_readwrite("signal", &ExperimentConfig::signal)
        .def_readwrite("jitter_ms", &ExperimentConfig::jitter_ms)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("recorder", &ExperimentConfig::recorder)
        .def_readwrite("drain_ms", &ExperimentConfig::drain_ms)
        .def_readwrite("announce_period", &ExperimentConfig::announce_period)
        .def("validate", &ExperimentConfig::validate);
    m.def("parse_config", [](const std::string& text) { return parse_config(text); });
    m.def("load_config", &load_config);

    py::class_<ExperimentResult>(m, "ExperimentResult")
        .def_readonly("log", &ExperimentResult::log)
        .def_readonly("node", &ExperimentResult::node)
        .def_readonly("channel", &ExperimentResult::channel)
        .def_readonly("messages_delivered", &ExperimentResult::messages_delivered)
        .def_readonly("reader_lost", &ExperimentResult::reader_lost)
        .def_readonly("recorder_dropped", &ExperimentResult::recorder_dropped)
        .def_readonly("bad_payloads", &ExperimentResult::bad_payloads)
        .def_readonly("retransmissions", &ExperimentResult::retransmissions)
        .def_readonly("simulated_ms", &ExperimentResult::simulated_ms)
        .def("summary", [](const ExperimentResult& r) { return summarize(r); });
    m.def("run_experiment", &run_experiment, py::arg("config") = ExperimentConfig{},
          py::call_guard<py::gil_scoped_release>());

    // ---- analysis
    py::class_<GapStats>(m, "GapStats")
        .def_readonly("sensor", &GapStats::sensor)
        .def_readonly("received", &GapStats::received)
        .def_readonly("expected_gap", &GapStats::expected_gap)
        .def_readonly("mean_gap", &GapStats::mean_gap)
        .def_readonly("min_gap", &GapStats::min_gap)
        .def_readonly("max_gap", &GapStats::max_gap)
        .def_readonly("loss_pct", &GapStats::loss_pct);
    m.def(
        "gap_stats",
        [](const std::vector<BlockMeta>& blocks, SensorId sensor, std::optional<Tick> expected_gap) {
            return gap_stats(blocks, sensor, expected_gap.value_or(default_sensor_period(sensor)));
        },
        py::arg("blocks"), py::arg("sensor"), py::arg("expected_gap") = py::none());
    m.def(
        "throughput_kbps",
        [](const std::vector<BlockMeta>& blocks, std::optional<Tick> begin, std::optional<Tick> end) {
            if (begin.has_value() != end.has_value())
                throw std::invalid_argument("give both begin and end or neither");
            return begin ? throughput_kbps(blocks, *begin, *end) : throughput_kbps(blocks);
        },
        py::arg("blocks"), py::arg("begin") = py::none(), py::arg("end") = py::none());

    py::class_<ReportRow>(m, "ReportRow")
        .def_readonly("sensor", &ReportRow::sensor)
        .def_readonly("expected_gap", &ReportRow::expected_gap)
        .def_readonly("received", &ReportRow::received)
        .def_readonly("stats", &ReportRow::stats);
    m.def("report", [](const std::vector<BlockMeta>& blocks) { return report(blocks); });
    m.def("report_csv", [](const std::vector<ReportRow>& rows) { return report_csv(rows); });
    m.def("report_table", [](const std::vector<ReportRow>& rows) { return report_table(rows); });

    py::class_<Requirements>(m, "Requirements")
        .def(py::init([](double rate, double latency, double range, double nodes) {
                 Requirements r{rate, latency, range, nodes};
                 r.validate();
                 return r;
             }),
             py::arg("min_rate_mbps"), py::arg("max_latency_ms"), py::arg("min_range_m"), py::arg("min_nodes"))
        .def_readwrite("min_rate_mbps", &Requirements::min_rate_mbps)
        .def_readwrite("max_latency_ms", &Requirements::max_latency_ms)
        .def_readwrite("min_range_m", &Requirements::min_range_m)
        .def_readwrite("min_nodes", &Requirements::min_nodes);
    m.def("wheel_requirements", &wheel_requirements);
    m.def(
        "select_technologies",
        [](std::optional<Requirements> req, std::optional<std::string> csv) {
            const auto table = csv ? parse_tech_csv(*csv) : builtin_tech_table();
            return select_candidates(table, req.value_or(wheel_requirements()));
        },
        py::arg("requirements") = py::none(), py::arg("table_csv") = py::none(),
        "Technologies meeting every bound; defaults to the wheel requirements and the built-in table.");
    m.def(
        "select_protocols",
        [](double max_latency_ms, std::optional<std::string> paradigm, std::optional<bool> needs_coordinator,
           std::optional<std::string> csv) {
            const auto table = csv ? parse_proto_csv(*csv) : builtin_proto_table();
            return select_candidates(table, ProtoRequirements{max_latency_ms, paradigm, needs_coordinator});
        },
        py::arg("max_latency_ms"), py::arg("paradigm") = py::none(), py::arg("needs_coordinator") = py::none(),
        py::arg("table_csv") = py::none());
    m.def("builtin_tech_csv", [] { return std::string(builtin_tech_csv()); });
    m.def("builtin_proto_csv", [] { return std::string(builtin_proto_csv()); });

    // ---- wire codec
    py::enum_<PacketKind>(m, "PacketKind")
        .value("DATA", PacketKind::Data)
        .value("HEARTBEAT", PacketKind::Heartbeat)
        .value("ACKNACK", PacketKind::AckNack)
        .value("ANNOUNCE", PacketKind::Announce)
        .value("GAP", PacketKind::Gap);

    py::class_<DataBody>(m, "DataBody")
        .def(py::init([](std::uint64_t seq, const py::bytes& payload) { return DataBody{seq, to_bytes(payload)}; }),
             py::arg("seq"), py::arg("payload"))
        .def_readwrite("seq", &DataBody::seq)
        .def_property(
            "payload", [](const DataBody& d) { return from_bytes(d.payload); },
            [](DataBody& d, const py::bytes& b) { d.payload = to_bytes(b); })
        .def(py::self == py::self);
    py::class_<HeartbeatBody>(m, "HeartbeatBody")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("first"), py::arg("last"))
        .def_readwrite("first", &HeartbeatBody::first)
        .def_readwrite("last", &HeartbeatBody::last)
        .def(py::self == py::self);
    py::class_<AckNackBody>(m, "AckNackBody")
        .def(py::init<std::uint64_t, std::vector<std::uint64_t>>(), py::arg("ack_floor"),
             py::arg("missing") = std::vector<std::uint64_t>{})
        .def_readwrite("ack_floor", &AckNackBody::ack_floor)
        .def_readwrite("missing", &AckNackBody::missing)
        .def(py::self == py::self);
    py::class_<AnnounceBody>(m, "AnnounceBody")
        .def(py::init<std::uint32_t, std::vector<std::string>>(), py::arg("node_id"), py::arg("topics"))
        .def_readwrite("node_id", &AnnounceBody::node_id)
        .def_readwrite("topics", &AnnounceBody::topics)
        .def(py::self == py::self);
    py::class_<GapBody>(m, "GapBody")
        .def(py::init<std::vector<std::uint64_t>>(), py::arg("seqs"))
        .def_readwrite("seqs", &GapBody::seqs)
        .def(py::self == py::self);

    py::class_<WirePacket>(m, "WirePacket")
        .def(py::init([](std::uint32_t sender, std::string topic, PacketBody body) {
                 return WirePacket{sender, std::move(topic), std::move(body)};
             }),
             py::arg("sender_id"), py::arg("topic"), py::arg("body"))
        .def_readwrite("sender_id", &WirePacket::sender_id)
        .def_readwrite("topic", &WirePacket::topic)
        .def_readwrite("body", &WirePacket::body)
        .def_property_readonly("kind", &WirePacket::kind)
        .def(py::self == py::self);
    m.def("encode_packet", [](const WirePacket& p) { return from_bytes(encode(p)); });
    m.def("decode_packet", [](const py::bytes& b) { return decode(to_bytes(b)); });
}
