#include "wheelcomm/recorder.hpp"

#include <fstream>
#include <iterator>
#include "json.hpp"
#include <sstream>

namespace wheelcomm {

void SinkPolicy::validate() const {
    if (mode == SinkMode::Streaming && queue_capacity < 1)
        throw std::invalid_argument("streaming sink needs queue_capacity >= 1");
    if (sink_delay < 0) throw std::invalid_argument("sink_delay must be >= 0");
}

Recorder::Recorder(SinkPolicy policy) : policy_(policy) { policy_.validate(); }

void Recorder::deliver(Tick now, WheelMessage msg) {
    ++delivered_;
    LogRecord rec{now, std::move(msg)};
    if (policy_.mode == SinkMode::Buffered || policy_.sink_delay == 0) {
        log_.push_back(std::move(rec));
        return;
    }
    advance(now);
    if (!in_service_) {
        in_service_ = std::move(rec);
        busy_until_ = now + policy_.sink_delay;
    } else if (queue_.size() < policy_.queue_capacity) {
        queue_.push_back(std::move(rec));
    } else {
        ++dropped_;  // newest loses
    }
}

void Recorder::advance(Tick now) {
    while (in_service_ && busy_until_ <= now) {
        log_.push_back(std::move(*in_service_));
        in_service_.reset();
        if (!queue_.empty()) {
            in_service_ = std::move(queue_.front());
            queue_.pop_front();
            busy_until_ += policy_.sink_delay;
        }
    }
}

void Recorder::finish() {
    if (in_service_) log_.push_back(std::move(*in_service_));
    in_service_.reset();
    for (auto& r : queue_) log_.push_back(std::move(r));
    queue_.clear();
}

double Recorder::drop_pct() const noexcept {
    return delivered_ == 0 ? 0.0 : 100.0 * static_cast<double>(dropped_) / static_cast<double>(delivered_);
}

RecordResult record(std::span<const LogRecord> deliveries, SinkPolicy policy) {
    Recorder rec(policy);
    for (const auto& d : deliveries) rec.deliver(d.recv_ms, d.message);
    rec.finish();
    RecordResult out;
    out.drop_count = rec.dropped();
    out.drop_pct = rec.drop_pct();
    out.log = rec.take_records();
    return out;
}

// ---- binary log -------------------------------------------------------------

Bytes encode_log(std::span<const LogRecord> records) {
    Bytes out;
    ByteWriter w(out);
    w.raw(std::string_view(kLogMagic, 4));
    w.u16(kLogVersion);
    w.u16(0);
    Bytes msg;
    for (const auto& r : records) {
        msg.clear();
        encode_message(r.message, msg);
        w.u32(static_cast<std::uint32_t>(8 + msg.size()));
        w.u64(static_cast<std::uint64_t>(r.recv_ms));
        w.raw(msg);
    }
    return out;
}

LogReadResult decode_log(ByteView bytes) {
    LogReadResult result;
    if (bytes.size() < kLogHeaderSize) {
        result.error = LogError{bytes.size(), "truncated header"};
        return result;
    }
    if (!std::equal(kLogMagic, kLogMagic + 4, bytes.begin())) {
        result.error = LogError{0, "bad magic"};
        return result;
    }
    ByteReader header(bytes.subspan(4, 4), 4);
    if (const auto version = header.u16(); version != kLogVersion) {
        result.error = LogError{4, "unsupported log version " + std::to_string(version)};
        return result;
    }

    std::size_t pos = kLogHeaderSize;
    while (pos < bytes.size()) {
        try {
            ByteReader r(bytes.subspan(pos), pos);
            const auto len = r.u32();
            if (len < 8) r.fail("record length too small");
            auto body = r.raw(len);
            ByteReader br(body, pos + 4);
            LogRecord rec;
            rec.recv_ms = static_cast<Tick>(br.u64());
            rec.message = decode_message(body.subspan(8), pos + 12);
            result.records.push_back(std::move(rec));
            pos += 4 + len;
        } catch (const DecodeError& e) {
            result.error = LogError{e.offset(), std::string("corrupt record starting at byte ") + std::to_string(pos) +
                                                    ": " + e.what()};
            break;
        }
    }
    return result;
}

void write_log(std::span<const LogRecord> records, const std::filesystem::path& path) {
    const auto bytes = encode_log(records);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

LogReadResult read_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_log(bytes);
}

std::vector<LogRecord> load_log(const std::filesystem::path& path) {
    auto result = read_log(path);
    if (result.error) throw LogFormatError(*result.error);
    return std::move(result.records);
}

// ---- JSON lines ---------------------------------------------------------------

std::vector<BlockMeta> block_metadata(std::span<const LogRecord> records) {
    std::vector<BlockMeta> out;
    for (const auto& r : records)
        for (const auto& b : r.message.blocks)
            out.push_back(BlockMeta{b.sensor, b.task_count, b.task_timestamp, b.sample_count, r.recv_ms,
                                    r.message.node_id});
    return out;
}

std::string export_jsonl(std::span<const LogRecord> records, bool include_samples) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : r.message.blocks) {
            nlohmann::json jb = {{"sensor", sensor_name(b.sensor)},
                                 {"count", b.task_count},
                                 {"ts_ms", b.task_timestamp},
                                 {"n_samples", b.sample_count}};
            if (include_samples) jb["samples"] = b.samples;
            blocks.push_back(std::move(jb));
        }
        nlohmann::json line = {{"t_ms", r.recv_ms}, {"node", r.message.node_id}, {"blocks", std::move(blocks)}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::vector<BlockMeta> import_jsonl(std::string_view text) {
    std::vector<BlockMeta> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto t = j.at("t_ms").get<Tick>();
            const auto node = j.at("node").get<std::uint32_t>();
            for (const auto& b : j.at("blocks"))
                out.push_back(BlockMeta{parse_sensor(b.at("sensor").get<std::string>()), b.at("count").get<std::uint32_t>(),
                                        b.at("ts_ms").get<Tick>(), b.at("n_samples").get<std::uint32_t>(), t, node});
        } catch (const std::exception& e) {
            throw std::runtime_error("JSONL line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace wheelcomm
