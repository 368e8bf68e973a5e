#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wheelcomm/wheel_message.hpp"

namespace wheelcomm {

struct LogRecord {
    Tick recv_ms = 0;  // simulation clock, or monotonic ms since start for socket runs
    WheelMessage message;
    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

enum class SinkMode { Buffered, Streaming };

/// Buffered caches everything and flushes at the end. Streaming hands records
/// to a sink that needs sink_delay ms each, through a queue of queue_capacity
/// waiting records; arrivals that find the queue full are dropped.
struct SinkPolicy {
    SinkMode mode = SinkMode::Buffered;
    std::size_t queue_capacity = 8;
    Tick sink_delay = 0;

    void validate() const;
};

class Recorder {
public:
    explicit Recorder(SinkPolicy policy = {});

    void deliver(Tick now, WheelMessage msg);
    /// Lets the streaming sink complete every record finished by `now`.
    void advance(Tick now);
    /// End of recording: whatever is still queued reaches the log.
    void finish();

    const std::vector<LogRecord>& records() const noexcept { return log_; }
    std::vector<LogRecord> take_records() { return std::move(log_); }
    std::uint64_t delivered() const noexcept { return delivered_; }
    std::uint64_t dropped() const noexcept { return dropped_; }
    /// dropped / delivered x 100, 0 when nothing was delivered.
    double drop_pct() const noexcept;
    const SinkPolicy& policy() const noexcept { return policy_; }

private:
    SinkPolicy policy_;
    std::vector<LogRecord> log_;
    std::deque<LogRecord> queue_;
    std::optional<LogRecord> in_service_;
    Tick busy_until_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t dropped_ = 0;
};

struct RecordResult {
    std::vector<LogRecord> log;
    std::uint64_t drop_count = 0;
    double drop_pct = 0.0;
};

/// Offline replay of (arrival tick, message) pairs through a sink policy.
RecordResult record(std::span<const LogRecord> deliveries, SinkPolicy policy);

// ---- binary log -------------------------------------------------------------
//
// "WLG1" | version u16 = 1 | reserved u16 = 0 |
// records: record_len u32 | recv_ms u64 | encoded WheelMessage
// record_len counts the bytes after the length field.

inline constexpr char kLogMagic[4] = {'W', 'L', 'G', '1'};
inline constexpr std::uint16_t kLogVersion = 1;
inline constexpr std::size_t kLogHeaderSize = 8;

struct LogError {
    std::size_t offset = 0;
    std::string message;
};

class LogFormatError : public std::runtime_error {
public:
    explicit LogFormatError(const LogError& e)
        : std::runtime_error(e.message + " at byte " + std::to_string(e.offset)), offset_(e.offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Records parsed before the first problem, plus that problem if any.
struct LogReadResult {
    std::vector<LogRecord> records;
    std::optional<LogError> error;
};

Bytes encode_log(std::span<const LogRecord> records);
LogReadResult decode_log(ByteView bytes);

/// Throws std::runtime_error on I/O failure.
void write_log(std::span<const LogRecord> records, const std::filesystem::path& path);
/// Throws std::runtime_error if the file cannot be opened; format problems are reported in the result.
LogReadResult read_log(const std::filesystem::path& path);
/// read_log that throws LogFormatError on any format problem.
std::vector<LogRecord> load_log(const std::filesystem::path& path);

// ---- JSON lines ---------------------------------------------------------------

/// Per-block metadata, the unit every analysis works on.
struct BlockMeta {
    SensorId sensor{};
    std::uint32_t count = 0;
    Tick ts_ms = 0;
    std::uint32_t n_samples = 0;
    Tick recv_ms = 0;
    std::uint32_t node = 0;
    friend bool operator==(const BlockMeta&, const BlockMeta&) = default;
};

std::vector<BlockMeta> block_metadata(std::span<const LogRecord> records);

/// One object per record: {"t_ms","node","blocks":[{"sensor","count","ts_ms","n_samples"[,"samples"]}]}.
std::string export_jsonl(std::span<const LogRecord> records, bool include_samples = false);
/// Reads export_jsonl output back as block metadata. Throws std::runtime_error naming the bad line.
std::vector<BlockMeta> import_jsonl(std::string_view text);

}  // namespace wheelcomm
