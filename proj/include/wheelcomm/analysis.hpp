#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wheelcomm/recorder.hpp"

namespace wheelcomm {

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GapStats {
    SensorId sensor{};
    std::uint64_t received = 0;
    Tick expected_gap = 0;
    double mean_gap = 0.0;
    Tick min_gap = 0;
    Tick max_gap = 0;
    double loss_pct = 0.0;
};

/// Gaps between consecutive task timestamps, blocks ordered by task_count.
/// Repeated counts are counted once. Throws AnalysisError("insufficient data")
/// with fewer than two blocks of the sensor.
GapStats gap_stats(std::span<const BlockMeta> blocks, SensorId sensor, Tick expected_gap);
GapStats gap_stats(std::span<const LogRecord> log, SensorId sensor, Tick expected_gap);

/// Sensor payload bits of blocks whose task timestamp lies in [begin, end),
/// divided by the window length, in kbit/s. Throws AnalysisError for an empty
/// window or an empty block list.
double throughput_kbps(std::span<const BlockMeta> blocks, Tick begin, Tick end);
/// Window from the first to one past the last task timestamp.
double throughput_kbps(std::span<const BlockMeta> blocks);

struct ReportRow {
    SensorId sensor{};
    Tick expected_gap = 0;
    std::uint64_t received = 0;
    std::optional<GapStats> stats;  // empty with fewer than two blocks
};

/// One row per sensor, expected gaps AM 7, IMU 10, TP 200, BSoC 1000 ms.
std::vector<ReportRow> report(std::span<const BlockMeta> blocks);
/// Header: sensor,received,expected_gap,mean_gap,min_gap,max_gap,loss_pct.
std::string report_csv(std::span<const ReportRow> rows);
std::string report_table(std::span<const ReportRow> rows);

// ---- candidate selection ------------------------------------------------------

/// A table cell: an exact value, a strict lower bound (">10") or an
/// unbounded marker ("High").
struct Quantity {
    enum class Kind { Exact, Above, Unbounded };
    Kind kind = Kind::Exact;
    double value = 0.0;

    static Quantity exact(double v) { return {Kind::Exact, v}; }
    static Quantity above(double v) { return {Kind::Above, v}; }
    static Quantity unbounded() { return {Kind::Unbounded, 0.0}; }

    /// Parses "12.5", ">10" or "High". Throws std::invalid_argument.
    static Quantity parse(std::string_view text);
    std::string str() const;

    /// Whether some value consistent with the cell is <= limit.
    bool can_be_at_most(double limit) const noexcept;
    /// Whether some value consistent with the cell is >= limit.
    bool can_be_at_least(double limit) const noexcept;

    friend bool operator==(const Quantity&, const Quantity&) = default;
};

struct TechRecord {
    std::string name;
    Quantity latency_ms;
    Quantity rate_mbps;
    Quantity range_m;
    Quantity nodes;
};

struct ProtoRecord {
    std::string name;
    Quantity latency_ms;
    std::string paradigm;
    bool needs_coordinator = false;
};

struct Requirements {
    double min_rate_mbps = 0.0;
    double max_latency_ms = 0.0;
    double min_range_m = 0.0;
    double min_nodes = 0.0;

    /// Throws std::invalid_argument for negative bounds.
    void validate() const;
};

struct ProtoRequirements {
    double max_latency_ms = 0.0;
    std::optional<std::string> paradigm;
    std::optional<bool> needs_coordinator;
};

/// Requirements of the integrated wheel sensor: 1.078332 Mbit/s, 3 ms,
/// 1 m, 5 nodes (four sensor modules plus the receiver).
Requirements wheel_requirements();

/// Names of the records meeting every bound, in input order. A cell passes
/// when any value it admits meets the bound.
std::vector<std::string> select_candidates(std::span<const TechRecord> table, const Requirements& req);
std::vector<std::string> select_candidates(std::span<const ProtoRecord> table, const ProtoRequirements& req);

/// CSV with header name,latency_ms,rate_mbps,range_m,nodes.
std::vector<TechRecord> parse_tech_csv(std::string_view text);
/// CSV with header name,latency_ms,paradigm,coordinator (Yes/No).
std::vector<ProtoRecord> parse_proto_csv(std::string_view text);
std::vector<TechRecord> load_tech_csv(const std::filesystem::path& path);
std::vector<ProtoRecord> load_proto_csv(const std::filesystem::path& path);

std::string_view builtin_tech_csv();
std::string_view builtin_proto_csv();
const std::vector<TechRecord>& builtin_tech_table();
const std::vector<ProtoRecord>& builtin_proto_table();

}  // namespace wheelcomm
