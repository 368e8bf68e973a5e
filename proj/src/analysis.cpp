#include "wheelcomm/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "wheelcomm/wheel_node.hpp"

namespace wheelcomm {

GapStats gap_stats(std::span<const BlockMeta> blocks, SensorId sensor, Tick expected_gap) {
    std::map<std::uint32_t, Tick> by_count;
    for (const auto& b : blocks)
        if (b.sensor == sensor) by_count.emplace(b.count, b.ts_ms);
    if (by_count.size() < 2) throw AnalysisError("insufficient data");

    GapStats s;
    s.sensor = sensor;
    s.received = by_count.size();
    s.expected_gap = expected_gap;
    s.min_gap = std::numeric_limits<Tick>::max();
    s.max_gap = std::numeric_limits<Tick>::min();
    Tick prev = by_count.begin()->second;
    for (auto it = std::next(by_count.begin()); it != by_count.end(); ++it) {
        const Tick gap = it->second - prev;
        s.min_gap = std::min(s.min_gap, gap);
        s.max_gap = std::max(s.max_gap, gap);
        prev = it->second;
    }
    const Tick first_ts = by_count.begin()->second;
    const Tick last_ts = by_count.rbegin()->second;
    s.mean_gap = static_cast<double>(last_ts - first_ts) / static_cast<double>(s.received - 1);

    const auto span = static_cast<double>(by_count.rbegin()->first) - by_count.begin()->first + 1;
    s.loss_pct = (span - static_cast<double>(s.received)) / span * 100.0;
    return s;
}

GapStats gap_stats(std::span<const LogRecord> log, SensorId sensor, Tick expected_gap) {
    const auto meta = block_metadata(log);
    return gap_stats(meta, sensor, expected_gap);
}

double throughput_kbps(std::span<const BlockMeta> blocks, Tick begin, Tick end) {
    if (end <= begin) throw AnalysisError("empty window");
    if (blocks.empty()) throw AnalysisError("no blocks");
    std::uint64_t bits = 0;
    for (const auto& b : blocks)
        if (b.ts_ms >= begin && b.ts_ms < end) bits += default_spec(b.sensor).payload_bits(b.n_samples);
    return static_cast<double>(bits) / static_cast<double>(end - begin);  // bit/ms == kbit/s
}

double throughput_kbps(std::span<const BlockMeta> blocks) {
    if (blocks.empty()) throw AnalysisError("no blocks");
    const auto [lo, hi] = std::minmax_element(blocks.begin(), blocks.end(),
                                              [](const auto& a, const auto& b) { return a.ts_ms < b.ts_ms; });
    return throughput_kbps(blocks, lo->ts_ms, hi->ts_ms + 1);
}

std::vector<ReportRow> report(std::span<const BlockMeta> blocks) {
    std::vector<ReportRow> rows;
    for (auto id : kAllSensors) {
        ReportRow row{id, default_sensor_period(id), 0, std::nullopt};
        std::set<std::uint32_t> counts;
        for (const auto& b : blocks)
            if (b.sensor == id) counts.insert(b.count);
        row.received = counts.size();
        if (row.received >= 2) row.stats = gap_stats(blocks, id, row.expected_gap);
        rows.push_back(row);
    }
    return rows;
}

std::string report_csv(std::span<const ReportRow> rows) {
    std::ostringstream out;
    out << "sensor,received,expected_gap,mean_gap,min_gap,max_gap,loss_pct\n";
    out << std::fixed;
    for (const auto& r : rows) {
        out << sensor_name(r.sensor) << ',' << r.received << ',' << r.expected_gap << ',';
        if (r.stats)
            out << std::setprecision(3) << r.stats->mean_gap << ',' << r.stats->min_gap << ',' << r.stats->max_gap
                << ',' << r.stats->loss_pct;
        else
            out << ",,,";
        out << '\n';
    }
    return out.str();
}

std::string report_table(std::span<const ReportRow> rows) {
    std::ostringstream out;
    out << std::left << std::setw(8) << "Sensor" << std::right << std::setw(10) << "Received" << std::setw(10)
        << "Expected" << std::setw(10) << "Mean" << std::setw(8) << "Min" << std::setw(8) << "Max" << std::setw(10)
        << "Loss %" << '\n';
    out << std::fixed << std::setprecision(3);
    for (const auto& r : rows) {
        out << std::left << std::setw(8) << sensor_name(r.sensor) << std::right << std::setw(10) << r.received
            << std::setw(10) << r.expected_gap;
        if (r.stats)
            out << std::setw(10) << r.stats->mean_gap << std::setw(8) << r.stats->min_gap << std::setw(8)
                << r.stats->max_gap << std::setw(10) << r.stats->loss_pct;
        else
            out << std::setw(10) << "-" << std::setw(8) << "-" << std::setw(8) << "-" << std::setw(10) << "-";
        out << '\n';
    }
    return out.str();
}

// ---- candidate selection ------------------------------------------------------

namespace {

double parse_number(std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::vector<std::string>> csv_rows(std::string_view text, std::string_view header, std::size_t columns) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto trimmed = trim(line);
        if (trimmed.empty()) continue;
        if (!seen_header) {
            if (trimmed != header)
                throw std::invalid_argument("expected CSV header '" + std::string(header) + "'");
            seen_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::string_view rest = trimmed;
        while (true) {
            const auto comma = rest.find(',');
            cells.emplace_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != columns)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                                        " columns");
        rows.push_back(std::move(cells));
    }
    if (!seen_header) throw std::invalid_argument("empty CSV table");
    return rows;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Quantity Quantity::parse(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("empty table cell");
    if (text == "High") return unbounded();
    Quantity q = text.front() == '>' ? above(parse_number(trim(text.substr(1)))) : exact(parse_number(text));
    if (!(q.value > 0)) throw std::invalid_argument("table values must be > 0: '" + std::string(text) + "'");
    return q;
}

std::string Quantity::str() const {
    if (kind == Kind::Unbounded) return "High";
    std::ostringstream out;
    out << (kind == Kind::Above ? ">" : "") << value;
    return out.str();
}

bool Quantity::can_be_at_most(double limit) const noexcept {
    switch (kind) {
        case Kind::Exact: return value <= limit;
        case Kind::Above: return value < limit;
        case Kind::Unbounded: return true;
    }
    return false;
}

bool Quantity::can_be_at_least(double limit) const noexcept {
    return kind != Kind::Exact || value >= limit;
}

void Requirements::validate() const {
    if (min_rate_mbps < 0 || max_latency_ms < 0 || min_range_m < 0 || min_nodes < 0)
        throw std::invalid_argument("requirements must be >= 0");
}

Requirements wheel_requirements() {
    return Requirements{total_required_rate(default_specs()) / 1000.0, 3.0, 1.0, 5.0};
}

std::vector<std::string> select_candidates(std::span<const TechRecord> table, const Requirements& req) {
    req.validate();
    std::vector<std::string> out;
    for (const auto& t : table)
        if (t.rate_mbps.can_be_at_least(req.min_rate_mbps) && t.latency_ms.can_be_at_most(req.max_latency_ms) &&
            t.range_m.can_be_at_least(req.min_range_m) && t.nodes.can_be_at_least(req.min_nodes))
            out.push_back(t.name);
    return out;
}

std::vector<std::string> select_candidates(std::span<const ProtoRecord> table, const ProtoRequirements& req) {
    if (req.max_latency_ms < 0) throw std::invalid_argument("requirements must be >= 0");
    std::vector<std::string> out;
    for (const auto& p : table) {
        if (!p.latency_ms.can_be_at_most(req.max_latency_ms)) continue;
        if (req.paradigm && p.paradigm != *req.paradigm) continue;
        if (req.needs_coordinator && p.needs_coordinator != *req.needs_coordinator) continue;
        out.push_back(p.name);
    }
    return out;
}

std::vector<TechRecord> parse_tech_csv(std::string_view text) {
    std::vector<TechRecord> out;
    for (auto& c : csv_rows(text, "name,latency_ms,rate_mbps,range_m,nodes", 5))
        out.push_back(TechRecord{c[0], Quantity::parse(c[1]), Quantity::parse(c[2]), Quantity::parse(c[3]),
                                 Quantity::parse(c[4])});
    return out;
}

std::vector<ProtoRecord> parse_proto_csv(std::string_view text) {
    std::vector<ProtoRecord> out;
    for (auto& c : csv_rows(text, "name,latency_ms,paradigm,coordinator", 4)) {
        if (c[3] != "Yes" && c[3] != "No") throw std::invalid_argument("coordinator must be Yes or No");
        out.push_back(ProtoRecord{c[0], Quantity::parse(c[1]), c[2], c[3] == "Yes"});
    }
    return out;
}

std::vector<TechRecord> load_tech_csv(const std::filesystem::path& path) { return parse_tech_csv(read_file(path)); }

std::vector<ProtoRecord> load_proto_csv(const std::filesystem::path& path) {
    return parse_proto_csv(read_file(path));
}

}  // namespace wheelcomm
