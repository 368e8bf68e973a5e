#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "wheelcomm/analysis.hpp"
#include "wheelcomm/experiment.hpp"

using namespace wheelcomm;

namespace {

std::vector<BlockMeta> blocks(SensorId id, const std::vector<std::pair<std::uint32_t, Tick>>& count_ts,
                              std::uint32_t n_samples = 1) {
    std::vector<BlockMeta> out;
    for (const auto& [c, ts] : count_ts) out.push_back(BlockMeta{id, c, ts, n_samples, ts, 1});
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<BlockMeta>& ideal_10s_blocks() {
    static const auto meta = [] {
        ExperimentConfig cfg;
        cfg.duration_s = 10;
        cfg.link = LinkParams::ideal();
        return block_metadata(run_experiment(cfg).log);
    }();
    return meta;
}

}  // namespace

TEST_CASE("gap statistics example") {
    const auto b = blocks(SensorId::AM, {{1, 0}, {2, 5}, {3, 14}, {4, 21}});
    const auto s = gap_stats(b, SensorId::AM, 7);
    CHECK(s.received == 4);
    CHECK(s.expected_gap == 7);
    CHECK(s.mean_gap == 7.0);
    CHECK(s.min_gap == 5);
    CHECK(s.max_gap == 9);
    CHECK(s.loss_pct == 0.0);
}

TEST_CASE("loss uses the count span") {
    std::vector<std::pair<std::uint32_t, Tick>> cts;
    for (std::uint32_t c = 1; c <= 1000; ++c)
        if (c != 500) cts.emplace_back(c, 7 * static_cast<Tick>(c));
    const auto s = gap_stats(blocks(SensorId::AM, cts), SensorId::AM, 7);
    CHECK(s.received == 999);
    CHECK(s.loss_pct == doctest::Approx(0.1));
    CHECK(s.max_gap == 14);
}

TEST_CASE("repeated counts and ordering") {
    const auto b = blocks(SensorId::TP, {{3, 400}, {1, 0}, {2, 200}, {2, 200}});
    const auto s = gap_stats(b, SensorId::TP, 200);
    CHECK(s.received == 3);
    CHECK(s.mean_gap == 200.0);
    CHECK(s.loss_pct == 0.0);
}

TEST_CASE("insufficient data") {
    CHECK_THROWS_WITH_AS(gap_stats(std::vector<BlockMeta>{}, SensorId::AM, 7), "insufficient data", AnalysisError);
    CHECK_THROWS_AS(gap_stats(blocks(SensorId::AM, {{1, 0}}), SensorId::AM, 7), AnalysisError);
    CHECK_THROWS_AS(gap_stats(blocks(SensorId::IMU, {{1, 0}, {2, 10}}), SensorId::AM, 7), AnalysisError);
}

TEST_CASE("telescoping and ordering properties") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::uint32_t, Tick>> cts;
        Tick ts = static_cast<Tick>(rng() % 50);
        std::uint32_t c = 1 + static_cast<std::uint32_t>(rng() % 5);
        const int n = 2 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            cts.emplace_back(c, ts);
            c += 1 + static_cast<std::uint32_t>(rng() % 3 == 0 ? rng() % 3 : 0);
            ts += 1 + static_cast<Tick>(rng() % 20);
        }
        const auto s = gap_stats(blocks(SensorId::IMU, cts), SensorId::IMU, 10);
        CHECK(s.mean_gap * static_cast<double>(s.received - 1) ==
              doctest::Approx(static_cast<double>(cts.back().second - cts.front().second)).epsilon(1e-12));
        CHECK(static_cast<double>(s.min_gap) <= s.mean_gap);
        CHECK(s.mean_gap <= static_cast<double>(s.max_gap));
        const bool gap_free = cts.back().first - cts.front().first + 1 == cts.size();
        CHECK((s.loss_pct == 0.0) == gap_free);
    }
}

TEST_CASE("gap statistics from a log") {
    const std::vector<LogRecord> log{
        LogRecord{1, WheelMessage{1, 0, {SensorBlock{SensorId::BSOC, 1, 0, 1, {1}}}}},
        LogRecord{2, WheelMessage{1, 1000, {SensorBlock{SensorId::BSOC, 2, 1000, 1, {1}}}}},
    };
    CHECK(gap_stats(log, SensorId::BSOC, 1000).mean_gap == 1000.0);
}

TEST_CASE("jitter bounds on the gaps") {
    for (Tick j : {0, 1}) {
        ExperimentConfig cfg;
        cfg.duration_s = 5;
        cfg.link = LinkParams{2, 1, 0.0, false, 0};
        cfg.jitter_ms = j;
        const auto meta = block_metadata(run_experiment(cfg).log);
        for (auto id : kAllSensors) {
            const auto expected = default_sensor_period(id);
            const auto s = gap_stats(meta, id, expected);
            CHECK(s.min_gap >= expected - 2 * j);
            CHECK(s.max_gap <= expected + 2 * j);
            CHECK(s.loss_pct == 0.0);
        }
    }
}

TEST_CASE("throughput") {
    // 1 s of AM-only blocks.
    std::vector<BlockMeta> am;
    for (std::uint32_t c = 1; c <= 143; ++c) am.push_back(BlockMeta{SensorId::AM, c, 7 * Tick(c - 1), 224, 0, 1});
    CHECK(throughput_kbps(am, 0, 1000) == doctest::Approx(1024.0).epsilon(7.168 / 1024.0));
    CHECK(throughput_kbps(am, 0, 7) == doctest::Approx(1024.0));
    CHECK_THROWS_AS(throughput_kbps(std::vector<BlockMeta>{}), AnalysisError);
    CHECK_THROWS_AS(throughput_kbps(am, 5, 5), AnalysisError);

    const auto tput = throughput_kbps(ideal_10s_blocks());
    CHECK(tput >= 1078.0);
    CHECK(tput <= 1079.0);
    // Integer oracle over [0, 10000): bits from blocks acquired in the run.
    std::uint64_t bits = 0;
    for (const auto& b : ideal_10s_blocks())
        if (b.ts_ms < 10'000) bits += default_spec(b.sensor).payload_bits(b.n_samples);
    CHECK(throughput_kbps(ideal_10s_blocks(), 0, 10'000) == doctest::Approx(static_cast<double>(bits) / 10'000.0));
}

TEST_CASE("report rows") {
    const auto rows = report(ideal_10s_blocks());
    REQUIRE(rows.size() == 4);
    const Tick expected[] = {7, 10, 200, 1000};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rows[i].sensor == kAllSensors[i]);
        CHECK(rows[i].expected_gap == expected[i]);
        REQUIRE(rows[i].stats.has_value());
        CHECK(rows[i].stats->loss_pct == 0.0);
        CHECK(rows[i].stats->mean_gap == static_cast<double>(expected[i]));
    }
    const auto csv = report_csv(rows);
    CHECK(csv.rfind("sensor,received,expected_gap,mean_gap,min_gap,max_gap,loss_pct\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(report_table(rows).find("BSoC") != std::string::npos);
}

TEST_CASE("report with only AM") {
    std::vector<BlockMeta> am;
    for (std::uint32_t c = 1; c <= 10; ++c) am.push_back(BlockMeta{SensorId::AM, c, 7 * Tick(c - 1), 224, 0, 1});
    const auto rows = report(am);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].stats.has_value());
    int blank = 0;
    for (const auto& r : rows) blank += !r.stats.has_value();
    CHECK(blank == 3);
    const auto csv = report_csv(rows);
    CHECK(csv.find("IMU,0,10,,,,\n") != std::string::npos);
    CHECK(csv.find("AM,10,7,7.000,7,7,0.000\n") != std::string::npos);
}

TEST_CASE("quantity cells") {
    CHECK(Quantity::parse("12.5") == Quantity::exact(12.5));
    CHECK(Quantity::parse(">10") == Quantity::above(10));
    CHECK(Quantity::parse(" > 1 ") == Quantity::above(1));
    CHECK(Quantity::parse("High") == Quantity::unbounded());
    CHECK_THROWS_AS(Quantity::parse(""), std::invalid_argument);
    CHECK_THROWS_AS(Quantity::parse("fast"), std::invalid_argument);
    CHECK_THROWS_AS(Quantity::parse("-1"), std::invalid_argument);
    CHECK_THROWS_AS(Quantity::parse("0"), std::invalid_argument);
    CHECK(Quantity::parse(Quantity::above(1000).str()) == Quantity::above(1000));
    CHECK(Quantity::unbounded().str() == "High");

    CHECK(Quantity::exact(3).can_be_at_most(3));
    CHECK_FALSE(Quantity::exact(3).can_be_at_most(2.9));
    CHECK(Quantity::above(1).can_be_at_most(3));
    CHECK_FALSE(Quantity::above(3).can_be_at_most(3));
    CHECK(Quantity::unbounded().can_be_at_most(1));
    CHECK(Quantity::exact(5).can_be_at_least(5));
    CHECK_FALSE(Quantity::exact(5).can_be_at_least(6));
    CHECK(Quantity::above(10).can_be_at_least(1000));
    CHECK(Quantity::unbounded().can_be_at_least(1e9));
}

TEST_CASE("technology selection") {
    const auto req = wheel_requirements();
    CHECK(req.min_rate_mbps == doctest::Approx(1.078332));
    CHECK(req.max_latency_ms == 3);
    CHECK(req.min_range_m == 1);
    CHECK(req.min_nodes == 5);
    CHECK(select_candidates(builtin_tech_table(), req) == std::vector<std::string>{"Wi-Fi", "BL", "UWB"});

    Requirements impossible = req;
    impossible.min_rate_mbps = 1e6;
    CHECK(select_candidates(builtin_tech_table(), impossible).empty());

    Requirements bad = req;
    bad.max_latency_ms = -1;
    CHECK_THROWS_AS(select_candidates(builtin_tech_table(), bad), std::invalid_argument);
}

TEST_CASE("protocol selection") {
    CHECK(select_candidates(builtin_proto_table(), ProtoRequirements{2.0, {}, {}}) == std::vector<std::string>{"DDS"});
    CHECK(select_candidates(builtin_proto_table(), ProtoRequirements{1.0, {}, {}}).empty());
    CHECK(select_candidates(builtin_proto_table(), ProtoRequirements{1000.0, "Req/Resp", {}}) ==
          std::vector<std::string>{"CoAP"});
    CHECK(select_candidates(builtin_proto_table(), ProtoRequirements{1000.0, "Pub/Sub", false}) ==
          std::vector<std::string>{"DDS"});
}

TEST_CASE("tightening requirements never adds a candidate") {
    std::mt19937_64 rng(6);
    auto is_subset = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        return std::all_of(a.begin(), a.end(), [&](const auto& x) { return std::find(b.begin(), b.end(), x) != b.end(); });
    };
    const double rates[] = {0.01, 0.1, 1, 2, 4, 100, 600, 1000};
    const double lats[] = {0.1, 1, 2, 3, 6, 20, 200, 10000};
    const double ranges[] = {1, 10, 40, 100, 150, 1000, 5000};
    const double nodes[] = {1, 5, 7, 32, 100, 1000, 100000};
    auto pick = [&](const auto& arr) { return arr[rng() % std::size(arr)]; };
    for (int i = 0; i < 500; ++i) {
        Requirements loose{pick(rates), pick(lats), pick(ranges), pick(nodes)};
        Requirements tight = loose;
        switch (rng() % 4) {
            case 0: tight.min_rate_mbps = std::max(loose.min_rate_mbps, pick(rates)); break;
            case 1: tight.max_latency_ms = std::min(loose.max_latency_ms, pick(lats)); break;
            case 2: tight.min_range_m = std::max(loose.min_range_m, pick(ranges)); break;
            default: tight.min_nodes = std::max(loose.min_nodes, pick(nodes)); break;
        }
        CHECK(is_subset(select_candidates(builtin_tech_table(), tight), select_candidates(builtin_tech_table(), loose)));
        const ProtoRequirements pl{pick(lats), {}, {}};
        const ProtoRequirements pt{std::min(pl.max_latency_ms, pick(lats)), {}, {}};
        CHECK(is_subset(select_candidates(builtin_proto_table(), pt), select_candidates(builtin_proto_table(), pl)));
    }
}

TEST_CASE("built-in tables match the data files") {
    CHECK(builtin_tech_csv() == slurp(WHEELCOMM_DATA_DIR "/comm_technologies.csv"));
    CHECK(builtin_proto_csv() == slurp(WHEELCOMM_DATA_DIR "/app_protocols.csv"));
    const auto tech = load_tech_csv(WHEELCOMM_DATA_DIR "/comm_technologies.csv");
    REQUIRE(tech.size() == 9);
    CHECK(tech[0].name == "Wi-Fi");
    CHECK(tech[0].rate_mbps == Quantity::exact(600));
    CHECK(tech[2].latency_ms == Quantity::above(1));
    CHECK(tech[2].nodes == Quantity::unbounded());
    const auto proto = load_proto_csv(WHEELCOMM_DATA_DIR "/app_protocols.csv");
    REQUIRE(proto.size() == 5);
    CHECK(proto[2].name == "DDS");
    CHECK_FALSE(proto[2].needs_coordinator);
    CHECK(proto[0].needs_coordinator);
}

TEST_CASE("CSV errors") {
    CHECK_THROWS_AS(parse_tech_csv("name,rate\nx,1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_tech_csv("name,latency_ms,rate_mbps,range_m,nodes\nx,1,2,3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_tech_csv("name,latency_ms,rate_mbps,range_m,nodes\nx,1,2,3,lots\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_proto_csv("name,latency_ms,paradigm,coordinator\nx,1,Pub/Sub,Maybe\n"),
                    std::invalid_argument);
    CHECK(parse_tech_csv("name,latency_ms,rate_mbps,range_m,nodes\n").empty());
    CHECK_THROWS(load_tech_csv("/nonexistent.csv"));
}
