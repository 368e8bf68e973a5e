#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "wheelcomm/analysis.hpp"
#include "wheelcomm/experiment.hpp"
#include "wheelcomm/recorder.hpp"

using namespace wheelcomm;

namespace {

int cmd_run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
    auto cfg = load_config(config);
    if (seed) cfg.seed = *seed;
    const auto result = run_experiment(cfg);
    write_log(result.log, out);
    std::cout << summarize(result);
    const auto rows = report(block_metadata(result.log));
    std::cout << '\n' << report_table(rows);
    std::cout << "log written to " << out << '\n';
    return 0;
}

int cmd_analyze(const std::string& in, const std::string& csv) {
    const auto log = read_log(in);
    if (log.error)
        std::cerr << "warning: " << log.error->message << " (offset " << log.error->offset << "); analysing "
                  << log.records.size() << " intact records\n";
    const auto blocks = block_metadata(log.records);
    const auto rows = report(blocks);
    std::cout << report_table(rows);
    if (!blocks.empty()) std::cout << "throughput: " << throughput_kbps(blocks) << " kbit/s\n";
    if (!csv.empty()) {
        std::ofstream f(csv);
        if (!f) throw std::runtime_error("cannot open '" + csv + "' for writing");
        f << report_csv(rows);
    }
    return log.error ? 2 : 0;
}

int cmd_export(const std::string& in, const std::string& out, bool samples) {
    const auto records = load_log(in);
    const auto text = export_jsonl(records, samples);
    if (out == "-") {
        std::cout << text;
        return 0;
    }
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
    f << text;
    return 0;
}

void print_names(const std::vector<std::string>& names) {
    for (const auto& n : names) std::cout << n << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrated wheel sensor communication simulator"};
    app.require_subcommand(1);

    std::string config, out, in, csv, jsonl = "-", table = "builtin";
    std::optional<std::uint64_t> seed;
    bool samples = false;
    const auto defaults = wheel_requirements();
    Requirements req = defaults;
    ProtoRequirements preq{2.0, std::nullopt, std::nullopt};

    auto* run = app.add_subcommand("run", "Simulate node, channel and recorder and write a log");
    run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output log file")->required();
    run->add_option("--seed", seed, "Override the config seed");

    auto* analyze = app.add_subcommand("analyze", "Gap, loss and throughput report for a log");
    analyze->add_option("--in", in, "Log file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--csv", csv, "Also write the report as CSV");

    auto* exp = app.add_subcommand("export", "Convert a log to JSON lines");
    exp->add_option("--in", in, "Log file")->required()->check(CLI::ExistingFile);
    exp->add_option("--jsonl", jsonl, "Output file, - for stdout")->capture_default_str();
    exp->add_flag("--samples", samples, "Include sample values");

    auto* tech = app.add_subcommand("select-tech", "Filter communication technologies by requirements");
    tech->add_option("--min-rate", req.min_rate_mbps, "Mbit/s")->capture_default_str();
    tech->add_option("--max-latency", req.max_latency_ms, "ms")->capture_default_str();
    tech->add_option("--min-range", req.min_range_m, "m")->capture_default_str();
    tech->add_option("--min-nodes", req.min_nodes, "count")->capture_default_str();
    tech->add_option("--table", table, "builtin or a CSV file")->capture_default_str();

    auto* proto = app.add_subcommand("select-proto", "Filter application protocols by latency");
    proto->add_option("--max-latency", preq.max_latency_ms, "ms")->capture_default_str();
    proto->add_option("--table", table, "builtin or a CSV file")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config, out, seed);
        if (*analyze) return cmd_analyze(in, csv);
        if (*exp) return cmd_export(in, jsonl, samples);
        if (*tech) {
            const auto records = table == "builtin" ? builtin_tech_table() : load_tech_csv(table);
            print_names(select_candidates(std::span<const TechRecord>(records), req));
        }
        if (*proto) {
            const auto records = table == "builtin" ? builtin_proto_table() : load_proto_csv(table);
            print_names(select_candidates(std::span<const ProtoRecord>(records), preq));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
