// bwr-sim: LTE-over-DOCSIS backhaul latency simulator.
//   run      one scenario, write trace + summary
//   sweep    (load x seed x {baseline, bwr}) matrix with parallel workers
//   compare  recompute the gain table from stored sweep results

#include "bwrsim/export.hpp"
#include "bwrsim/scenario.hpp"
#include "bwrsim/simulation.hpp"
#include "bwrsim/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

std::string output_root(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("BWR_SIM_OUTPUT_ROOT")) return env;
    return "results";
}

bwrsim::ScenarioConfig load_or_default(const std::string& path) {
    if (path.empty()) return bwrsim::ScenarioConfig{};
    return bwrsim::ScenarioConfig::from_file(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LTE small cell over DOCSIS upstream: baseline vs BWR pipelining"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool trace = false;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("-c,--config", config_path, "scenario file (empty = testbed defaults)");
    run->add_option("-o,--out", out_dir, "output directory");
    run->add_flag("--trace", trace, "write the per-event trace log");

    std::string loads_arg = "0.08,0.2,0.35,0.5,0.7";
    int seeds = 6;
    uint64_t seed_base = 1;
    bool serial = false;
    auto* sweep = app.add_subcommand("sweep", "paired baseline/BWR load sweep");
    sweep->add_option("-c,--config", config_path, "base scenario file");
    sweep->add_option("-o,--out", out_dir, "output directory");
    sweep->add_option("--loads", loads_arg, "comma separated load fractions");
    sweep->add_option("--seeds", seeds, "seeds per load point");
    sweep->add_option("--seed-base", seed_base, "first seed value");
    sweep->add_flag("--serial", serial, "run the matrix on one thread");

    std::string compare_dir;
    auto* compare = app.add_subcommand("compare", "recompute gains from stored results");
    compare->add_option("dir", compare_dir, "sweep results directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            bwrsim::ScenarioConfig cfg = load_or_default(config_path);
            std::string dir = output_root(out_dir);

            std::ofstream trace_out;
            std::ofstream map_out;
            bwrsim::TraceSink sink;
            bwrsim::Cmts::MapLog map_log;
            if (trace || cfg.trace) {
                std::filesystem::create_directories(dir);
                trace_out.open(dir + "/events.tsv", std::ios::trunc);
                sink = [&trace_out](bwrsim::SimTime at, uint64_t seq, const std::string& target,
                                    const std::string& kind) {
                    trace_out << at.us << '\t' << seq << '\t' << target << '\t' << kind << '\n';
                };
                map_out.open(dir + "/maps.tsv", std::ios::trunc);
                map_out << "map_id\tstart_us\tgrants\tcontention_slots\twasted_bytes\n";
                map_log = [&map_out](const std::string& line) { map_out << line << '\n'; };
            }

            bwrsim::RunResult r = bwrsim::run_scenario(cfg, sink, map_log);
            bwrsim::write_file(dir + "/summary.json", bwrsim::summary_json(r));
            bwrsim::write_file(dir + "/trace.csv", bwrsim::packet_trace_csv(r));
            std::printf("run done: %lld pings, docsis mean %.3f ms, rtt mean %.3f ms -> %s\n",
                        static_cast<long long>(r.pings_completed), r.docsis_seg.mean_us / 1000.0,
                        r.rtt.mean_us / 1000.0, dir.c_str());
            return 0;
        }

        if (sweep->parsed()) {
            bwrsim::SweepSpec spec;
            spec.base = load_or_default(config_path);
            spec.seeds = seeds;
            spec.seed_base = seed_base;
            spec.parallel = !serial;
            std::stringstream ss(loads_arg);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) spec.loads.push_back(std::stod(item));
            if (spec.loads.empty()) {
                std::fprintf(stderr, "sweep: no load points given\n");
                return 2;
            }

            std::string dir = output_root(out_dir);
            bwrsim::SweepOutcome outcome = bwrsim::run_sweep(spec);
            bwrsim::export_sweep(outcome, dir);
            std::printf("%s", bwrsim::gain_csv(outcome.gains).c_str());
            if (!outcome.all_ok) {
                for (const auto& r : outcome.runs)
                    if (!r.ok)
                        std::fprintf(stderr, "FAILED %s: %s\n",
                                     bwrsim::run_dir_name(r.load, r.seed, r.bwr).c_str(),
                                     r.error.c_str());
                return 1;
            }
            return 0;
        }

        if (compare->parsed()) {
            auto gains = bwrsim::gains_from_dir(compare_dir);
            std::string csv = bwrsim::gain_csv(gains);
            bwrsim::write_file(compare_dir + "/gain_recomputed.csv", csv);
            std::printf("%s", csv.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
