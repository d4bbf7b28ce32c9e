#include "bwrsim/sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace bwrsim {

ScenarioConfig configure_run(const ScenarioConfig& base, double load, uint64_t seed, bool bwr) {
    ScenarioConfig cfg = base;
    cfg.load.target_utilization = load;
    cfg.seed = seed;
    cfg.bwr.enabled = bwr;
    return cfg;
}

SweepOutcome run_sweep(const SweepSpec& spec) {
    struct Cell {
        double load;
        uint64_t seed;
        bool bwr;
    };
    std::vector<Cell> cells;
    for (double load : spec.loads) {
        for (int s = 0; s < spec.seeds; ++s) {
            uint64_t seed = spec.seed_base + static_cast<uint64_t>(s);
            cells.push_back({load, seed, false});
            cells.push_back({load, seed, true});
        }
    }

    SweepOutcome out;
    out.runs.resize(cells.size());

    auto run_one = [&](size_t i) {
        SweepRun& r = out.runs[i];
        r.load = cells[i].load;
        r.seed = cells[i].seed;
        r.bwr = cells[i].bwr;
        try {
            ScenarioConfig cfg = configure_run(spec.base, r.load, r.seed, r.bwr);
            r.result = run_scenario(cfg);
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
    };

    int64_t n = static_cast<int64_t>(cells.size());
    if (spec.parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int64_t i = 0; i < n; ++i) run_one(static_cast<size_t>(i));
    } else {
        for (int64_t i = 0; i < n; ++i) run_one(static_cast<size_t>(i));
    }

    for (const auto& r : out.runs)
        if (!r.ok) out.all_ok = false;
    out.gains = compute_gains(out.runs);
    return out;
}

std::vector<GainRow> compute_gains(const std::vector<SweepRun>& runs) {
    std::vector<double> loads;
    for (const auto& r : runs)
        if (std::find(loads.begin(), loads.end(), r.load) == loads.end())
            loads.push_back(r.load);

    std::vector<GainRow> rows;
    for (double load : loads) {
        GainRow row;
        row.load = load;
        std::vector<double> per_seed_gain;
        std::vector<uint64_t> seeds;
        for (const auto& r : runs)
            if (r.load == load && r.ok &&
                std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end())
                seeds.push_back(r.seed);
        std::sort(seeds.begin(), seeds.end());
        for (uint64_t seed : seeds) {
            const SweepRun* base = nullptr;
            const SweepRun* bwr = nullptr;
            for (const auto& r : runs) {
                if (r.load != load || r.seed != seed || !r.ok) continue;
                (r.bwr ? bwr : base) = &r;
            }
            if (!base || !bwr) continue;
            row.base_docsis_us += base->result.docsis_seg.mean_us;
            row.bwr_docsis_us += bwr->result.docsis_seg.mean_us;
            row.base_rtt_us += base->result.rtt.mean_us;
            row.bwr_rtt_us += bwr->result.rtt.mean_us;
            if (base->result.docsis_seg.mean_us > 0)
                per_seed_gain.push_back(100.0 * (base->result.docsis_seg.mean_us -
                                                 bwr->result.docsis_seg.mean_us) /
                                        base->result.docsis_seg.mean_us);
            ++row.seeds;
        }
        if (row.seeds == 0) continue;
        row.base_docsis_us /= row.seeds;
        row.bwr_docsis_us /= row.seeds;
        row.base_rtt_us /= row.seeds;
        row.bwr_rtt_us /= row.seeds;
        if (row.base_docsis_us > 0)
            row.gain_pct = 100.0 * (row.base_docsis_us - row.bwr_docsis_us) / row.base_docsis_us;
        if (per_seed_gain.size() > 1) {
            double mean = 0;
            for (double g : per_seed_gain) mean += g;
            mean /= static_cast<double>(per_seed_gain.size());
            double var = 0;
            for (double g : per_seed_gain) var += (g - mean) * (g - mean);
            var /= static_cast<double>(per_seed_gain.size() - 1);
            row.gain_ci95_pct = 1.96 * std::sqrt(var / static_cast<double>(per_seed_gain.size()));
        }
        rows.push_back(row);
    }
    return rows;
}

std::string run_dir_name(double load, uint64_t seed, bool bwr) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "load%.2f_seed%llu_%s", load,
                  static_cast<unsigned long long>(seed), bwr ? "bwr" : "base");
    return buf;
}

void export_sweep(const SweepOutcome& outcome, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : outcome.runs) {
        std::string name = run_dir_name(r.load, r.seed, r.bwr);
        nlohmann::ordered_json entry;
        entry["name"] = name;
        entry["load"] = r.load;
        entry["seed"] = r.seed;
        entry["bwr"] = r.bwr;
        entry["ok"] = r.ok;
        if (!r.ok) entry["error"] = r.error;
        manifest["runs"].push_back(entry);
        if (!r.ok) continue;
        std::string rd = dir + "/" + name;
        write_file(rd + "/summary.json", summary_json(r.result));
        write_file(rd + "/trace.csv", packet_trace_csv(r.result));
    }
    manifest["all_ok"] = outcome.all_ok;
    write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
    write_file(dir + "/gain.csv", gain_csv(outcome.gains));
}

std::vector<GainRow> gains_from_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::string manifest_path = dir + "/manifest.json";
    if (!fs::exists(manifest_path))
        throw ConfigError("no manifest.json under '" + dir + "' (not a sweep results directory?)");
    auto manifest = nlohmann::ordered_json::parse(read_file(manifest_path));

    std::vector<SweepRun> runs;
    for (const auto& entry : manifest.at("runs")) {
        SweepRun r;
        r.load = entry.at("load").get<double>();
        r.seed = entry.at("seed").get<uint64_t>();
        r.bwr = entry.at("bwr").get<bool>();
        r.ok = entry.at("ok").get<bool>();
        if (!r.ok) continue;
        std::string name = entry.at("name").get<std::string>();
        r.result = summary_from_json(read_file(dir + "/" + name + "/summary.json"));
        runs.push_back(r);
    }
    return compute_gains(runs);
}

} // namespace bwrsim
