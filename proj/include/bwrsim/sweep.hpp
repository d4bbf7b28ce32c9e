#pragma once

#include "bwrsim/export.hpp"
#include "bwrsim/scenario.hpp"
#include "bwrsim/simulation.hpp"

#include <string>
#include <vector>

namespace bwrsim {

struct SweepSpec {
    ScenarioConfig base;
    std::vector<double> loads;
    int seeds = 6;
    uint64_t seed_base = 1;
    bool parallel = true;
};

struct SweepRun {
    double load = 0.0;
    uint64_t seed = 0;
    bool bwr = false;
    bool ok = false;
    std::string error;
    RunResult result;
};

struct SweepOutcome {
    std::vector<SweepRun> runs;
    std::vector<GainRow> gains;
    bool all_ok = true;
};

ScenarioConfig configure_run(const ScenarioConfig& base, double load, uint64_t seed, bool bwr);

// Fans the (load x seed x arm) matrix out across worker threads, each run an
// isolated engine. Results are merged in matrix order, so the output is
// byte-identical to a serial execution.
SweepOutcome run_sweep(const SweepSpec& spec);

std::vector<GainRow> compute_gains(const std::vector<SweepRun>& runs);

std::string run_dir_name(double load, uint64_t seed, bool bwr);

// Writes per-run trace + summary files, gain.csv and manifest.json.
void export_sweep(const SweepOutcome& outcome, const std::string& dir);

// Rebuilds the gain table from stored summaries, without re-simulating.
std::vector<GainRow> gains_from_dir(const std::string& dir);

} // namespace bwrsim
