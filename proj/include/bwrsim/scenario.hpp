#pragma once

#include "bwrsim/bwr.hpp"
#include "bwrsim/docsis.hpp"
#include "bwrsim/lte.hpp"
#include "bwrsim/time.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bwrsim {

struct UgsScenario {
    bool enabled = true;
    SimTime grant_interval{4000};
    int grants_per_interval = 2;
    int32_t grant_size = 90;
    SimTime jitter{500};
    SimTime phase{0};
};

struct BwrScenario {
    bool enabled = false;
    BwrMode mode = BwrMode::Bulk;
    BwrAggregate aggregate = BwrAggregate::PerMessage;
    SimTime period{2000};
    SimTime jit_guard{0};
    int32_t encoded_size = 80;
};

struct PingScenario {
    bool enabled = true;
    SimTime interval{20000};
    int payload_min = 64;
    int payload_max = 1280;
    int payload_step = 64;
    int ip_overhead = 28;
    SimTime start{100000};
    int lcg = 0;
};

struct UeLoadScenario {
    double rate_bps = 0.0;
    int packet_bytes = 1000;
    int lcg = 0;
};

struct LoadScenario {
    int cm_bg_count = 10;
    int flows_per_cm = 3;
    double target_utilization = 0.0;
    std::vector<int> packet_sizes{200, 600, 1400};
};

struct BackoffScenario {
    int start_exp = 2;
    int end_exp = 8;
};

// One experiment, fully described: every knob of the PHY/MAC/LTE models,
// service flows, workload, BWR settings, seed and duration.
struct ScenarioConfig {
    uint64_t seed = 1;
    SimTime duration = sec(60);
    SimTime drain = sec(2);
    bool trace = false;

    LteConfig lte;
    PhyConfig docsis;
    UgsScenario ugs;
    BwrScenario bwr;
    PingScenario ping;
    UeLoadScenario ue_load;
    LoadScenario load;
    BackoffScenario backoff;

    SimTime core_delay{0};
    SimTime lte_dl_delay{4000};
    // residual eNB-vs-CMTS clock offset as seen by the CMTS (PTP keeps the
    // clocks synchronized; this knob models imperfect sync only)
    SimTime clock_offset{0};

    void set(const std::string& key, const std::string& value);
    void validate() const;

    static ScenarioConfig from_string(const std::string& text);
    static ScenarioConfig from_file(const std::string& path);
};

} // namespace bwrsim
