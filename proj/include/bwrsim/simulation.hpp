#pragma once

#include "bwrsim/bwr.hpp"
#include "bwrsim/docsis.hpp"
#include "bwrsim/engine.hpp"
#include "bwrsim/lte.hpp"
#include "bwrsim/metrics.hpp"
#include "bwrsim/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bwrsim {

enum class PacketKind { Ping, Background, UeLoad };

struct Packet {
    uint64_t id = 0;
    PacketKind kind = PacketKind::Ping;
    int payload = 0;
    int64_t ip_bytes = 0;
    int64_t wire_bytes = 0;
    int lcg = 0;
    SimTime ue_ingress{-1};
    SimTime enb_egress{-1};
    SimTime cm_ingress{-1};
    SimTime first_service{-1};
    SimTime cmts_egress{-1};
    SimTime core_arrival{-1};
    SimTime core_departure{-1};
    SimTime ue_return{-1};
};

struct RunResult {
    uint64_t seed = 0;
    double load = 0.0;
    bool bwr_enabled = false;
    SimTime duration{0};

    SeriesSummary lte_seg;
    SeriesSummary docsis_seg;
    SeriesSummary queue_wait;
    SeriesSummary rtt;
    SeriesSummary docsis_bg;

    CmtsCounters cmts;
    BwrApiCounters api;
    int64_t bwr_messages = 0;
    int64_t bwr_zero_entry = 0;
    double bwr_signaling_bps = 0.0;
    double offered_bg_bps = 0.0;
    int64_t harq_retransmissions = 0;
    int64_t transport_blocks = 0;
    int64_t pings_sent = 0;
    int64_t pings_completed = 0;
    int64_t bg_sent = 0;
    int64_t bg_completed = 0;
    uint64_t events_fired = 0;

    std::vector<Packet> ping_trace;

    // raw sample vectors, kept for invariant tests
    std::vector<int64_t> lte_samples;
    std::vector<int64_t> docsis_samples;
    std::vector<int64_t> queue_wait_samples;
};

// Composes one full experiment from a scenario and runs it to completion.
RunResult run_scenario(const ScenarioConfig& cfg, TraceSink trace = nullptr,
                       Cmts::MapLog map_log = nullptr);

// Service flow identifiers used by the composition.
namespace sids {
constexpr uint32_t data_base = 1; // bulk: sid 1; per-LCG: sids 1..4
constexpr uint32_t ugs = 9;
constexpr uint32_t bg_base = 100; // background CM i, flow j: 100 + i*10 + j
} // namespace sids

} // namespace bwrsim
