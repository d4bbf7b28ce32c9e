#pragma once

#include "bwrsim/engine.hpp"
#include "bwrsim/time.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <utility>
#include <vector>

namespace bwrsim {

// LTE uplink loop parameters. The pipeline follows the classic FDD timing:
// SR wait, two 4-subframe hops to get the BSR across, one hop of BSR
// processing, one hop from data grant to transmission, then decode.
// Scheduling decisions happen sched_offset into each subframe.
struct LteConfig {
    SimTime sr_period{5000};
    SimTime subframe{1000};
    SimTime pipeline_hop{4000};
    SimTime sched_offset{500};
    SimTime decode_min{1500};
    SimTime decode_max{2500};
    int prb_count = 25;
    int bytes_per_prb = 64;
    double bler = 0.0;
    SimTime harq_rtt{8000};
    SimTime air_overhead{0};
    int ue_count = 1;

    int64_t subframe_capacity() const {
        return static_cast<int64_t>(prb_count) * bytes_per_prb;
    }
    void validate() const;
};

// Analytic UE-data-to-eNB-egress bounds for a quiet uplink: the oracle the
// simulated latencies are checked against when bler = 0.
std::pair<SimTime, SimTime> min_max_uplink_latency(const LteConfig& cfg);

struct GrantNotice {
    SimTime decision_time{0};
    int64_t decision_subframe = 0;
    int64_t tx_subframe = 0;
    SimTime tx_time{0};
    int64_t total_bytes = 0;
    std::array<int64_t, 4> lcg_split{0, 0, 0, 0};
    SimTime expected_cm_arrival{0};
    int ue = 0;
    bool retransmission = false;
};

struct UlGrant {
    int ue = 0;
    int64_t decision_subframe = 0;
    int64_t tx_subframe = 0;
    int64_t bytes = 0;
    std::array<int64_t, 4> lcg_split{0, 0, 0, 0};
};

// UE + eNB pair driven by engine events. Per-subframe scheduling with
// strict LCG priority and round-robin across UEs; HARQ as a Bernoulli
// block failure with a fixed retransmission turnaround.
class LteUplink {
public:
    LteUplink(Engine& eng, LteConfig cfg);

    void start();

    // Data-plane ingress at the UE.
    void on_ue_data(int ue, uint64_t pkt_id, int64_t bytes, int lcg);

    // Full packets handed to the CM (enb egress; propagation to CM is zero).
    using EgressSink = std::function<void(uint64_t pkt_id, int lcg, int64_t bytes, SimTime at)>;
    void set_egress_sink(EgressSink s) { egress_ = std::move(s); }

    // Grant-decision notifications consumed by the BWR generator.
    using GrantSink = std::function<void(const GrantNotice&)>;
    void set_grant_sink(GrantSink s) { grant_sink_ = std::move(s); }

    const LteConfig& config() const { return cfg_; }
    int64_t buffered_bytes(int ue) const;
    int64_t enb_unserved_bytes(int ue) const;
    int64_t harq_retransmissions() const { return harq_retx_; }
    int64_t transport_blocks() const { return tb_count_; }

private:
    struct Segment {
        uint64_t pkt_id;
        int64_t remaining;
    };
    struct Chunk {
        int64_t bytes;
        SimTime eligible_at;
    };
    struct PendingPkt {
        int64_t total = 0;
        int64_t delivered = 0;
        int lcg = 0;
    };
    struct UeState {
        std::array<std::deque<Segment>, 4> queues;
        std::array<int64_t, 4> unreported{0, 0, 0, 0};
        std::array<std::deque<Chunk>, 4> enb_chunks; // BSR-reported, awaiting grants
        int64_t buffered = 0;
        int64_t enb_unserved = 0;
        bool sr_pending = false;
        int reports_in_flight = 0;
        int grants_outstanding = 0;
    };
    struct TransportBlock {
        int ue;
        std::vector<std::pair<uint64_t, int64_t>> pieces; // (pkt, bytes)
        std::array<int64_t, 4> report{0, 0, 0, 0};        // piggybacked BSR delta
        int64_t bytes = 0;
    };

    bool pipeline_active(const UeState& u) const {
        return u.sr_pending || u.reports_in_flight > 0 || u.enb_unserved > 0 ||
               u.grants_outstanding > 0;
    }
    void maybe_raise_sr(int ue);
    void fire_sr(int ue);
    void deliver_report(int ue, const std::array<int64_t, 4>& delta);
    void sched_tick();
    void transmit(const UlGrant& grant, SimTime decode);
    void attempt(std::shared_ptr<TransportBlock> tb, SimTime tx_time, SimTime decode);
    void decode_tb(const TransportBlock& tb);
    void egress_tb(const TransportBlock& tb, SimTime at);

    Engine& eng_;
    LteConfig cfg_;
    std::vector<UeState> ues_;
    std::array<size_t, 4> rr_{0, 0, 0, 0};
    std::map<uint64_t, PendingPkt> in_flight_;
    EgressSink egress_;
    GrantSink grant_sink_;
    int64_t harq_retx_ = 0;
    int64_t tb_count_ = 0;
};

} // namespace bwrsim
