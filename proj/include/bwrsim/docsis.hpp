#pragma once

#include "bwrsim/engine.hpp"
#include "bwrsim/time.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bwrsim {

// Upstream SC-QAM channel arithmetic. Defaults follow the 1.6 MHz /
// 1.28 Msym/s / 64-QAM single-channel setup (7.68 Mbps raw).
struct PhyConfig {
    int64_t symbol_rate = 1'280'000;
    int bits_per_symbol = 6;
    int minislot_symbols = 8;
    SimTime map_interval{2000};
    SimTime ds_delay{1000};
    SimTime map_lookahead{3500};
    // A request must reach the CMTS this long before a MAP build to be
    // allocated in it; stands in for burst receiver + MAC processing.
    SimTime req_proc{1500};
    int32_t per_frame_overhead = 16;
    SimTime jit_guard{0};
    bool piggyback = true;

    int64_t raw_bps() const { return symbol_rate * bits_per_symbol; }
    int32_t slot_payload_bytes() const { return minislot_symbols * bits_per_symbol / 8; }
    int64_t slots_per_map() const {
        return map_interval.us * symbol_rate / (static_cast<int64_t>(minislot_symbols) * 1'000'000);
    }
    int64_t slots_for_bytes(int64_t bytes) const {
        int32_t p = slot_payload_bytes();
        return (bytes + p - 1) / p;
    }
    // Nearest-microsecond start time of a minislot.
    SimTime slot_time(int64_t slot) const {
        int64_t num = slot * minislot_symbols * 1'000'000 + symbol_rate / 2;
        return SimTime{num / symbol_rate};
    }
    // First minislot whose exact start is >= t.
    int64_t slot_at_or_after(SimTime t) const {
        int64_t den = static_cast<int64_t>(minislot_symbols) * 1'000'000;
        int64_t num = t.us * symbol_rate;
        return (num + den - 1) / den;
    }

    void validate() const;
};

enum class FlowKind { Be, Rtps, Ugs };

enum class ReqOrigin { Contention, Piggyback, Rtps, BwrApi, Ugs };

const char* to_string(FlowKind k);
const char* to_string(ReqOrigin o);

struct ServiceFlow {
    uint32_t sid = 0;
    FlowKind kind = FlowKind::Be;
    int owner_cm = 0;
    int priority = 10; // lower value is served first

    // UGS
    SimTime ugs_interval{4000};
    int ugs_grants_per_interval = 2;
    int32_t ugs_grant_size = 90;
    SimTime ugs_jitter{500};
    SimTime ugs_phase{0};

    // RTPS
    SimTime rtps_poll_interval{2000};

    // BE contention backoff (truncated binary exponential)
    int backoff_start_exp = 2;
    int backoff_end_exp = 8;
};

struct ReqRecord {
    uint32_t sid = 0;
    int64_t bytes = 0;
    SimTime arrival{0};
    // FIFO position. For ordinary requests this is the arrival; a request
    // with a future earliest_grant queues from the instant an ordinary
    // request aiming at the same grant time would have had to be in.
    SimTime queued_since{0};
    SimTime earliest_grant{0}; // nonzero only for origin BwrApi
    ReqOrigin origin = ReqOrigin::Contention;
    uint64_t order = 0;
};

enum class ElemKind { Grant, Contention, RtpsPoll };

struct MapElement {
    ElemKind kind = ElemKind::Contention;
    uint32_t sid = 0;
    int64_t start_slot = 0;
    int64_t slot_count = 0;
    int64_t granted_bytes = 0;
    ReqOrigin origin = ReqOrigin::Contention;
};

struct MapMessage {
    uint64_t map_id = 0;
    SimTime built_at{0};
    int64_t start_slot = 0;
    int64_t end_slot = 0;
    std::vector<MapElement> elements;
};

struct UpstreamDelivery {
    uint32_t sid = 0;
    std::vector<uint64_t> completed_packets;
    int64_t bytes = 0;
    SimTime at{0};
};

struct CmtsCounters {
    int64_t maps_built = 0;
    int64_t slots_total = 0;
    int64_t slots_granted = 0;
    int64_t slots_contention = 0;
    int64_t requests_accepted = 0;
    int64_t contention_attempts = 0;
    int64_t contention_collisions = 0;
    int64_t jit_granted_bytes = 0;
    int64_t jit_wasted_bytes = 0;
    int64_t ugs_granted_bytes = 0;
    int64_t ugs_padding_bytes = 0;
    int64_t be_granted_bytes = 0;
    int64_t be_wasted_bytes = 0;
    int64_t delivered_bytes = 0;
    int64_t no_early_grant_violations = 0;
};

class CableModem;

// CMTS upstream scheduler: periodic MAP builds over a minislot grid, fixed
// UGS grants first, then RTPS polls, then requests FIFO within priority.
// The scheduler knows nothing about BWR; records carrying an
// earliest_grant constraint are simply not placed before it.
class Cmts {
public:
    Cmts(Engine& eng, PhyConfig phy, std::vector<ServiceFlow> flows);

    void attach_cm(CableModem* cm) { cms_.push_back(cm); }
    void start();

    // Request path (CM contention/piggyback/RTPS and the BWR API).
    void submit_request(uint32_t sid, int64_t bytes, SimTime earliest, ReqOrigin origin);

    // Contention attempts land here at their slot start; resolution happens
    // at slot end (a lone attempt becomes a request, two or more collide).
    void on_contention_attempt(int64_t slot, uint32_t sid, int64_t bytes, CableModem* sender);

    // Grant usage report, delivered at grant end together with any data.
    void on_upstream_frame(const MapElement& elem, int64_t sent_bytes,
                           const std::vector<uint64_t>& completed, SimTime at);

    using DeliverySink = std::function<void(const UpstreamDelivery&)>;
    void set_delivery_sink(DeliverySink sink) { delivery_sink_ = std::move(sink); }

    using MapLog = std::function<void(const std::string& line)>;
    void set_map_log(MapLog log) { map_log_ = std::move(log); }

    const PhyConfig& phy() const { return phy_; }
    const CmtsCounters& counters() const { return counters_; }
    const ServiceFlow* flow(uint32_t sid) const;
    const std::vector<ServiceFlow>& flows() const { return flows_; }
    int64_t pending_bytes() const;
    const std::vector<MapMessage>& map_history() const { return map_history_; }
    void keep_map_history(bool on) { keep_history_ = on; }
    void set_jit_guard(SimTime g) { phy_.jit_guard = g; }

    // First build that can allocate a request arriving at `arrival`.
    SimTime eligible_build(SimTime arrival) const {
        return ceil_to(arrival + phy_.req_proc, phy_.map_interval);
    }

private:
    void schedule_build(SimTime t);
    MapMessage build_map(SimTime now);
    void place_ugs_grants(MapMessage& map, std::vector<uint8_t>& used);
    void place_rtps_polls(MapMessage& map, std::vector<uint8_t>& used);
    void place_requests(MapMessage& map, std::vector<uint8_t>& used);
    void fill_contention(MapMessage& map, std::vector<uint8_t>& used);
    void check_tiling(const MapMessage& map) const;
    void resolve_contention_slot(int64_t slot);

    Engine& eng_;
    PhyConfig phy_;
    std::vector<ServiceFlow> flows_;
    std::vector<CableModem*> cms_;
    std::vector<ReqRecord> pending_;
    uint64_t next_order_ = 0;
    uint64_t next_map_id_ = 0;
    std::map<int64_t, std::vector<std::pair<CableModem*, std::pair<uint32_t, int64_t>>>> slot_attempts_;
    CmtsCounters counters_;
    DeliverySink delivery_sink_;
    MapLog map_log_;
    std::vector<MapMessage> map_history_;
    bool keep_history_ = false;
};

// Cable modem: per-flow FIFO queues, contention requesting with truncated
// exponential backoff, piggyback requests, and grant transmission. One
// outstanding contention attempt per flow.
class CableModem {
public:
    CableModem(Engine& eng, Cmts& cmts, int index);

    int index() const { return index_; }
    std::string name() const { return "cm" + std::to_string(index_); }

    // Data-plane ingress (wire_bytes includes per-frame overhead).
    void on_data(uint32_t sid, uint64_t pkt_id, int64_t wire_bytes);

    // Control payload (e.g. an encoded BWR) for a UGS/RTPS flow; delivered
    // whole in one grant. Callback fires at CMTS-side arrival.
    using ControlDelivered = std::function<void(SimTime at)>;
    void enqueue_control(uint32_t sid, int32_t wire_bytes, ControlDelivered cb);

    void on_map(const MapMessage& map);
    void on_req_outcome(uint32_t sid, bool acked);

    int64_t queued_bytes(uint32_t sid) const;
    int64_t control_queue_depth(uint32_t sid) const;

    // Time the head-of-line wait ended for a packet (first byte granted);
    // used by latency metrics for queue-wait accounting.
    using FirstServiceHook = std::function<void(uint64_t pkt_id, SimTime at)>;
    void set_first_service_hook(FirstServiceHook h) { first_service_ = std::move(h); }

private:
    struct Segment {
        uint64_t pkt_id;
        int64_t remaining;
        int64_t total;
    };
    struct ControlItem {
        int32_t bytes;
        ControlDelivered cb;
    };
    struct FlowState {
        const ServiceFlow* cfg = nullptr;
        std::deque<Segment> queue;
        int64_t queued_bytes = 0;
        std::deque<ControlItem> control;
        int64_t granted_upcoming = 0;
        int64_t requested_outstanding = 0;
        bool attempt_in_flight = false;
        bool awaiting_outcome = false;
        int64_t attempt_bytes = 0;
        int backoff_fails = 0;
        bool want_request = false;
    };
    struct ContentionRun {
        int64_t start_slot;
        int64_t count;
    };

    FlowState& flow(uint32_t sid);
    int64_t need_bytes(const FlowState& f) const;
    void maybe_request(uint32_t sid);
    void schedule_contention_attempt(uint32_t sid);
    std::optional<int64_t> pick_contention_slot(SimTime after, int skip);
    void fire_grant(MapElement elem);
    void deliver_grant(const MapElement& elem, int64_t data_sent, int64_t control_sent,
                       std::vector<uint64_t> completed, std::vector<ControlDelivered> ctrl_cbs,
                       int64_t piggyback_bytes);
    void fire_rtps_poll(MapElement elem);

    Engine& eng_;
    Cmts& cmts_;
    int index_;
    std::map<uint32_t, FlowState> flows_;
    std::vector<ContentionRun> contention_;
    FirstServiceHook first_service_;
};

} // namespace bwrsim
