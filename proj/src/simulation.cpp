#include "bwrsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>

namespace bwrsim {

namespace {

constexpr uint64_t kKindShift = 56;

uint64_t make_id(PacketKind kind, uint64_t n) {
    return (static_cast<uint64_t>(kind) << kKindShift) | n;
}

PacketKind kind_of(uint64_t id) {
    return static_cast<PacketKind>(id >> kKindShift);
}

uint64_t index_of(uint64_t id) {
    return id & ((uint64_t{1} << kKindShift) - 1);
}

struct BgFlowSource {
    int cm = 0;
    uint32_t sid = 0;
    double mean_gap_us = 0.0;
};

// Everything one run owns. Wires LTE -> CM-UT -> CMTS, the BWR pipeline
// when enabled, background generators, and per-hop timestamping.
struct Composition {
    explicit Composition(const ScenarioConfig& cfg_in) : cfg(cfg_in), eng(cfg_in.seed) {
        cfg.validate();
        build_flows();
        cmts = std::make_unique<Cmts>(eng, cfg.docsis, flows);
        cmts->set_jit_guard(cfg.bwr.enabled ? cfg.bwr.jit_guard : SimTime{0});
        cm_ut = std::make_unique<CableModem>(eng, *cmts, 0);
        for (int i = 1; i <= bg_cm_count(); ++i)
            bg_cms.push_back(std::make_unique<CableModem>(eng, *cmts, i));

        lte_enabled = cfg.ping.enabled || cfg.ue_load.rate_bps > 0.0;
        if (lte_enabled) {
            lte = std::make_unique<LteUplink>(eng, cfg.lte);
            lte->set_egress_sink([this](uint64_t pkt, int lcg, int64_t bytes, SimTime at) {
                on_enb_egress(pkt, lcg, bytes, at);
            });
        }

        if (cfg.bwr.enabled) {
            BwrGenConfig g;
            g.mode = cfg.bwr.mode;
            g.aggregate = cfg.bwr.aggregate;
            g.period = cfg.bwr.period;
            g.encoded_size = cfg.bwr.encoded_size;
            bwr_gen = std::make_unique<BwrGenerator>(eng, g);
            std::array<uint32_t, 4> api_sids{sids::data_base, sids::data_base,
                                             sids::data_base, sids::data_base};
            if (cfg.bwr.mode == BwrMode::PerLcg)
                for (uint32_t i = 0; i < 4; ++i) api_sids[i] = sids::data_base + i;
            api = std::make_unique<BwrApi>(*cmts, cfg.bwr.mode, api_sids, cfg.clock_offset);
            bwr_gen->set_transport([this](std::vector<uint8_t> wire,
                                          std::function<void(SimTime)> delivered) {
                cm_ut->enqueue_control(sids::ugs, static_cast<int32_t>(wire.size()),
                                       std::move(delivered));
            });
            bwr_gen->set_receiver([this](const std::vector<uint8_t>& wire, SimTime at) {
                api->on_wire(wire, at);
            });
            if (lte) lte->set_grant_sink([this](const GrantNotice& n) {
                bwr_gen->on_grant_notice(n);
            });
        }

        cmts->set_delivery_sink([this](const UpstreamDelivery& d) { on_cmts_delivery(d); });
        cm_ut->set_first_service_hook([this](uint64_t pkt, SimTime at) {
            if (kind_of(pkt) == PacketKind::Ping) {
                Packet& p = pings[index_of(pkt)];
                if (p.first_service.us < 0) p.first_service = at;
            }
        });
    }

    int bg_cm_count() const {
        return cfg.load.target_utilization > 0.0 ? cfg.load.cm_bg_count : 0;
    }

    void build_flows() {
        int data_flows = cfg.bwr.mode == BwrMode::PerLcg && cfg.bwr.enabled ? 4 : 1;
        for (int i = 0; i < data_flows; ++i) {
            ServiceFlow f;
            f.sid = sids::data_base + static_cast<uint32_t>(i);
            f.kind = FlowKind::Be;
            f.owner_cm = 0;
            f.priority = data_flows == 1 ? 5 : i;
            f.backoff_start_exp = cfg.backoff.start_exp;
            f.backoff_end_exp = cfg.backoff.end_exp;
            flows.push_back(f);
        }
        if (cfg.ugs.enabled) {
            ServiceFlow f;
            f.sid = sids::ugs;
            f.kind = FlowKind::Ugs;
            f.owner_cm = 0;
            f.ugs_interval = cfg.ugs.grant_interval;
            f.ugs_grants_per_interval = cfg.ugs.grants_per_interval;
            f.ugs_grant_size = cfg.ugs.grant_size;
            f.ugs_jitter = cfg.ugs.jitter;
            f.ugs_phase = cfg.ugs.phase;
            flows.push_back(f);
        }
        for (int i = 1; i <= bg_cm_count(); ++i) {
            for (int j = 0; j < cfg.load.flows_per_cm; ++j) {
                ServiceFlow f;
                f.sid = sids::bg_base + static_cast<uint32_t>(i * 10 + j);
                f.kind = FlowKind::Be;
                f.owner_cm = i;
                f.priority = 5;
                f.backoff_start_exp = cfg.backoff.start_exp;
                f.backoff_end_exp = cfg.backoff.end_exp;
                flows.push_back(f);
            }
        }
    }

    uint32_t data_sid_for_lcg(int lcg) const {
        if (cfg.bwr.enabled && cfg.bwr.mode == BwrMode::PerLcg)
            return sids::data_base + static_cast<uint32_t>(lcg);
        return sids::data_base;
    }

    void start() {
        cmts->start();
        if (lte) lte->start();
        if (bwr_gen) bwr_gen->start();
        if (cfg.ping.enabled) schedule_ping(cfg.ping.start, 0);
        if (cfg.ue_load.rate_bps > 0.0) schedule_ue_load_next(SimTime{0});
        setup_background();
    }

    // --- ping workload ------------------------------------------------

    int ping_payload(int64_t n) const {
        int steps = (cfg.ping.payload_max - cfg.ping.payload_min) / cfg.ping.payload_step + 1;
        return cfg.ping.payload_min +
               static_cast<int>(n % steps) * cfg.ping.payload_step;
    }

    void schedule_ping(SimTime at, int64_t n) {
        if (at > workload_stop()) return;
        eng.schedule_at(at, "workload", "ping", [this, n] {
            Packet p;
            p.id = make_id(PacketKind::Ping, static_cast<uint64_t>(n));
            p.kind = PacketKind::Ping;
            p.payload = ping_payload(n);
            p.ip_bytes = p.payload + cfg.ping.ip_overhead;
            p.wire_bytes = p.ip_bytes + cfg.docsis.per_frame_overhead;
            p.lcg = cfg.ping.lcg;
            p.ue_ingress = eng.now();
            pings.push_back(p);
            lte->on_ue_data(0, p.id, p.ip_bytes, p.lcg);
            schedule_ping(eng.now() + cfg.ping.interval, n + 1);
        });
    }

    // --- traffic through the eNB -> CM boundary ------------------------

    void on_enb_egress(uint64_t pkt, int lcg, int64_t ip_bytes, SimTime at) {
        switch (kind_of(pkt)) {
            case PacketKind::Ping: {
                Packet& p = pings[index_of(pkt)];
                p.enb_egress = at;
                p.cm_ingress = at; // eNB-CM propagation is negligible
                cm_ut->on_data(data_sid_for_lcg(lcg), pkt, p.wire_bytes);
                break;
            }
            case PacketKind::UeLoad: {
                outstanding_ue_load[pkt] = at;
                cm_ut->on_data(data_sid_for_lcg(lcg),
                               pkt, ip_bytes + cfg.docsis.per_frame_overhead);
                break;
            }
            default:
                throw ModelError("unexpected packet kind at eNB egress");
        }
    }

    void on_cmts_delivery(const UpstreamDelivery& d) {
        for (uint64_t pkt : d.completed_packets) {
            switch (kind_of(pkt)) {
                case PacketKind::Ping: {
                    Packet& p = pings[index_of(pkt)];
                    p.cmts_egress = d.at;
                    p.core_arrival = p.cmts_egress + cfg.core_delay;
                    p.core_departure = p.core_arrival;
                    p.ue_return = p.core_departure + cfg.docsis.ds_delay + cfg.lte_dl_delay;
                    lte_seg.add(p.enb_egress - p.ue_ingress);
                    docsis_seg.add(p.cmts_egress - p.cm_ingress);
                    if (p.first_service.us >= 0)
                        queue_wait.add(p.first_service - p.cm_ingress);
                    rtt.add(p.ue_return - p.ue_ingress);
                    ++pings_completed;
                    break;
                }
                case PacketKind::Background: {
                    auto it = outstanding_bg.find(pkt);
                    if (it == outstanding_bg.end())
                        throw ModelError("background packet delivered twice");
                    docsis_bg.add(d.at - it->second);
                    outstanding_bg.erase(it);
                    ++bg_completed;
                    break;
                }
                case PacketKind::UeLoad: {
                    outstanding_ue_load.erase(pkt);
                    break;
                }
            }
        }
    }

    // --- background load ------------------------------------------------

    void setup_background() {
        if (bg_cm_count() == 0) return;
        double mean_wire = 0.0;
        for (int s : cfg.load.packet_sizes)
            mean_wire += static_cast<double>(s + cfg.docsis.per_frame_overhead);
        mean_wire /= static_cast<double>(cfg.load.packet_sizes.size());
        double total_bps = cfg.load.target_utilization * static_cast<double>(cfg.docsis.raw_bps());
        int flows_total = bg_cm_count() * cfg.load.flows_per_cm;
        double per_flow_pps = total_bps / (8.0 * mean_wire) / static_cast<double>(flows_total);
        double mean_gap_us = 1e6 / per_flow_pps;
        for (int i = 1; i <= bg_cm_count(); ++i) {
            for (int j = 0; j < cfg.load.flows_per_cm; ++j) {
                BgFlowSource src;
                src.cm = i;
                src.sid = sids::bg_base + static_cast<uint32_t>(i * 10 + j);
                src.mean_gap_us = mean_gap_us;
                schedule_bg_next(src, SimTime{0});
            }
        }
    }

    std::string bg_stream(const BgFlowSource& src) const {
        return "bg/cm" + std::to_string(src.cm) + "/sid" + std::to_string(src.sid);
    }

    void schedule_bg_next(const BgFlowSource& src, SimTime from) {
        auto& rng = eng.rng(bg_stream(src));
        int64_t gap = std::max<int64_t>(1, std::llround(rng.exponential(src.mean_gap_us)));
        SimTime at = from + SimTime{gap};
        if (at > workload_stop()) return;
        eng.schedule_at(at, "workload", "bg_arrival", [this, src] {
            auto& r = eng.rng(bg_stream(src));
            size_t pick = static_cast<size_t>(
                r.uniform_int(0, static_cast<int64_t>(cfg.load.packet_sizes.size()) - 1));
            int64_t wire = cfg.load.packet_sizes[pick] + cfg.docsis.per_frame_overhead;
            uint64_t id = make_id(PacketKind::Background, next_bg_id++);
            outstanding_bg[id] = eng.now();
            offered_bg_bytes += wire;
            ++bg_sent;
            bg_cms[static_cast<size_t>(src.cm - 1)]->on_data(src.sid, id, wire);
            schedule_bg_next(src, eng.now());
        });
    }

    // --- UE-side load (LTE data traffic knob) ----------------------------

    void schedule_ue_load_next(SimTime from) {
        double pps = cfg.ue_load.rate_bps / (8.0 * cfg.ue_load.packet_bytes);
        auto& rng = eng.rng("ue_load");
        int64_t gap = std::max<int64_t>(1, std::llround(rng.exponential(1e6 / pps)));
        SimTime at = from + SimTime{gap};
        if (at > workload_stop()) return;
        eng.schedule_at(at, "workload", "ue_load", [this] {
            uint64_t id = make_id(PacketKind::UeLoad, next_ue_load_id++);
            lte->on_ue_data(0, id, cfg.ue_load.packet_bytes, cfg.ue_load.lcg);
            schedule_ue_load_next(eng.now());
        });
    }

    SimTime workload_stop() const { return cfg.duration - cfg.drain; }

    // --- result assembly --------------------------------------------------

    RunResult finish(const EngineStats& stats) {
        RunResult r;
        r.seed = cfg.seed;
        r.load = cfg.load.target_utilization;
        r.bwr_enabled = cfg.bwr.enabled;
        r.duration = cfg.duration;
        r.lte_seg = lte_seg.summarize();
        r.docsis_seg = docsis_seg.summarize();
        r.queue_wait = queue_wait.summarize();
        r.rtt = rtt.summarize();
        r.docsis_bg = docsis_bg.summarize();
        r.cmts = cmts->counters();
        if (api) r.api = api->counters();
        if (bwr_gen) {
            r.bwr_messages = bwr_gen->messages_sent();
            r.bwr_zero_entry = bwr_gen->zero_entry_messages();
            SimTime w0 = ceil_to(cfg.duration / 10, cfg.bwr.period);
            SimTime w1 = floor_to(cfg.duration - cfg.drain, cfg.bwr.period);
            r.bwr_signaling_bps = bwr_gen->signaling_bps(w0, w1);
        }
        if (lte) {
            r.harq_retransmissions = lte->harq_retransmissions();
            r.transport_blocks = lte->transport_blocks();
        }
        if (offered_bg_bytes > 0)
            r.offered_bg_bps = static_cast<double>(offered_bg_bytes) * 8.0 * 1e6 /
                               static_cast<double>(workload_stop().us);
        r.pings_sent = static_cast<int64_t>(pings.size());
        r.pings_completed = pings_completed;
        r.bg_sent = bg_sent;
        r.bg_completed = bg_completed;
        r.events_fired = stats.events_fired;
        r.ping_trace = pings;
        r.lte_samples = lte_seg.samples();
        r.docsis_samples = docsis_seg.samples();
        r.queue_wait_samples = queue_wait.samples();
        return r;
    }

    ScenarioConfig cfg;
    Engine eng;
    std::vector<ServiceFlow> flows;
    std::unique_ptr<Cmts> cmts;
    std::unique_ptr<CableModem> cm_ut;
    std::vector<std::unique_ptr<CableModem>> bg_cms;
    std::unique_ptr<LteUplink> lte;
    std::unique_ptr<BwrGenerator> bwr_gen;
    std::unique_ptr<BwrApi> api;
    bool lte_enabled = false;

    std::vector<Packet> pings;
    std::map<uint64_t, SimTime> outstanding_bg;
    std::map<uint64_t, SimTime> outstanding_ue_load;
    uint64_t next_bg_id = 0;
    uint64_t next_ue_load_id = 0;
    int64_t offered_bg_bytes = 0;
    int64_t pings_completed = 0;
    int64_t bg_sent = 0;
    int64_t bg_completed = 0;

    LatencySeries lte_seg, docsis_seg, queue_wait, rtt, docsis_bg;
};

} // namespace

RunResult run_scenario(const ScenarioConfig& cfg, TraceSink trace, Cmts::MapLog map_log) {
    Composition comp(cfg);
    if (trace) comp.eng.set_trace_sink(std::move(trace));
    if (map_log) comp.cmts->set_map_log(std::move(map_log));
    comp.start();
    EngineStats stats = comp.eng.run_until(cfg.duration);
    return comp.finish(stats);
}

} // namespace bwrsim
