#include "bwrsim/lte.hpp"

#include <algorithm>
#include <memory>

namespace bwrsim {

void LteConfig::validate() const {
    if (subframe.us <= 0) throw ConfigError("lte.subframe_us must be positive");
    if (sr_period.us <= 0 || sr_period.us % subframe.us != 0)
        throw ConfigError("lte.sr_period_us=" + std::to_string(sr_period.us) +
                          " must be a positive multiple of lte.subframe_us=" +
                          std::to_string(subframe.us));
    if (pipeline_hop < subframe || pipeline_hop.us % subframe.us != 0)
        throw ConfigError("lte.pipeline_hop_us=" + std::to_string(pipeline_hop.us) +
                          " must be a multiple of the subframe and at least one subframe");
    if (bler < 0.0 || bler > 1.0)
        throw ConfigError("lte.bler=" + std::to_string(bler) + " must lie in [0, 1]");
    if (decode_min > decode_max || decode_min.us < 0)
        throw ConfigError("lte.decode_min_us/decode_max_us form an empty range");
    if (sched_offset.us < 0 || sched_offset >= subframe)
        throw ConfigError("lte.sched_offset_us must lie in [0, subframe)");
    if (prb_count <= 0 || bytes_per_prb <= 0)
        throw ConfigError("lte.prb_count and lte.bytes_per_prb must be positive");
    if (ue_count <= 0) throw ConfigError("lte.ue_count must be positive");
}

std::pair<SimTime, SimTime> min_max_uplink_latency(const LteConfig& cfg) {
    SimTime hops = cfg.pipeline_hop * 4;
    SimTime lo = cfg.sched_offset + hops + cfg.decode_min + cfg.air_overhead;
    SimTime hi = cfg.sr_period + cfg.sched_offset + hops + cfg.decode_max + cfg.air_overhead;
    return {lo, hi};
}

LteUplink::LteUplink(Engine& eng, LteConfig cfg) : eng_(eng), cfg_(cfg) {
    cfg_.validate();
    ues_.resize(static_cast<size_t>(cfg_.ue_count));
}

void LteUplink::start() {
    SimTime first = ceil_to(eng_.now(), cfg_.subframe) + cfg_.sched_offset;
    eng_.schedule_at(first, "enb", "sched_tick", [this] { sched_tick(); });
}

int64_t LteUplink::buffered_bytes(int ue) const {
    return ues_.at(static_cast<size_t>(ue)).buffered;
}

int64_t LteUplink::enb_unserved_bytes(int ue) const {
    return ues_.at(static_cast<size_t>(ue)).enb_unserved;
}

void LteUplink::on_ue_data(int ue, uint64_t pkt_id, int64_t bytes, int lcg) {
    if (ue < 0 || ue >= cfg_.ue_count)
        throw ConfigError("lte: unknown ue " + std::to_string(ue));
    if (lcg < 0 || lcg > 3) throw ConfigError("lte: lcg must be 0..3");
    if (bytes <= 0) throw ConfigError("lte: non-positive packet size");
    UeState& u = ues_[static_cast<size_t>(ue)];
    u.queues[static_cast<size_t>(lcg)].push_back({pkt_id, bytes});
    u.unreported[static_cast<size_t>(lcg)] += bytes;
    u.buffered += bytes;
    in_flight_[pkt_id] = {bytes, 0, lcg};
    maybe_raise_sr(ue);
}

void LteUplink::maybe_raise_sr(int ue) {
    UeState& u = ues_[static_cast<size_t>(ue)];
    if (pipeline_active(u) || u.buffered <= 0) return;
    u.sr_pending = true;
    SimTime at = ceil_to(eng_.now(), cfg_.sr_period);
    eng_.schedule_at(at, "ue" + std::to_string(ue), "sr", [this, ue] { fire_sr(ue); });
}

void LteUplink::fire_sr(int ue) {
    UeState& u = ues_[static_cast<size_t>(ue)];
    u.sr_pending = false;
    ++u.reports_in_flight;
    // SR decode + BSR grant + BSR transmission: two pipeline hops.
    eng_.schedule_in(cfg_.pipeline_hop * 2, "ue" + std::to_string(ue), "bsr", [this, ue] {
        UeState& uu = ues_[static_cast<size_t>(ue)];
        --uu.reports_in_flight;
        std::array<int64_t, 4> delta = uu.unreported;
        uu.unreported = {0, 0, 0, 0};
        deliver_report(ue, delta);
        maybe_raise_sr(ue);
    });
}

void LteUplink::deliver_report(int ue, const std::array<int64_t, 4>& delta) {
    UeState& u = ues_[static_cast<size_t>(ue)];
    SimTime eligible = eng_.now() + cfg_.pipeline_hop; // BSR processing hop
    for (size_t lcg = 0; lcg < 4; ++lcg) {
        if (delta[lcg] <= 0) continue;
        u.enb_chunks[lcg].push_back({delta[lcg], eligible});
        u.enb_unserved += delta[lcg];
    }
}

void LteUplink::sched_tick() {
    SimTime d = eng_.now();
    int64_t decision_subframe = (d - cfg_.sched_offset).us / cfg_.subframe.us;
    int64_t capacity = cfg_.subframe_capacity();

    std::vector<UlGrant> grants;
    std::vector<size_t> grant_of_ue(ues_.size(), SIZE_MAX);
    for (size_t lcg = 0; lcg < 4 && capacity > 0; ++lcg) {
        size_t n = ues_.size();
        for (size_t k = 0; k < n && capacity > 0; ++k) {
            size_t ue = (rr_[lcg] + k) % n;
            UeState& u = ues_[ue];
            auto& chunks = u.enb_chunks[lcg];
            int64_t taken = 0;
            while (!chunks.empty() && capacity > 0 && chunks.front().eligible_at <= d) {
                int64_t take = std::min(chunks.front().bytes, capacity);
                chunks.front().bytes -= take;
                if (chunks.front().bytes == 0) chunks.pop_front();
                capacity -= take;
                taken += take;
            }
            if (taken == 0) continue;
            u.enb_unserved -= taken;
            size_t gi = grant_of_ue[ue];
            if (gi == SIZE_MAX) {
                UlGrant g;
                g.ue = static_cast<int>(ue);
                g.decision_subframe = decision_subframe;
                g.tx_subframe = decision_subframe + cfg_.pipeline_hop.us / cfg_.subframe.us;
                grants.push_back(g);
                gi = grants.size() - 1;
                grant_of_ue[ue] = gi;
            }
            grants[gi].bytes += taken;
            grants[gi].lcg_split[lcg] += taken;
        }
        rr_[lcg] = ues_.empty() ? 0 : (rr_[lcg] + 1) % ues_.size();
    }

    for (const auto& g : grants) {
        SimTime decode{eng_.rng("decode").uniform_int(cfg_.decode_min.us, cfg_.decode_max.us)};
        SimTime tx_time = d + cfg_.pipeline_hop;
        ues_[static_cast<size_t>(g.ue)].grants_outstanding++;
        if (grant_sink_) {
            GrantNotice n;
            n.decision_time = d;
            n.decision_subframe = g.decision_subframe;
            n.tx_subframe = g.tx_subframe;
            n.tx_time = tx_time;
            n.total_bytes = g.bytes;
            n.lcg_split = g.lcg_split;
            n.expected_cm_arrival = tx_time + decode + cfg_.air_overhead;
            n.ue = g.ue;
            grant_sink_(n);
        }
        UlGrant grant = g;
        eng_.schedule_at(tx_time, "ue" + std::to_string(g.ue), "ul_tx",
                         [this, grant, decode] { transmit(grant, decode); });
    }

    eng_.schedule_in(cfg_.subframe, "enb", "sched_tick", [this] { sched_tick(); });
}

void LteUplink::transmit(const UlGrant& grant, SimTime decode) {
    UeState& u = ues_[static_cast<size_t>(grant.ue)];
    auto tb = std::make_shared<TransportBlock>();
    tb->ue = grant.ue;
    for (size_t lcg = 0; lcg < 4; ++lcg) {
        int64_t want = grant.lcg_split[lcg];
        auto& q = u.queues[lcg];
        while (want > 0 && !q.empty()) {
            Segment& seg = q.front();
            int64_t take = std::min(want, seg.remaining);
            seg.remaining -= take;
            want -= take;
            u.buffered -= take;
            tb->bytes += take;
            if (!tb->pieces.empty() && tb->pieces.back().first == seg.pkt_id)
                tb->pieces.back().second += take;
            else
                tb->pieces.push_back({seg.pkt_id, take});
            if (seg.remaining == 0) q.pop_front();
        }
    }
    bool has_report = false;
    for (int64_t b : u.unreported)
        if (b > 0) has_report = true;
    if (has_report) {
        tb->report = u.unreported;
        u.unreported = {0, 0, 0, 0};
        ++u.reports_in_flight;
    }
    ++tb_count_;
    attempt(tb, eng_.now(), decode);
}

void LteUplink::attempt(std::shared_ptr<TransportBlock> tb, SimTime tx_time, SimTime decode) {
    bool failed = cfg_.bler > 0.0 && eng_.rng("bler").bernoulli(cfg_.bler);
    std::string who = "ue" + std::to_string(tb->ue);
    if (!failed) {
        // The MAC has the block (and its BSR) at decode time; the data-path
        // calibration overhead only delays the egress toward the CM.
        eng_.schedule_at(tx_time + decode, who, "enb_decode", [this, tb] {
            decode_tb(*tb);
            eng_.schedule_at(eng_.now() + cfg_.air_overhead, "ue" + std::to_string(tb->ue),
                             "enb_egress", [this, tb] { egress_tb(*tb, eng_.now()); });
        });
        return;
    }
    ++harq_retx_;
    // The eNB learns of the failure once the decode attempt completes, plans
    // the retransmission one HARQ turnaround after the original tx, and can
    // announce the new expected arrival ahead of time.
    eng_.schedule_at(tx_time + decode, who, "harq_nack", [this, tb, tx_time] {
        SimTime retx = tx_time + cfg_.harq_rtt;
        SimTime decode2{eng_.rng("decode").uniform_int(cfg_.decode_min.us, cfg_.decode_max.us)};
        if (grant_sink_) {
            GrantNotice n;
            n.decision_time = eng_.now();
            n.decision_subframe = (eng_.now() - cfg_.sched_offset).us / cfg_.subframe.us;
            n.tx_subframe = retx.us / cfg_.subframe.us;
            n.tx_time = retx;
            n.total_bytes = tb->bytes;
            for (const auto& [pkt, bytes] : tb->pieces) {
                auto it = in_flight_.find(pkt);
                if (it != in_flight_.end())
                    n.lcg_split[static_cast<size_t>(it->second.lcg)] += bytes;
            }
            n.expected_cm_arrival = retx + decode2 + cfg_.air_overhead;
            n.ue = tb->ue;
            n.retransmission = true;
            grant_sink_(n);
        }
        eng_.schedule_at(retx, "ue" + std::to_string(tb->ue), "harq_retx",
                         [this, tb, retx, decode2] { attempt(tb, retx, decode2); });
    });
}

void LteUplink::decode_tb(const TransportBlock& tb) {
    UeState& u = ues_[static_cast<size_t>(tb.ue)];
    bool has_report = false;
    for (int64_t b : tb.report)
        if (b > 0) has_report = true;
    if (has_report) {
        --u.reports_in_flight;
        deliver_report(tb.ue, tb.report);
    }
    --u.grants_outstanding;
    maybe_raise_sr(tb.ue);
}

void LteUplink::egress_tb(const TransportBlock& tb, SimTime at) {
    for (const auto& [pkt_id, bytes] : tb.pieces) {
        auto it = in_flight_.find(pkt_id);
        if (it == in_flight_.end()) throw ModelError("egress for unknown packet");
        it->second.delivered += bytes;
        if (it->second.delivered == it->second.total) {
            if (egress_) egress_(pkt_id, it->second.lcg, it->second.total, at);
            in_flight_.erase(it);
        } else if (it->second.delivered > it->second.total) {
            throw ModelError("packet over-delivered at eNB");
        }
    }
}

} // namespace bwrsim
