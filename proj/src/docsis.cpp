#include "bwrsim/docsis.hpp"

#include <algorithm>
#include <cstdio>

namespace bwrsim {

const char* to_string(FlowKind k) {
    switch (k) {
        case FlowKind::Be: return "BE";
        case FlowKind::Rtps: return "RTPS";
        case FlowKind::Ugs: return "UGS";
    }
    return "?";
}

const char* to_string(ReqOrigin o) {
    switch (o) {
        case ReqOrigin::Contention: return "contention";
        case ReqOrigin::Piggyback: return "piggyback";
        case ReqOrigin::Rtps: return "rtps";
        case ReqOrigin::BwrApi: return "bwr-api";
        case ReqOrigin::Ugs: return "ugs";
    }
    return "?";
}

void PhyConfig::validate() const {
    if (symbol_rate <= 0 || bits_per_symbol <= 0 || minislot_symbols <= 0)
        throw ConfigError("docsis: symbol_rate, bits_per_symbol and minislot_symbols must be positive");
    if ((minislot_symbols * bits_per_symbol) % 8 != 0)
        throw ConfigError("docsis: minislot payload is not a whole number of bytes (minislot_symbols=" +
                          std::to_string(minislot_symbols) + ", bits_per_symbol=" +
                          std::to_string(bits_per_symbol) + ")");
    int64_t num = map_interval.us * symbol_rate;
    int64_t den = static_cast<int64_t>(minislot_symbols) * 1'000'000;
    if (num % den != 0)
        throw ConfigError("docsis.map_interval_us=" + std::to_string(map_interval.us) +
                          " is not an exact multiple of the minislot duration (" +
                          std::to_string(minislot_symbols) + " symbols at " +
                          std::to_string(symbol_rate) + " sym/s)");
    if (map_lookahead < ds_delay)
        throw ConfigError("docsis.map_lookahead_us=" + std::to_string(map_lookahead.us) +
                          " must be >= docsis.ds_delay_us=" + std::to_string(ds_delay.us) +
                          " or grants start before the MAP reaches the CM");
    if (req_proc.us < 0 || jit_guard.us < 0)
        throw ConfigError("docsis: req_proc_us and jit_guard_us must be non-negative");
}

Cmts::Cmts(Engine& eng, PhyConfig phy, std::vector<ServiceFlow> flows)
    : eng_(eng), phy_(phy), flows_(std::move(flows)) {
    phy_.validate();
    for (const auto& f : flows_) {
        if (f.kind == FlowKind::Ugs) {
            if (f.ugs_grants_per_interval <= 0 ||
                f.ugs_interval.us % f.ugs_grants_per_interval != 0)
                throw ConfigError("ugs.grant_interval_us=" + std::to_string(f.ugs_interval.us) +
                                  " must divide evenly by ugs.grants_per_interval=" +
                                  std::to_string(f.ugs_grants_per_interval));
            if (f.ugs_grant_size <= 0)
                throw ConfigError("ugs.grant_size_bytes must be positive");
            int64_t slots = phy_.slots_for_bytes(f.ugs_grant_size);
            if (slots > phy_.slots_per_map())
                throw ConfigError("UGS grant of " + std::to_string(f.ugs_grant_size) +
                                  " bytes does not fit in one MAP");
        }
    }
}

const ServiceFlow* Cmts::flow(uint32_t sid) const {
    for (const auto& f : flows_)
        if (f.sid == sid) return &f;
    return nullptr;
}

int64_t Cmts::pending_bytes() const {
    int64_t total = 0;
    for (const auto& r : pending_) total += r.bytes;
    return total;
}

void Cmts::start() {
    schedule_build(eng_.now());
}

void Cmts::schedule_build(SimTime t) {
    eng_.schedule_at(t, "cmts", "map_build", [this] {
        SimTime now = eng_.now();
        MapMessage map = build_map(now);
        if (keep_history_) map_history_.push_back(map);
        auto shared = std::make_shared<MapMessage>(std::move(map));
        eng_.schedule_in(phy_.ds_delay, "cmts", "map_deliver", [this, shared] {
            for (auto* cm : cms_) cm->on_map(*shared);
        });
        schedule_build(now + phy_.map_interval);
    });
}

void Cmts::submit_request(uint32_t sid, int64_t bytes, SimTime earliest, ReqOrigin origin) {
    if (bytes <= 0) return;
    if (earliest.us != 0 && origin != ReqOrigin::BwrApi)
        throw ModelError("earliest_grant constraints are reserved for API-translated requests");
    ReqRecord r;
    r.sid = sid;
    r.bytes = bytes;
    r.arrival = eng_.now();
    r.queued_since = r.arrival;
    if (earliest > r.arrival) {
        SimTime natural = earliest - phy_.map_lookahead - phy_.map_interval;
        if (natural > r.queued_since) r.queued_since = natural;
    }
    r.earliest_grant = earliest;
    r.origin = origin;
    r.order = next_order_++;
    pending_.push_back(r);
    ++counters_.requests_accepted;
}

void Cmts::on_contention_attempt(int64_t slot, uint32_t sid, int64_t bytes, CableModem* sender) {
    ++counters_.contention_attempts;
    auto& lst = slot_attempts_[slot];
    lst.push_back({sender, {sid, bytes}});
    if (lst.size() == 1) {
        eng_.schedule_at(phy_.slot_time(slot + 1), "cmts", "cont_resolve",
                         [this, slot] { resolve_contention_slot(slot); });
    }
}

void Cmts::resolve_contention_slot(int64_t slot) {
    auto it = slot_attempts_.find(slot);
    if (it == slot_attempts_.end()) return;
    auto attempts = std::move(it->second);
    slot_attempts_.erase(it);

    SimTime now = eng_.now();
    // The sender learns the outcome from the first MAP that could have
    // carried its grant or a pending acknowledgement.
    SimTime learn = eligible_build(now) + phy_.ds_delay;
    bool ok = attempts.size() == 1;
    if (ok) {
        submit_request(attempts[0].second.first, attempts[0].second.second, SimTime{0},
                       ReqOrigin::Contention);
    } else {
        counters_.contention_collisions += static_cast<int64_t>(attempts.size());
    }
    for (auto& [cm, req] : attempts) {
        uint32_t sid = req.first;
        eng_.schedule_at(learn, "cmts", ok ? "req_ack" : "req_lost",
                         [cm, sid, ok] { cm->on_req_outcome(sid, ok); });
    }
}

MapMessage Cmts::build_map(SimTime now) {
    MapMessage map;
    map.map_id = next_map_id_++;
    map.built_at = now;
    map.start_slot = phy_.slot_at_or_after(now + phy_.map_lookahead);
    map.end_slot = map.start_slot + phy_.slots_per_map();
    ++counters_.maps_built;

    std::vector<uint8_t> used(static_cast<size_t>(map.end_slot - map.start_slot), 0);
    place_ugs_grants(map, used);
    place_rtps_polls(map, used);
    place_requests(map, used);
    fill_contention(map, used);

    std::sort(map.elements.begin(), map.elements.end(),
              [](const MapElement& a, const MapElement& b) { return a.start_slot < b.start_slot; });
    check_tiling(map);

    counters_.slots_total += map.end_slot - map.start_slot;
    for (const auto& e : map.elements) {
        if (e.kind == ElemKind::Grant) counters_.slots_granted += e.slot_count;
        if (e.kind == ElemKind::Contention) counters_.slots_contention += e.slot_count;
    }

    if (map_log_) {
        int64_t grants = 0, cont = 0;
        for (const auto& e : map.elements) {
            if (e.kind == ElemKind::Grant) ++grants;
            if (e.kind == ElemKind::Contention) cont += e.slot_count;
        }
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%llu\t%lld\t%lld\t%lld\t%lld",
                      static_cast<unsigned long long>(map.map_id),
                      static_cast<long long>(phy_.slot_time(map.start_slot).us),
                      static_cast<long long>(grants), static_cast<long long>(cont),
                      static_cast<long long>(counters_.jit_wasted_bytes + counters_.be_wasted_bytes +
                                             counters_.ugs_padding_bytes));
        map_log_(buf);
    }
    return map;
}

void Cmts::place_ugs_grants(MapMessage& map, std::vector<uint8_t>& used) {
    SimTime region_start = phy_.slot_time(map.start_slot);
    SimTime region_end = phy_.slot_time(map.end_slot);
    for (const auto& f : flows_) {
        if (f.kind != FlowKind::Ugs) continue;
        SimTime cadence = f.ugs_interval / f.ugs_grants_per_interval;
        int64_t n = 0;
        if (region_start > f.ugs_phase)
            n = (region_start - f.ugs_phase + cadence - SimTime{1}).us / cadence.us;
        int64_t size_slots = phy_.slots_for_bytes(f.ugs_grant_size);
        for (;; ++n) {
            SimTime nominal = f.ugs_phase + cadence * n;
            if (nominal >= region_end) break;
            if (nominal < region_start) continue;
            SimTime target = nominal;
            if (f.ugs_jitter.us > 0)
                target += SimTime{eng_.rng("ugs").uniform_int(0, f.ugs_jitter.us)};
            int64_t slot = std::max(map.start_slot, phy_.slot_at_or_after(target));
            slot = std::min(slot, map.end_slot - size_slots);
            // first free position at or after the jittered target
            while (slot + size_slots <= map.end_slot) {
                bool free = true;
                for (int64_t s = slot; s < slot + size_slots; ++s)
                    if (used[static_cast<size_t>(s - map.start_slot)]) { free = false; break; }
                if (free) break;
                ++slot;
            }
            if (slot + size_slots > map.end_slot)
                throw ModelError("UGS grants for sid " + std::to_string(f.sid) +
                                 " do not fit their MAP region");
            for (int64_t s = slot; s < slot + size_slots; ++s)
                used[static_cast<size_t>(s - map.start_slot)] = 1;
            MapElement e;
            e.kind = ElemKind::Grant;
            e.sid = f.sid;
            e.start_slot = slot;
            e.slot_count = size_slots;
            e.granted_bytes = f.ugs_grant_size;
            e.origin = ReqOrigin::Ugs;
            map.elements.push_back(e);
        }
    }
}

void Cmts::place_rtps_polls(MapMessage& map, std::vector<uint8_t>& used) {
    SimTime region_start = phy_.slot_time(map.start_slot);
    SimTime region_end = phy_.slot_time(map.end_slot);
    for (const auto& f : flows_) {
        if (f.kind != FlowKind::Rtps) continue;
        SimTime period = f.rtps_poll_interval;
        int64_t n = region_start.us > 0 ? (region_start.us + period.us - 1) / period.us : 0;
        for (;; ++n) {
            SimTime nominal{n * period.us};
            if (nominal >= region_end) break;
            if (nominal < region_start) continue;
            int64_t slot = std::max(map.start_slot, phy_.slot_at_or_after(nominal));
            while (slot < map.end_slot && used[static_cast<size_t>(slot - map.start_slot)]) ++slot;
            if (slot >= map.end_slot) break;
            used[static_cast<size_t>(slot - map.start_slot)] = 1;
            MapElement e;
            e.kind = ElemKind::RtpsPoll;
            e.sid = f.sid;
            e.start_slot = slot;
            e.slot_count = 1;
            e.granted_bytes = 0;
            e.origin = ReqOrigin::Rtps;
            map.elements.push_back(e);
        }
    }
}

void Cmts::place_requests(MapMessage& map, std::vector<uint8_t>& used) {
    SimTime deadline = map.built_at - phy_.req_proc;

    std::vector<size_t> order(pending_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [this](size_t a, size_t b) {
        const ServiceFlow* fa = flow(pending_[a].sid);
        const ServiceFlow* fb = flow(pending_[b].sid);
        int pa = fa ? fa->priority : 10;
        int pb = fb ? fb->priority : 10;
        if (pa != pb) return pa < pb;
        if (pending_[a].queued_since != pending_[b].queued_since)
            return pending_[a].queued_since < pending_[b].queued_since;
        return pending_[a].order < pending_[b].order;
    });

    int32_t payload = phy_.slot_payload_bytes();
    for (size_t idx : order) {
        ReqRecord& r = pending_[idx];
        if (r.arrival > deadline) continue;
        int64_t min_slot = map.start_slot;
        if (r.origin == ReqOrigin::BwrApi && r.earliest_grant.us > 0) {
            SimTime not_before = r.earliest_grant + phy_.jit_guard;
            min_slot = std::max(min_slot, phy_.slot_at_or_after(not_before));
            if (min_slot >= map.end_slot) continue; // deferred to a later MAP
        }
        int64_t slot = min_slot;
        while (r.bytes > 0 && slot < map.end_slot) {
            while (slot < map.end_slot && used[static_cast<size_t>(slot - map.start_slot)]) ++slot;
            if (slot >= map.end_slot) break;
            int64_t run_end = slot;
            while (run_end < map.end_slot && !used[static_cast<size_t>(run_end - map.start_slot)])
                ++run_end;
            int64_t want = phy_.slots_for_bytes(r.bytes);
            int64_t take = std::min(want, run_end - slot);
            int64_t bytes = std::min<int64_t>(r.bytes, take * payload);
            for (int64_t s = slot; s < slot + take; ++s)
                used[static_cast<size_t>(s - map.start_slot)] = 1;
            MapElement e;
            e.kind = ElemKind::Grant;
            e.sid = r.sid;
            e.start_slot = slot;
            e.slot_count = take;
            e.granted_bytes = bytes;
            e.origin = r.origin;
            if (r.origin == ReqOrigin::BwrApi &&
                phy_.slot_time(slot) < r.earliest_grant + phy_.jit_guard)
                ++counters_.no_early_grant_violations;
            map.elements.push_back(e);
            r.bytes -= bytes;
            slot += take;
        }
    }
    pending_.erase(std::remove_if(pending_.begin(), pending_.end(),
                                  [](const ReqRecord& r) { return r.bytes <= 0; }),
                   pending_.end());
}

void Cmts::fill_contention(MapMessage& map, std::vector<uint8_t>& used) {
    int64_t n = map.end_slot - map.start_slot;
    int64_t i = 0;
    while (i < n) {
        while (i < n && used[static_cast<size_t>(i)]) ++i;
        if (i >= n) break;
        int64_t j = i;
        while (j < n && !used[static_cast<size_t>(j)]) ++j;
        MapElement e;
        e.kind = ElemKind::Contention;
        e.start_slot = map.start_slot + i;
        e.slot_count = j - i;
        map.elements.push_back(e);
        i = j;
    }
}

void Cmts::check_tiling(const MapMessage& map) const {
    int64_t expect = map.start_slot;
    for (const auto& e : map.elements) {
        if (e.start_slot != expect)
            throw ModelError("MAP " + std::to_string(map.map_id) + " does not tile: slot " +
                             std::to_string(expect) + " uncovered");
        if (e.granted_bytes > e.slot_count * phy_.slot_payload_bytes())
            throw ModelError("MAP grant exceeds minislot payload capacity");
        expect += e.slot_count;
    }
    if (expect != map.end_slot)
        throw ModelError("MAP " + std::to_string(map.map_id) + " does not cover its range");
}

void Cmts::on_upstream_frame(const MapElement& elem, int64_t sent_bytes,
                             const std::vector<uint64_t>& completed, SimTime at) {
    int64_t wasted = elem.granted_bytes - sent_bytes;
    switch (elem.origin) {
        case ReqOrigin::Ugs:
            counters_.ugs_granted_bytes += elem.granted_bytes;
            counters_.ugs_padding_bytes += wasted;
            break;
        case ReqOrigin::BwrApi:
            counters_.jit_granted_bytes += elem.granted_bytes;
            counters_.jit_wasted_bytes += wasted;
            break;
        default:
            counters_.be_granted_bytes += elem.granted_bytes;
            counters_.be_wasted_bytes += wasted;
            break;
    }
    counters_.delivered_bytes += sent_bytes;
    if (delivery_sink_ && !completed.empty()) {
        UpstreamDelivery d;
        d.sid = elem.sid;
        d.completed_packets = completed;
        d.bytes = sent_bytes;
        d.at = at;
        delivery_sink_(d);
    }
}

} // namespace bwrsim
