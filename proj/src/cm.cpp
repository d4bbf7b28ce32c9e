#include "bwrsim/docsis.hpp"

#include <algorithm>

namespace bwrsim {

CableModem::CableModem(Engine& eng, Cmts& cmts, int index)
    : eng_(eng), cmts_(cmts), index_(index) {
    for (const auto& f : cmts.flows()) {
        if (f.owner_cm == index) flows_[f.sid].cfg = &f;
    }
    cmts.attach_cm(this);
}

CableModem::FlowState& CableModem::flow(uint32_t sid) {
    auto it = flows_.find(sid);
    if (it == flows_.end())
        throw ConfigError(name() + ": unknown service flow sid=" + std::to_string(sid));
    return it->second;
}

int64_t CableModem::queued_bytes(uint32_t sid) const {
    auto it = flows_.find(sid);
    return it == flows_.end() ? 0 : it->second.queued_bytes;
}

int64_t CableModem::control_queue_depth(uint32_t sid) const {
    auto it = flows_.find(sid);
    return it == flows_.end() ? 0 : static_cast<int64_t>(it->second.control.size());
}

int64_t CableModem::need_bytes(const FlowState& f) const {
    int64_t control = 0;
    for (const auto& c : f.control) control += c.bytes;
    int64_t need = f.queued_bytes + control - f.granted_upcoming - f.requested_outstanding;
    return std::max<int64_t>(need, 0);
}

void CableModem::on_data(uint32_t sid, uint64_t pkt_id, int64_t wire_bytes) {
    if (wire_bytes <= 0) throw ConfigError(name() + ": packet with non-positive size");
    FlowState& f = flow(sid);
    f.queue.push_back({pkt_id, wire_bytes, wire_bytes});
    f.queued_bytes += wire_bytes;
    maybe_request(sid);
}

void CableModem::enqueue_control(uint32_t sid, int32_t wire_bytes, ControlDelivered cb) {
    FlowState& f = flow(sid);
    if (f.cfg->kind == FlowKind::Ugs) {
        if (wire_bytes > f.cfg->ugs_grant_size)
            throw ConfigError(name() + ": control payload of " + std::to_string(wire_bytes) +
                              " B exceeds UGS grant size " + std::to_string(f.cfg->ugs_grant_size) +
                              " B on sid " + std::to_string(sid));
    }
    f.control.push_back({wire_bytes, std::move(cb)});
    if (f.cfg->kind == FlowKind::Be) maybe_request(sid);
}

void CableModem::maybe_request(uint32_t sid) {
    FlowState& f = flow(sid);
    if (f.cfg->kind != FlowKind::Be) return; // UGS is unsolicited, RTPS requests at polls
    if (f.attempt_in_flight) return;
    int64_t need = need_bytes(f);
    if (need <= 0) {
        f.want_request = false;
        return;
    }
    // With grants already on the way the cheaper path is a piggyback
    // request on the next transmission.
    if (cmts_.phy().piggyback && f.granted_upcoming > 0) return;
    schedule_contention_attempt(sid);
}

void CableModem::schedule_contention_attempt(uint32_t sid) {
    FlowState& f = flow(sid);
    int exp = std::min(f.cfg->backoff_start_exp + f.backoff_fails, f.cfg->backoff_end_exp);
    int64_t window = int64_t{1} << exp;
    int64_t defer = eng_.rng("backoff/" + name()).uniform_int(0, window - 1);
    auto slot = pick_contention_slot(eng_.now(), static_cast<int>(defer));
    if (!slot) {
        f.want_request = true; // no known contention slots yet; retry on next MAP
        return;
    }
    f.attempt_in_flight = true;
    f.want_request = false;
    int64_t s = *slot;
    eng_.schedule_at(cmts_.phy().slot_time(s), name(), "cont_req", [this, sid, s] {
        FlowState& fl = flow(sid);
        int64_t bytes = need_bytes(fl);
        if (bytes <= 0) {
            fl.attempt_in_flight = false;
            return;
        }
        fl.attempt_bytes = bytes;
        fl.requested_outstanding += bytes;
        cmts_.on_contention_attempt(s, sid, bytes, this);
    });
}

std::optional<int64_t> CableModem::pick_contention_slot(SimTime after, int skip) {
    int64_t min_slot = cmts_.phy().slot_at_or_after(after);
    for (const auto& run : contention_) {
        int64_t first = std::max(run.start_slot, min_slot);
        int64_t avail = run.start_slot + run.count - first;
        if (avail <= 0) continue;
        if (skip < avail) return first + skip;
        skip -= static_cast<int>(avail);
    }
    return std::nullopt;
}

void CableModem::on_req_outcome(uint32_t sid, bool acked) {
    FlowState& f = flow(sid);
    f.attempt_in_flight = false;
    if (acked) {
        f.backoff_fails = 0;
    } else {
        f.requested_outstanding -= f.attempt_bytes;
        if (f.requested_outstanding < 0) f.requested_outstanding = 0;
        ++f.backoff_fails;
    }
    f.attempt_bytes = 0;
    maybe_request(sid);
}

void CableModem::on_map(const MapMessage& map) {
    int64_t horizon = cmts_.phy().slot_at_or_after(eng_.now());
    for (const auto& e : map.elements) {
        switch (e.kind) {
            case ElemKind::Contention:
                contention_.push_back({e.start_slot, e.slot_count});
                break;
            case ElemKind::Grant: {
                auto it = flows_.find(e.sid);
                if (it == flows_.end()) break;
                FlowState& f = it->second;
                f.granted_upcoming += e.granted_bytes;
                f.requested_outstanding =
                    std::max<int64_t>(0, f.requested_outstanding - e.granted_bytes);
                MapElement elem = e;
                eng_.schedule_at(cmts_.phy().slot_time(e.start_slot), name(), "grant_tx",
                                 [this, elem] { fire_grant(elem); });
                break;
            }
            case ElemKind::RtpsPoll: {
                auto it = flows_.find(e.sid);
                if (it == flows_.end()) break;
                MapElement elem = e;
                eng_.schedule_at(cmts_.phy().slot_time(e.start_slot), name(), "rtps_poll",
                                 [this, elem] { fire_rtps_poll(elem); });
                break;
            }
        }
    }
    // prune stale contention knowledge
    while (!contention_.empty() &&
           contention_.front().start_slot + contention_.front().count <= horizon)
        contention_.erase(contention_.begin());

    for (auto& [sid, f] : flows_) {
        if (f.want_request && !f.attempt_in_flight && need_bytes(f) > 0) {
            maybe_request(sid);
        }
    }
}

void CableModem::fire_grant(MapElement elem) {
    FlowState& f = flow(elem.sid);
    f.granted_upcoming = std::max<int64_t>(0, f.granted_upcoming - elem.granted_bytes);

    int64_t budget = elem.granted_bytes;
    int64_t control_sent = 0;
    std::vector<ControlDelivered> ctrl_cbs;
    while (!f.control.empty() && f.control.front().bytes <= budget) {
        budget -= f.control.front().bytes;
        control_sent += f.control.front().bytes;
        ctrl_cbs.push_back(std::move(f.control.front().cb));
        f.control.pop_front();
    }

    int64_t data_sent = 0;
    std::vector<uint64_t> completed;
    while (budget > 0 && !f.queue.empty()) {
        Segment& seg = f.queue.front();
        if (seg.remaining == seg.total && first_service_)
            first_service_(seg.pkt_id, eng_.now());
        int64_t take = std::min(budget, seg.remaining);
        seg.remaining -= take;
        budget -= take;
        data_sent += take;
        f.queued_bytes -= take;
        if (seg.remaining == 0) {
            completed.push_back(seg.pkt_id);
            f.queue.pop_front();
        }
    }

    int64_t piggyback = 0;
    if (cmts_.phy().piggyback && f.cfg->kind == FlowKind::Be) {
        piggyback = need_bytes(f);
        if (piggyback > 0) f.requested_outstanding += piggyback;
    }

    deliver_grant(elem, data_sent, control_sent, std::move(completed), std::move(ctrl_cbs),
                  piggyback);
}

void CableModem::deliver_grant(const MapElement& elem, int64_t data_sent, int64_t control_sent,
                               std::vector<uint64_t> completed,
                               std::vector<ControlDelivered> ctrl_cbs, int64_t piggyback_bytes) {
    SimTime end = cmts_.phy().slot_time(elem.start_slot + elem.slot_count);
    int64_t sent = data_sent + control_sent;
    uint32_t sid = elem.sid;
    eng_.schedule_at(end, name(), "grant_rx",
                     [this, elem, sent, completed = std::move(completed),
                      ctrl_cbs = std::move(ctrl_cbs), piggyback_bytes, sid] {
                         SimTime at = eng_.now();
                         cmts_.on_upstream_frame(elem, sent, completed, at);
                         for (const auto& cb : ctrl_cbs)
                             if (cb) cb(at);
                         if (piggyback_bytes > 0)
                             cmts_.submit_request(sid, piggyback_bytes, SimTime{0},
                                                  ReqOrigin::Piggyback);
                     });
}

void CableModem::fire_rtps_poll(MapElement elem) {
    FlowState& f = flow(elem.sid);
    int64_t need = need_bytes(f);
    if (need <= 0) return;
    f.requested_outstanding += need;
    SimTime end = cmts_.phy().slot_time(elem.start_slot + elem.slot_count);
    uint32_t sid = elem.sid;
    eng_.schedule_at(end, name(), "rtps_req", [this, sid, need] {
        cmts_.submit_request(sid, need, SimTime{0}, ReqOrigin::Rtps);
    });
}

} // namespace bwrsim
