#include "bwrsim/bwr.hpp"

#include <algorithm>
#include <map>

namespace bwrsim {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_i64(std::vector<uint8_t>& out, int64_t v) {
    auto u = static_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(u >> (8 * i)));
}

uint32_t get_u32(const std::vector<uint8_t>& in, size_t& pos) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in.at(pos++)) << (8 * i);
    return v;
}

int64_t get_i64(const std::vector<uint8_t>& in, size_t& pos) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in.at(pos++)) << (8 * i);
    return static_cast<int64_t>(v);
}

} // namespace

int32_t bwr_min_encoded_size(BwrMode mode, size_t entry_count) {
    int32_t per_entry = mode == BwrMode::Bulk ? 12 : 24;
    return 14 + static_cast<int32_t>(entry_count) * per_entry;
}

std::vector<uint8_t> bwr_encode(const BwrMessage& msg) {
    if (msg.entries.size() > 255) throw ConfigError("BWR with more than 255 entries");
    int32_t need = bwr_min_encoded_size(msg.mode, msg.entries.size());
    if (msg.encoded_size < need)
        throw ConfigError("bwr.encoded_size=" + std::to_string(msg.encoded_size) +
                          " too small for " + std::to_string(msg.entries.size()) +
                          " entries (need " + std::to_string(need) + " B)");
    std::vector<uint8_t> out;
    out.reserve(static_cast<size_t>(msg.encoded_size));
    put_u32(out, msg.seq);
    put_i64(out, msg.generated_at.us);
    out.push_back(msg.mode == BwrMode::Bulk ? 0 : 1);
    out.push_back(static_cast<uint8_t>(msg.entries.size()));
    for (const auto& e : msg.entries) {
        put_i64(out, e.expected_cm_arrival.us);
        if (msg.mode == BwrMode::Bulk) {
            put_u32(out, static_cast<uint32_t>(e.lcg_bytes[0]));
        } else {
            for (int64_t b : e.lcg_bytes) put_u32(out, static_cast<uint32_t>(b));
        }
    }
    out.resize(static_cast<size_t>(msg.encoded_size), 0);
    return out;
}

BwrMessage bwr_decode(const std::vector<uint8_t>& wire) {
    BwrMessage msg;
    size_t pos = 0;
    msg.seq = get_u32(wire, pos);
    msg.generated_at = SimTime{get_i64(wire, pos)};
    uint8_t mode = wire.at(pos++);
    if (mode > 1) throw ConfigError("BWR decode: unknown mode byte");
    msg.mode = mode == 0 ? BwrMode::Bulk : BwrMode::PerLcg;
    uint8_t count = wire.at(pos++);
    for (uint8_t i = 0; i < count; ++i) {
        BwrEntry e;
        e.expected_cm_arrival = SimTime{get_i64(wire, pos)};
        if (msg.mode == BwrMode::Bulk) {
            e.lcg_bytes[0] = get_u32(wire, pos);
        } else {
            for (auto& b : e.lcg_bytes) b = get_u32(wire, pos);
        }
        msg.entries.push_back(e);
    }
    msg.encoded_size = static_cast<int32_t>(wire.size());
    return msg;
}

BwrGenerator::BwrGenerator(Engine& eng, BwrGenConfig cfg) : eng_(eng), cfg_(cfg) {
    if (cfg_.period.us <= 0) throw ConfigError("bwr.period_us must be positive");
    if (cfg_.encoded_size < bwr_min_encoded_size(cfg_.mode, 0))
        throw ConfigError("bwr.encoded_size too small for an empty message");
}

void BwrGenerator::start() {
    SimTime first = ceil_to(eng_.now(), cfg_.period);
    eng_.schedule_at(first, "bwr_gen", "bwr_gen", [this] { generate(); });
}

void BwrGenerator::generate() {
    SimTime now = eng_.now();
    if (last_gen_.us >= 0 && now <= last_gen_)
        throw ModelError("BWR generation windows overlap");
    last_gen_ = now;

    BwrMessage msg;
    msg.seq = ++seq_;
    msg.generated_at = now;
    msg.mode = cfg_.mode;
    msg.encoded_size = cfg_.encoded_size;

    if (!pending_.empty()) {
        if (cfg_.aggregate == BwrAggregate::PerMessage) {
            BwrEntry e;
            for (const auto& n : pending_) {
                if (n.expected_cm_arrival > e.expected_cm_arrival)
                    e.expected_cm_arrival = n.expected_cm_arrival;
                if (cfg_.mode == BwrMode::Bulk) {
                    e.lcg_bytes[0] += n.total_bytes;
                } else {
                    for (size_t i = 0; i < 4; ++i) e.lcg_bytes[i] += n.lcg_split[i];
                }
            }
            msg.entries.push_back(e);
        } else {
            std::map<SimTime, BwrEntry> by_tx;
            for (const auto& n : pending_) {
                BwrEntry& e = by_tx[n.tx_time];
                if (n.expected_cm_arrival > e.expected_cm_arrival)
                    e.expected_cm_arrival = n.expected_cm_arrival;
                if (cfg_.mode == BwrMode::Bulk) {
                    e.lcg_bytes[0] += n.total_bytes;
                } else {
                    for (size_t i = 0; i < 4; ++i) e.lcg_bytes[i] += n.lcg_split[i];
                }
            }
            for (auto& [tx, e] : by_tx) msg.entries.push_back(e);
        }
        pending_.clear();
    } else {
        ++zero_entry_;
    }

    for (const auto& e : msg.entries) {
        if (e.expected_cm_arrival <= now)
            throw ModelError("BWR entry with a non-future expected arrival");
    }

    gen_log_.push_back(now);
    std::vector<uint8_t> wire = bwr_encode(msg);
    if (transport_) {
        auto recv = receiver_;
        auto shared = std::make_shared<std::vector<uint8_t>>(std::move(wire));
        transport_(*shared, [recv, shared](SimTime at) {
            if (recv) recv(*shared, at);
        });
    }

    eng_.schedule_in(cfg_.period, "bwr_gen", "bwr_gen", [this] { generate(); });
}

double BwrGenerator::signaling_bps(SimTime from, SimTime to) const {
    if (to <= from) return 0.0;
    int64_t bytes = 0;
    for (SimTime g : gen_log_) {
        if (g >= from && g < to) bytes += cfg_.encoded_size;
    }
    return static_cast<double>(bytes) * 8.0 * 1e6 / static_cast<double>((to - from).us);
}

BwrApi::BwrApi(Cmts& cmts, BwrMode mode, std::array<uint32_t, 4> lcg_sids, SimTime clock_offset)
    : cmts_(cmts), mode_(mode), lcg_sids_(lcg_sids), clock_offset_(clock_offset) {}

void BwrApi::on_wire(const std::vector<uint8_t>& wire, SimTime at) {
    on_message(bwr_decode(wire), at);
}

void BwrApi::on_message(const BwrMessage& msg, SimTime at) {
    if (msg.seq <= counters_.last_seq) {
        ++counters_.duplicates_dropped;
        return;
    }
    counters_.seq_gaps += static_cast<int64_t>(msg.seq) - counters_.last_seq - 1;
    counters_.last_seq = msg.seq;
    ++counters_.messages;

    int32_t overhead = cmts_.phy().per_frame_overhead;
    for (const auto& e : msg.entries) {
        SimTime earliest = e.expected_cm_arrival + clock_offset_;
        if (earliest < at) {
            ++counters_.late_entries;
            earliest = at;
        }
        if (mode_ == BwrMode::Bulk) {
            int64_t bytes = e.lcg_bytes[0];
            if (bytes <= 0) continue;
            cmts_.submit_request(lcg_sids_[0], bytes + overhead, earliest, ReqOrigin::BwrApi);
            ++counters_.records_submitted;
            counters_.requested_bytes += bytes + overhead;
        } else {
            for (size_t i = 0; i < 4; ++i) {
                int64_t bytes = e.lcg_bytes[i];
                if (bytes <= 0) continue;
                cmts_.submit_request(lcg_sids_[i], bytes + overhead, earliest, ReqOrigin::BwrApi);
                ++counters_.records_submitted;
                counters_.requested_bytes += bytes + overhead;
            }
        }
    }
}

} // namespace bwrsim
