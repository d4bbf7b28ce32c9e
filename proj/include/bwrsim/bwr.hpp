#pragma once

#include "bwrsim/docsis.hpp"
#include "bwrsim/engine.hpp"
#include "bwrsim/lte.hpp"
#include "bwrsim/time.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace bwrsim {

enum class BwrMode { Bulk, PerLcg };
enum class BwrAggregate { PerMessage, PerSubframe };

// One future-arrival block. In Bulk mode only lcg_bytes[0] is populated
// (the aggregate); in PerLcg mode all four counters are meaningful.
struct BwrEntry {
    SimTime expected_cm_arrival{0};
    std::array<int64_t, 4> lcg_bytes{0, 0, 0, 0};

    int64_t total() const {
        return lcg_bytes[0] + lcg_bytes[1] + lcg_bytes[2] + lcg_bytes[3];
    }
    bool operator==(const BwrEntry&) const = default;
};

struct BwrMessage {
    uint32_t seq = 0;
    SimTime generated_at{0};
    BwrMode mode = BwrMode::Bulk;
    std::vector<BwrEntry> entries;
    int32_t encoded_size = 0; // fixed on-wire size; >= computed minimum
};

// Wire format (little-endian):
//   u32 seq | i64 generated_at_us | u8 mode | u8 entry_count
//   per entry: i64 expected_cm_arrival_us | u32 bytes (Bulk)
//                                         | 4 x u32 bytes (PerLcg)
// padded with zeros up to encoded_size.
int32_t bwr_min_encoded_size(BwrMode mode, size_t entry_count);
std::vector<uint8_t> bwr_encode(const BwrMessage& msg);
BwrMessage bwr_decode(const std::vector<uint8_t>& wire);

struct BwrGenConfig {
    BwrMode mode = BwrMode::Bulk;
    BwrAggregate aggregate = BwrAggregate::PerMessage;
    SimTime period{2000};
    int32_t encoded_size = 80;
};

// eNB-side report builder: consumes grant notices, emits one fixed-size
// message per period (zero-entry messages included) onto the CM's low
// latency flow.
class BwrGenerator {
public:
    using Transport = std::function<void(std::vector<uint8_t> wire, std::function<void(SimTime)> delivered)>;
    using Delivered = std::function<void(const std::vector<uint8_t>& wire, SimTime at)>;

    BwrGenerator(Engine& eng, BwrGenConfig cfg);

    void set_transport(Transport t) { transport_ = std::move(t); }
    void set_receiver(Delivered d) { receiver_ = std::move(d); }
    void start();

    void on_grant_notice(const GrantNotice& n) { pending_.push_back(n); }

    uint32_t messages_sent() const { return seq_; }
    int64_t zero_entry_messages() const { return zero_entry_; }

    // On-wire signaling bytes from messages generated in [from, to), as a
    // bit rate. Exact by construction: every message has the fixed size.
    double signaling_bps(SimTime from, SimTime to) const;

    const std::vector<SimTime>& generation_log() const { return gen_log_; }

private:
    void generate();

    Engine& eng_;
    BwrGenConfig cfg_;
    std::vector<GrantNotice> pending_;
    Transport transport_;
    Delivered receiver_;
    uint32_t seq_ = 0;
    int64_t zero_entry_ = 0;
    SimTime last_gen_{-1};
    std::vector<SimTime> gen_log_;
};

struct BwrApiCounters {
    uint32_t last_seq = 0;
    int64_t messages = 0;
    int64_t duplicates_dropped = 0;
    int64_t seq_gaps = 0;
    int64_t late_entries = 0;
    int64_t records_submitted = 0;
    int64_t requested_bytes = 0;
};

// CMTS-side API: decodes BWRs and feeds the unchanged DOCSIS scheduler
// with ordinary requests carrying an earliest-grant constraint. BWR
// timestamps are in the eNB's clock; clock_offset is the CMTS's view of
// how far that clock runs behind its own (clocks are assumed PTP-synced,
// the knob exposes residual offset only).
class BwrApi {
public:
    BwrApi(Cmts& cmts, BwrMode mode, std::array<uint32_t, 4> lcg_sids,
           SimTime clock_offset = SimTime{0});

    void on_wire(const std::vector<uint8_t>& wire, SimTime at);
    void on_message(const BwrMessage& msg, SimTime at);

    const BwrApiCounters& counters() const { return counters_; }

private:
    Cmts& cmts_;
    BwrMode mode_;
    std::array<uint32_t, 4> lcg_sids_;
    SimTime clock_offset_{0};
    BwrApiCounters counters_;
};

} // namespace bwrsim
