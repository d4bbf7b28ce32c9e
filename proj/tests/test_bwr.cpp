#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bwrsim/bwr.hpp"
#include "bwrsim/docsis.hpp"
#include "bwrsim/engine.hpp"

#include <memory>
#include <vector>

using namespace bwrsim;

namespace {

GrantNotice notice(SimTime decision, SimTime tx, int64_t bytes, std::array<int64_t, 4> split,
                   SimTime expected) {
    GrantNotice n;
    n.decision_time = decision;
    n.tx_time = tx;
    n.total_bytes = bytes;
    n.lcg_split = split;
    n.expected_cm_arrival = expected;
    return n;
}

} // namespace

TEST_CASE("encode-decode is the identity over generated messages") {
    RngStream rng(99, "codec_prop");
    for (int iter = 0; iter < 500; ++iter) {
        BwrMessage m;
        m.seq = static_cast<uint32_t>(rng.uniform_int(1, 1 << 30));
        m.generated_at = SimTime{rng.uniform_int(0, 3'600'000'000LL)};
        m.mode = rng.bernoulli(0.5) ? BwrMode::Bulk : BwrMode::PerLcg;
        int entries = static_cast<int>(rng.uniform_int(0, 5));
        for (int e = 0; e < entries; ++e) {
            BwrEntry entry;
            entry.expected_cm_arrival = m.generated_at + SimTime{rng.uniform_int(1, 50000)};
            if (m.mode == BwrMode::Bulk) {
                entry.lcg_bytes[0] = rng.uniform_int(0, 100000);
            } else {
                for (auto& b : entry.lcg_bytes) b = rng.uniform_int(0, 100000);
            }
            m.entries.push_back(entry);
        }
        m.encoded_size = bwr_min_encoded_size(m.mode, m.entries.size()) +
                         static_cast<int32_t>(rng.uniform_int(0, 40));
        auto wire = bwr_encode(m);
        CHECK(wire.size() == static_cast<size_t>(m.encoded_size));
        BwrMessage back = bwr_decode(wire);
        CHECK(back.seq == m.seq);
        CHECK(back.generated_at == m.generated_at);
        CHECK(back.mode == m.mode);
        CHECK(back.entries == m.entries);
        CHECK(back.encoded_size == m.encoded_size);
    }
}

TEST_CASE("an 80 B budget holds the testbed-sized messages") {
    CHECK(bwr_min_encoded_size(BwrMode::Bulk, 0) == 14);
    CHECK(bwr_min_encoded_size(BwrMode::Bulk, 2) == 38);
    CHECK(bwr_min_encoded_size(BwrMode::PerLcg, 2) == 62);
    CHECK(bwr_min_encoded_size(BwrMode::Bulk, 2) <= 80);
    CHECK(bwr_min_encoded_size(BwrMode::PerLcg, 2) <= 80);
}

TEST_CASE("a message that does not fit its fixed size is rejected") {
    BwrMessage m;
    m.seq = 1;
    m.mode = BwrMode::PerLcg;
    m.entries.resize(3);
    m.encoded_size = 80; // needs 14 + 3*24 = 86
    CHECK_THROWS_AS(bwr_encode(m), ConfigError);
}

TEST_CASE("two UEs granted in the same subframe aggregate into a single bulk block") {
    Engine eng(1);
    BwrGenConfig cfg;
    cfg.period = msec(2);
    BwrGenerator gen(eng, cfg);
    std::vector<BwrMessage> sent;
    gen.set_transport([&](std::vector<uint8_t> wire, std::function<void(SimTime)>) {
        sent.push_back(bwr_decode(wire));
    });
    gen.start();
    eng.schedule_at(usec(500), "test", "notices", [&] {
        gen.on_grant_notice(notice(usec(500), usec(4500), 600, {600, 0, 0, 0}, usec(22500)));
        gen.on_grant_notice(notice(usec(500), usec(4500), 708, {708, 0, 0, 0}, usec(22600)));
    });
    eng.run_until(msec(3));
    REQUIRE(sent.size() == 2); // one at 0 (empty), one at 2 ms carrying both
    CHECK(sent[0].entries.empty());
    REQUIRE(sent[1].entries.size() == 1);
    CHECK(sent[1].entries[0].lcg_bytes[0] == 1308);
    CHECK(sent[1].entries[0].expected_cm_arrival == usec(22600)); // latest of the pair
}

TEST_CASE("zero grants in a window still produce (and transmit) a message") {
    Engine eng(1);
    BwrGenConfig cfg;
    cfg.period = msec(2);
    BwrGenerator gen(eng, cfg);
    int sent = 0;
    gen.set_transport([&](std::vector<uint8_t> wire, std::function<void(SimTime)>) {
        ++sent;
        CHECK(wire.size() == 80);
    });
    gen.start();
    eng.run_until(msec(9));
    CHECK(sent == 5); // t = 0, 2, 4, 6, 8
    CHECK(gen.zero_entry_messages() == 5);
}

TEST_CASE("per-LCG mode keeps the four byte counters separate") {
    Engine eng(1);
    BwrGenConfig cfg;
    cfg.period = msec(2);
    cfg.mode = BwrMode::PerLcg;
    BwrGenerator gen(eng, cfg);
    std::vector<BwrMessage> sent;
    gen.set_transport([&](std::vector<uint8_t> wire, std::function<void(SimTime)>) {
        sent.push_back(bwr_decode(wire));
    });
    gen.start();
    eng.schedule_at(usec(100), "test", "notices", [&] {
        gen.on_grant_notice(notice(usec(100), usec(4500), 1308, {500, 0, 808, 0}, usec(22500)));
    });
    eng.run_until(msec(3));
    REQUIRE(sent.size() == 2);
    REQUIRE(sent[1].entries.size() == 1);
    CHECK(sent[1].entries[0].lcg_bytes == std::array<int64_t, 4>{500, 0, 808, 0});
    CHECK(sent[1].entries[0].total() == 1308);
}

TEST_CASE("per-subframe aggregation emits one entry per transmission instant") {
    Engine eng(1);
    BwrGenConfig cfg;
    cfg.period = msec(2);
    cfg.aggregate = BwrAggregate::PerSubframe;
    BwrGenerator gen(eng, cfg);
    std::vector<BwrMessage> sent;
    gen.set_transport([&](std::vector<uint8_t> wire, std::function<void(SimTime)>) {
        sent.push_back(bwr_decode(wire));
    });
    gen.start();
    eng.schedule_at(usec(100), "test", "notices", [&] {
        gen.on_grant_notice(notice(usec(100), usec(4500), 600, {600, 0, 0, 0}, usec(6500)));
        gen.on_grant_notice(notice(usec(1100), usec(5500), 700, {700, 0, 0, 0}, usec(7500)));
    });
    eng.run_until(msec(3));
    REQUIRE(sent.size() == 2);
    REQUIRE(sent[1].entries.size() == 2);
    CHECK(sent[1].entries[0].lcg_bytes[0] == 600);
    CHECK(sent[1].entries[1].lcg_bytes[0] == 700);
}

TEST_CASE("bulk and per-LCG report equal byte totals for the same grant stream") {
    for (auto mode : {BwrMode::Bulk, BwrMode::PerLcg}) {
        Engine eng(1);
        BwrGenConfig cfg;
        cfg.period = msec(2);
        cfg.mode = mode;
        BwrGenerator gen(eng, cfg);
        int64_t total = 0;
        gen.set_transport([&](std::vector<uint8_t> wire, std::function<void(SimTime)>) {
            for (const auto& e : bwr_decode(wire).entries) total += e.total();
        });
        gen.start();
        for (int i = 0; i < 10; ++i) {
            eng.schedule_at(usec(100 + 900 * i), "test", "n", [&, i] {
                gen.on_grant_notice(notice(eng.now(), eng.now() + msec(4), 100 + i,
                                           {100 + i, 0, 0, 0}, eng.now() + msec(6)));
            });
        }
        eng.run_until(msec(20));
        CHECK(total == 1045); // sum of 100..109
    }
}

namespace {

struct ApiRig {
    Engine eng{1};
    std::unique_ptr<Cmts> cmts;
    std::unique_ptr<BwrApi> api;

    ApiRig() {
        ServiceFlow f;
        f.sid = 1;
        f.kind = FlowKind::Be;
        f.owner_cm = 0;
        cmts = std::make_unique<Cmts>(eng, PhyConfig{}, std::vector<ServiceFlow>{f});
        api = std::make_unique<BwrApi>(*cmts, BwrMode::Bulk,
                                       std::array<uint32_t, 4>{1, 1, 1, 1});
    }
};

} // namespace

TEST_CASE("api translation maps an entry onto a request with the entry's arrival") {
    ApiRig rig;
    BwrMessage m;
    m.seq = 1;
    m.generated_at = msec(6);
    m.entries.push_back({msec(10), {1308, 0, 0, 0}});
    m.encoded_size = 80;
    rig.eng.schedule_at(msec(6), "test", "bwr", [&] { rig.api->on_message(m, rig.eng.now()); });
    rig.eng.run_until(msec(7));
    CHECK(rig.api->counters().records_submitted == 1);
    CHECK(rig.api->counters().requested_bytes == 1308 + 16);
    CHECK(rig.cmts->pending_bytes() == 1308 + 16);
    CHECK(rig.api->counters().late_entries == 0);
}

TEST_CASE("a zero-entry message advances the sequence and submits nothing") {
    ApiRig rig;
    BwrMessage m;
    m.seq = 3;
    m.encoded_size = 80;
    rig.api->on_message(m, msec(1));
    CHECK(rig.api->counters().last_seq == 3);
    CHECK(rig.api->counters().records_submitted == 0);
    CHECK(rig.cmts->pending_bytes() == 0);
}

TEST_CASE("duplicate or reordered messages are dropped and counted") {
    ApiRig rig;
    BwrMessage m;
    m.seq = 5;
    m.encoded_size = 80;
    rig.api->on_message(m, msec(1));
    m.seq = 4;
    rig.api->on_message(m, msec(2));
    m.seq = 5;
    rig.api->on_message(m, msec(3));
    CHECK(rig.api->counters().duplicates_dropped == 2);
    CHECK(rig.api->counters().last_seq == 5);
    CHECK(rig.api->counters().seq_gaps == 4); // 1..4 never seen
}

TEST_CASE("an expected arrival already in the past clamps to now") {
    ApiRig rig;
    BwrMessage m;
    m.seq = 1;
    m.entries.push_back({msec(2), {500, 0, 0, 0}});
    m.encoded_size = 80;
    rig.eng.schedule_at(msec(5), "test", "bwr", [&] { rig.api->on_message(m, rig.eng.now()); });
    rig.eng.run_until(msec(6));
    CHECK(rig.api->counters().late_entries == 1);
    CHECK(rig.api->counters().records_submitted == 1); // clamped, not dropped
}

TEST_CASE("BWR transport over UGS meets the one-gap-plus-jitter bound") {
    // testbed flow: 2 grants per 4 ms, 90 B, 500 us jitter. Worst case for
    // a message enqueued between grants: one 2 ms gap + jitter + serialization.
    Engine eng(31);
    ServiceFlow ugs;
    ugs.sid = 9;
    ugs.kind = FlowKind::Ugs;
    ugs.owner_cm = 0;
    Cmts cmts(eng, PhyConfig{}, {ugs});
    CableModem cm(eng, cmts, 0);
    cmts.start();

    PhyConfig phy;
    SimTime serial = phy.slot_time(phy.slots_for_bytes(90)) + usec(10);
    SimTime bound = msec(2) + usec(500) + serial;
    int delivered = 0;
    SimTime worst{0};
    SimTime best = msec(1000);
    for (int i = 0; i < 200; ++i) {
        SimTime at = msec(10) + usec(2777 * i); // slower than the 2 ms cadence, phase sweeps
        eng.schedule_at(at, "test", "enqueue", [&, at] {
            cm.enqueue_control(9, 80, [&, at](SimTime got) {
                ++delivered;
                SimTime wait = got - at;
                if (wait > worst) worst = wait;
                if (wait < best) best = wait;
            });
        });
    }
    eng.run_until(msec(700));
    CHECK(delivered == 200);
    CHECK(worst <= bound);
    CHECK(worst >= msec(1)); // the unlucky phases really do wait a while
    CHECK(best <= usec(300)); // a message landing just before a grant barely waits
}

TEST_CASE("an RTPS flow can carry the reports too, via its dedicated polls") {
    Engine eng(37);
    ServiceFlow rtps;
    rtps.sid = 9;
    rtps.kind = FlowKind::Rtps;
    rtps.owner_cm = 0;
    rtps.rtps_poll_interval = msec(2);
    Cmts cmts(eng, PhyConfig{}, {rtps});
    CableModem cm(eng, cmts, 0);
    cmts.start();
    int delivered = 0;
    SimTime got{0};
    eng.schedule_at(msec(10), "test", "enqueue", [&] {
        cm.enqueue_control(9, 80, [&](SimTime at) {
            ++delivered;
            got = at;
        });
    });
    eng.run_until(msec(30));
    CHECK(delivered == 1);
    // one poll wait + one request-grant cycle, no contention involved
    CHECK(got - msec(10) >= msec(5));
    CHECK(got - msec(10) <= msec(10));
    CHECK(cmts.counters().contention_attempts == 0);
}

TEST_CASE("control payloads larger than the UGS grant are rejected at enqueue") {
    Engine eng(1);
    ServiceFlow ugs;
    ugs.sid = 9;
    ugs.kind = FlowKind::Ugs;
    ugs.owner_cm = 0;
    ugs.ugs_grant_size = 40;
    Cmts cmts(eng, PhyConfig{}, {ugs});
    CableModem cm(eng, cmts, 0);
    CHECK_THROWS_AS(cm.enqueue_control(9, 80, nullptr), ConfigError);
}

TEST_CASE("the signaling meter reads 640 kbps exactly at 80 B per 1 ms") {
    Engine eng(1);
    BwrGenConfig cfg;
    cfg.period = msec(1);
    cfg.encoded_size = 80;
    BwrGenerator gen(eng, cfg);
    gen.set_transport([](std::vector<uint8_t>, std::function<void(SimTime)>) {});
    gen.start();
    eng.run_until(sec(2));
    CHECK(gen.signaling_bps(msec(200), msec(1800)) == 640000.0);
}
