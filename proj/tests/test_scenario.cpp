#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bwrsim/scenario.hpp"
#include "profiles.hpp"

#include <string>

using namespace bwrsim;

TEST_CASE("an empty file yields the full testbed defaults") {
    ScenarioConfig cfg = ScenarioConfig::from_string("");
    CHECK(cfg.docsis.symbol_rate == 1'280'000);
    CHECK(cfg.docsis.bits_per_symbol == 6);
    CHECK(cfg.docsis.raw_bps() == 7'680'000);
    CHECK(cfg.docsis.map_interval == msec(2));
    CHECK(cfg.ugs.grant_interval == msec(4));
    CHECK(cfg.ugs.grants_per_interval == 2);
    CHECK(cfg.ugs.grant_size == 90);
    CHECK(cfg.ugs.jitter == usec(500));
    CHECK(cfg.bwr.period == msec(2));
    CHECK(cfg.bwr.encoded_size == 80);
    CHECK(cfg.lte.prb_count == 25);
    CHECK(cfg.lte.sr_period == msec(5));
    CHECK(cfg.load.cm_bg_count == 10);
    CHECK(cfg.load.flows_per_cm == 3);
    CHECK(cfg.ping.interval == msec(20));
    CHECK(cfg.ping.payload_min == 64);
    CHECK(cfg.ping.payload_max == 1280);
    CHECK(cfg.ping.payload_step == 64);
    CHECK(cfg.lte.ue_count == 1);
    CHECK_FALSE(cfg.bwr.enabled);
}

TEST_CASE("comments and blank lines parse; values land where aimed") {
    ScenarioConfig cfg = ScenarioConfig::from_string(
        "# scenario\n"
        "sim.seed = 7\n"
        "\n"
        "bwr.enabled = true   # switch the pipeline on\n"
        "bwr.jit_guard_us = 2000\n"
        "load.target_utilization = 0.35\n"
        "load.packet_sizes = 200,600,1400\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.bwr.enabled);
    CHECK(cfg.bwr.jit_guard == msec(2));
    CHECK(cfg.load.target_utilization == doctest::Approx(0.35));
    CHECK(cfg.load.packet_sizes == std::vector<int>{200, 600, 1400});
}

TEST_CASE("unknown keys are rejected by name") {
    try {
        ScenarioConfig::from_string("docsis.map_intrvl_us = 2000\n");
        FAIL("should have thrown");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("docsis.map_intrvl_us") != std::string::npos);
    }
}

TEST_CASE("a BWR period off the subframe grid is rejected with both values") {
    try {
        ScenarioConfig::from_string("bwr.enabled = true\nbwr.period_us = 1500\n");
        FAIL("should have thrown");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("1500") != std::string::npos);
        CHECK(msg.find("1000") != std::string::npos);
    }
}

TEST_CASE("a UGS grant smaller than the BWR encoding is rejected") {
    try {
        ScenarioConfig::from_string("bwr.enabled = true\nugs.grant_size_bytes = 40\n");
        FAIL("should have thrown");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("80") != std::string::npos);
        CHECK(msg.find("40") != std::string::npos);
    }
}

TEST_CASE("a MAP interval off the minislot grid is rejected") {
    CHECK_THROWS_AS(ScenarioConfig::from_string("docsis.map_interval_us = 1999\n"), ConfigError);
}

TEST_CASE("a UGS cadence too slow for the BWR period is rejected") {
    CHECK_THROWS_AS(ScenarioConfig::from_string("bwr.enabled = true\n"
                                                "bwr.period_us = 1000\n"),
                    ConfigError); // default UGS runs every 2 ms only
    // with a 1 ms UGS cadence it passes
    ScenarioConfig cfg = ScenarioConfig::from_string("bwr.enabled = true\n"
                                                     "bwr.period_us = 1000\n"
                                                     "ugs.grant_interval_us = 1000\n"
                                                     "ugs.grants_per_interval = 1\n");
    CHECK(cfg.bwr.period == msec(1));
}

TEST_CASE("malformed values name the key") {
    CHECK_THROWS_AS(ScenarioConfig::from_string("sim.seed = banana\n"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_string("lte.bler = much\n"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_string("bwr.mode = turbo\n"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_string("just a line\n"), ConfigError);
}

TEST_CASE("out-of-range cross-field values are rejected") {
    CHECK_THROWS_AS(ScenarioConfig::from_string("load.target_utilization = 1.2\n"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_string("lte.bler = 1.01\n"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_string("sim.drain_us = 99999999999\n"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_string("ping.payload_step = 0\n"), ConfigError);
}

TEST_CASE("missing scenario file is a clean error") {
    CHECK_THROWS_AS(ScenarioConfig::from_file("/nonexistent/path.conf"), ConfigError);
}

TEST_CASE("the shipped sweep scenario matches the acceptance profile") {
    ScenarioConfig file = ScenarioConfig::from_file(std::string(SCENARIO_DIR) +
                                                    "/calibrated_sweep.conf");
    ScenarioConfig prof = profiles::calibrated_testbed();
    CHECK(file.lte.air_overhead == prof.lte.air_overhead);
    CHECK(file.bwr.jit_guard == prof.bwr.jit_guard);
    CHECK(file.bwr.aggregate == prof.bwr.aggregate);
    CHECK(file.bwr.period == prof.bwr.period);
    CHECK(file.ugs.grant_interval == prof.ugs.grant_interval);
    CHECK(file.ugs.grants_per_interval == prof.ugs.grants_per_interval);
    ScenarioConfig tb = ScenarioConfig::from_file(std::string(SCENARIO_DIR) + "/testbed.conf");
    CHECK_FALSE(tb.bwr.enabled);
    CHECK(tb.ugs.grant_size == 90);
}
