#include "bwrsim/scenario.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bwrsim {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

int64_t parse_int(const std::string& key, const std::string& v) {
    size_t pos = 0;
    int64_t x;
    try {
        x = std::stoll(v, &pos);
    } catch (...) {
        throw ConfigError(key + ": '" + v + "' is not an integer");
    }
    if (pos != v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
    return x;
}

double parse_double(const std::string& key, const std::string& v) {
    size_t pos = 0;
    double x;
    try {
        x = std::stod(v, &pos);
    } catch (...) {
        throw ConfigError(key + ": '" + v + "' is not a number");
    }
    if (pos != v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<int>(parse_int(key, item)));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

} // namespace

void ScenarioConfig::set(const std::string& key, const std::string& value) {
    auto us_of = [&](const std::string& k) { return SimTime{parse_int(k, value)}; };
    auto i = [&](const std::string& k) { return parse_int(k, value); };
    auto d = [&](const std::string& k) { return parse_double(k, value); };
    auto b = [&](const std::string& k) { return parse_bool(k, value); };

    if (key == "sim.seed") seed = static_cast<uint64_t>(i(key));
    else if (key == "sim.duration_us") duration = us_of(key);
    else if (key == "sim.drain_us") drain = us_of(key);
    else if (key == "sim.trace") trace = b(key);
    else if (key == "sim.core_delay_us") core_delay = us_of(key);
    else if (key == "sim.lte_dl_delay_us") lte_dl_delay = us_of(key);
    else if (key == "sim.clock_offset_us") clock_offset = us_of(key);

    else if (key == "lte.sr_period_us") lte.sr_period = us_of(key);
    else if (key == "lte.subframe_us") lte.subframe = us_of(key);
    else if (key == "lte.pipeline_hop_us") lte.pipeline_hop = us_of(key);
    else if (key == "lte.sched_offset_us") lte.sched_offset = us_of(key);
    else if (key == "lte.decode_min_us") lte.decode_min = us_of(key);
    else if (key == "lte.decode_max_us") lte.decode_max = us_of(key);
    else if (key == "lte.prb_count") lte.prb_count = static_cast<int>(i(key));
    else if (key == "lte.bytes_per_prb") lte.bytes_per_prb = static_cast<int>(i(key));
    else if (key == "lte.bler") lte.bler = d(key);
    else if (key == "lte.harq_rtt_us") lte.harq_rtt = us_of(key);
    else if (key == "lte.air_overhead_us") lte.air_overhead = us_of(key);
    else if (key == "lte.ue_count") lte.ue_count = static_cast<int>(i(key));

    else if (key == "docsis.symbol_rate") docsis.symbol_rate = i(key);
    else if (key == "docsis.bits_per_symbol") docsis.bits_per_symbol = static_cast<int>(i(key));
    else if (key == "docsis.minislot_symbols") docsis.minislot_symbols = static_cast<int>(i(key));
    else if (key == "docsis.map_interval_us") docsis.map_interval = us_of(key);
    else if (key == "docsis.ds_delay_us") docsis.ds_delay = us_of(key);
    else if (key == "docsis.map_lookahead_us") docsis.map_lookahead = us_of(key);
    else if (key == "docsis.req_proc_us") docsis.req_proc = us_of(key);
    else if (key == "docsis.per_frame_overhead") docsis.per_frame_overhead = static_cast<int32_t>(i(key));
    else if (key == "docsis.piggyback") docsis.piggyback = b(key);
    else if (key == "docsis.backoff_start_exp") backoff.start_exp = static_cast<int>(i(key));
    else if (key == "docsis.backoff_end_exp") backoff.end_exp = static_cast<int>(i(key));

    else if (key == "ugs.enabled") ugs.enabled = b(key);
    else if (key == "ugs.grant_interval_us") ugs.grant_interval = us_of(key);
    else if (key == "ugs.grants_per_interval") ugs.grants_per_interval = static_cast<int>(i(key));
    else if (key == "ugs.grant_size_bytes") ugs.grant_size = static_cast<int32_t>(i(key));
    else if (key == "ugs.jitter_us") ugs.jitter = us_of(key);
    else if (key == "ugs.phase_us") ugs.phase = us_of(key);

    else if (key == "bwr.enabled") bwr.enabled = b(key);
    else if (key == "bwr.mode") {
        if (value == "bulk") bwr.mode = BwrMode::Bulk;
        else if (value == "per_lcg") bwr.mode = BwrMode::PerLcg;
        else throw ConfigError("bwr.mode: '" + value + "' is not 'bulk' or 'per_lcg'");
    } else if (key == "bwr.aggregate") {
        if (value == "per_message") bwr.aggregate = BwrAggregate::PerMessage;
        else if (value == "per_subframe") bwr.aggregate = BwrAggregate::PerSubframe;
        else throw ConfigError("bwr.aggregate: '" + value + "' is not 'per_message' or 'per_subframe'");
    } else if (key == "bwr.period_us") bwr.period = us_of(key);
    else if (key == "bwr.jit_guard_us") bwr.jit_guard = us_of(key);
    else if (key == "bwr.encoded_size") bwr.encoded_size = static_cast<int32_t>(i(key));

    else if (key == "ping.enabled") ping.enabled = b(key);
    else if (key == "ping.interval_us") ping.interval = us_of(key);
    else if (key == "ping.payload_min") ping.payload_min = static_cast<int>(i(key));
    else if (key == "ping.payload_max") ping.payload_max = static_cast<int>(i(key));
    else if (key == "ping.payload_step") ping.payload_step = static_cast<int>(i(key));
    else if (key == "ping.ip_overhead") ping.ip_overhead = static_cast<int>(i(key));
    else if (key == "ping.start_us") ping.start = us_of(key);
    else if (key == "ping.lcg") ping.lcg = static_cast<int>(i(key));

    else if (key == "ue_load.rate_bps") ue_load.rate_bps = d(key);
    else if (key == "ue_load.packet_bytes") ue_load.packet_bytes = static_cast<int>(i(key));
    else if (key == "ue_load.lcg") ue_load.lcg = static_cast<int>(i(key));

    else if (key == "load.cm_bg_count") load.cm_bg_count = static_cast<int>(i(key));
    else if (key == "load.flows_per_cm") load.flows_per_cm = static_cast<int>(i(key));
    else if (key == "load.target_utilization") load.target_utilization = d(key);
    else if (key == "load.packet_sizes") load.packet_sizes = parse_int_list(key, value);

    else throw ConfigError("unknown configuration key '" + key + "'");
}

void ScenarioConfig::validate() const {
    lte.validate();
    docsis.validate();

    if (duration.us <= 0) throw ConfigError("sim.duration_us must be positive");
    if (drain.us < 0 || drain >= duration)
        throw ConfigError("sim.drain_us=" + std::to_string(drain.us) +
                          " must be non-negative and smaller than sim.duration_us=" +
                          std::to_string(duration.us));

    if (bwr.enabled) {
        if (!ugs.enabled)
            throw ConfigError("bwr.enabled=true requires ugs.enabled=true (the BWR transport flow)");
        if (bwr.period.us % lte.subframe.us != 0)
            throw ConfigError("bwr.period_us=" + std::to_string(bwr.period.us) +
                              " must be a multiple of lte.subframe_us=" +
                              std::to_string(lte.subframe.us));
        if (bwr.encoded_size > ugs.grant_size)
            throw ConfigError("bwr.encoded_size=" + std::to_string(bwr.encoded_size) +
                              " does not fit ugs.grant_size_bytes=" +
                              std::to_string(ugs.grant_size));
        SimTime cadence = ugs.grant_interval / ugs.grants_per_interval;
        if (cadence > bwr.period)
            throw ConfigError("UGS grant cadence " + std::to_string(cadence.us) +
                              " us cannot keep up with bwr.period_us=" +
                              std::to_string(bwr.period.us));
        if (bwr.jit_guard.us < 0) throw ConfigError("bwr.jit_guard_us must be non-negative");
    }
    if (ugs.enabled) {
        if (ugs.grants_per_interval <= 0 ||
            ugs.grant_interval.us % ugs.grants_per_interval != 0)
            throw ConfigError("ugs.grant_interval_us=" + std::to_string(ugs.grant_interval.us) +
                              " must divide evenly by ugs.grants_per_interval=" +
                              std::to_string(ugs.grants_per_interval));
        if (ugs.jitter.us < 0) throw ConfigError("ugs.jitter_us must be non-negative");
    }

    if (ping.enabled) {
        if (ping.payload_min <= 0 || ping.payload_max < ping.payload_min || ping.payload_step <= 0)
            throw ConfigError("ping payload ramp is ill-formed (min=" +
                              std::to_string(ping.payload_min) + ", max=" +
                              std::to_string(ping.payload_max) + ", step=" +
                              std::to_string(ping.payload_step) + ")");
        if (ping.interval.us <= 0) throw ConfigError("ping.interval_us must be positive");
        if (ping.lcg < 0 || ping.lcg > 3) throw ConfigError("ping.lcg must be 0..3");
    }

    if (load.target_utilization < 0.0 || load.target_utilization > 0.95)
        throw ConfigError("load.target_utilization=" + std::to_string(load.target_utilization) +
                          " must lie in [0, 0.95]");
    if (load.target_utilization > 0.0) {
        if (load.cm_bg_count <= 0 || load.flows_per_cm <= 0)
            throw ConfigError("background load requires load.cm_bg_count and load.flows_per_cm > 0");
        for (int s : load.packet_sizes)
            if (s <= 0) throw ConfigError("load.packet_sizes entries must be positive");
    }
    if (ue_load.rate_bps < 0) throw ConfigError("ue_load.rate_bps must be non-negative");
    if (ue_load.rate_bps > 0 && ue_load.packet_bytes <= 0)
        throw ConfigError("ue_load.packet_bytes must be positive");
    if (backoff.start_exp < 0 || backoff.end_exp < backoff.start_exp)
        throw ConfigError("docsis.backoff_start_exp=" + std::to_string(backoff.start_exp) +
                          " and docsis.backoff_end_exp=" + std::to_string(backoff.end_exp) +
                          " must satisfy 0 <= start <= end");
}

ScenarioConfig ScenarioConfig::from_string(const std::string& text) {
    ScenarioConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

} // namespace bwrsim
