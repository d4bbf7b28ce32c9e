#include "bwrsim/export.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bwrsim {

using ordered_json = nlohmann::ordered_json;

std::string packet_trace_csv(const RunResult& r) {
    std::string out = "pkt_id,payload,ue_ingress_us,enb_egress_us,cmts_egress_us,rtt_us\n";
    char line[160];
    for (const auto& p : r.ping_trace) {
        if (p.cmts_egress.us < 0) continue; // not delivered before the run ended
        std::snprintf(line, sizeof(line), "%llu,%d,%lld,%lld,%lld,%lld\n",
                      static_cast<unsigned long long>(p.id & 0x00ffffffffffffffULL), p.payload,
                      static_cast<long long>(p.ue_ingress.us),
                      static_cast<long long>(p.enb_egress.us),
                      static_cast<long long>(p.cmts_egress.us),
                      static_cast<long long>((p.ue_return - p.ue_ingress).us));
        out += line;
    }
    return out;
}

namespace {

ordered_json summary_of(const SeriesSummary& s) {
    ordered_json j;
    j["count"] = s.count;
    j["min_us"] = s.min_us;
    j["max_us"] = s.max_us;
    j["mean_us"] = s.mean_us;
    j["p50_us"] = s.p50_us;
    j["p95_us"] = s.p95_us;
    j["p99_us"] = s.p99_us;
    return j;
}

SeriesSummary summary_from(const ordered_json& j) {
    SeriesSummary s;
    s.count = j.at("count").get<int64_t>();
    s.min_us = j.at("min_us").get<int64_t>();
    s.max_us = j.at("max_us").get<int64_t>();
    s.mean_us = j.at("mean_us").get<double>();
    s.p50_us = j.at("p50_us").get<int64_t>();
    s.p95_us = j.at("p95_us").get<int64_t>();
    s.p99_us = j.at("p99_us").get<int64_t>();
    return s;
}

} // namespace

std::string summary_json(const RunResult& r) {
    ordered_json j;
    j["seed"] = r.seed;
    j["load"] = r.load;
    j["bwr_enabled"] = r.bwr_enabled;
    j["duration_us"] = r.duration.us;
    j["lte_seg"] = summary_of(r.lte_seg);
    j["docsis_seg"] = summary_of(r.docsis_seg);
    j["queue_wait"] = summary_of(r.queue_wait);
    j["rtt"] = summary_of(r.rtt);
    j["docsis_bg"] = summary_of(r.docsis_bg);
    j["counters"] = {
        {"maps_built", r.cmts.maps_built},
        {"requests_accepted", r.cmts.requests_accepted},
        {"contention_attempts", r.cmts.contention_attempts},
        {"contention_collisions", r.cmts.contention_collisions},
        {"jit_granted_bytes", r.cmts.jit_granted_bytes},
        {"jit_wasted_bytes", r.cmts.jit_wasted_bytes},
        {"ugs_granted_bytes", r.cmts.ugs_granted_bytes},
        {"ugs_padding_bytes", r.cmts.ugs_padding_bytes},
        {"be_granted_bytes", r.cmts.be_granted_bytes},
        {"be_wasted_bytes", r.cmts.be_wasted_bytes},
        {"delivered_bytes", r.cmts.delivered_bytes},
        {"no_early_grant_violations", r.cmts.no_early_grant_violations},
    };
    j["bwr"] = {
        {"messages", r.bwr_messages},
        {"zero_entry", r.bwr_zero_entry},
        {"signaling_bps", r.bwr_signaling_bps},
        {"api_last_seq", r.api.last_seq},
        {"api_duplicates", r.api.duplicates_dropped},
        {"api_gaps", r.api.seq_gaps},
        {"api_late_entries", r.api.late_entries},
        {"api_records", r.api.records_submitted},
    };
    j["workload"] = {
        {"offered_bg_bps", r.offered_bg_bps},
        {"pings_sent", r.pings_sent},
        {"pings_completed", r.pings_completed},
        {"bg_sent", r.bg_sent},
        {"bg_completed", r.bg_completed},
        {"harq_retransmissions", r.harq_retransmissions},
        {"transport_blocks", r.transport_blocks},
        {"events_fired", r.events_fired},
    };
    return j.dump(2) + "\n";
}

RunResult summary_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    RunResult r;
    r.seed = j.at("seed").get<uint64_t>();
    r.load = j.at("load").get<double>();
    r.bwr_enabled = j.at("bwr_enabled").get<bool>();
    r.duration = SimTime{j.at("duration_us").get<int64_t>()};
    r.lte_seg = summary_from(j.at("lte_seg"));
    r.docsis_seg = summary_from(j.at("docsis_seg"));
    r.queue_wait = summary_from(j.at("queue_wait"));
    r.rtt = summary_from(j.at("rtt"));
    r.docsis_bg = summary_from(j.at("docsis_bg"));
    const auto& c = j.at("counters");
    r.cmts.jit_granted_bytes = c.at("jit_granted_bytes").get<int64_t>();
    r.cmts.jit_wasted_bytes = c.at("jit_wasted_bytes").get<int64_t>();
    r.cmts.no_early_grant_violations = c.at("no_early_grant_violations").get<int64_t>();
    const auto& w = j.at("workload");
    r.offered_bg_bps = w.at("offered_bg_bps").get<double>();
    r.pings_sent = w.at("pings_sent").get<int64_t>();
    r.pings_completed = w.at("pings_completed").get<int64_t>();
    const auto& b = j.at("bwr");
    r.bwr_signaling_bps = b.at("signaling_bps").get<double>();
    r.bwr_messages = b.at("messages").get<int64_t>();
    return r;
}

std::string gain_csv(const std::vector<GainRow>& rows) {
    std::string out =
        "load,seeds,baseline_docsis_ms,bwr_docsis_ms,baseline_rtt_ms,bwr_rtt_ms,gain_pct,gain_ci95_pct\n";
    char line[224];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%.2f,%d,%.3f,%.3f,%.3f,%.3f,%.2f,%.2f\n", r.load,
                      r.seeds, r.base_docsis_us / 1000.0, r.bwr_docsis_us / 1000.0,
                      r.base_rtt_us / 1000.0, r.bwr_rtt_us / 1000.0, r.gain_pct,
                      r.gain_ci95_pct);
        out += line;
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace bwrsim
