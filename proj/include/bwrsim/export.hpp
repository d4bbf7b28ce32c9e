#pragma once

#include "bwrsim/simulation.hpp"

#include <string>
#include <vector>

namespace bwrsim {

// Per-load comparison row: the Fig. 5 shape (RTT and DOCSIS-segment means
// per arm, gain on the DOCSIS segment only).
struct GainRow {
    double load = 0.0;
    int seeds = 0;
    double base_docsis_us = 0.0;
    double bwr_docsis_us = 0.0;
    double base_rtt_us = 0.0;
    double bwr_rtt_us = 0.0;
    double gain_pct = 0.0;
    double gain_ci95_pct = 0.0;
};

std::string packet_trace_csv(const RunResult& r);
std::string summary_json(const RunResult& r);
RunResult summary_from_json(const std::string& text);
std::string gain_csv(const std::vector<GainRow>& rows);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace bwrsim
