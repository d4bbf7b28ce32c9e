#pragma once

#include "bwrsim/time.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace bwrsim {

struct SeriesSummary {
    int64_t count = 0;
    int64_t min_us = 0;
    int64_t max_us = 0;
    double mean_us = 0.0;
    int64_t p50_us = 0;
    int64_t p95_us = 0;
    int64_t p99_us = 0;
};

// Latency sample accumulator (integer microseconds). Percentiles are
// nearest-rank over the sorted samples.
class LatencySeries {
public:
    void add(SimTime v) { samples_.push_back(v.us); }
    void add_us(int64_t v) { samples_.push_back(v); }

    int64_t count() const { return static_cast<int64_t>(samples_.size()); }
    const std::vector<int64_t>& samples() const { return samples_; }

    SeriesSummary summarize() const {
        SeriesSummary s;
        if (samples_.empty()) return s;
        std::vector<int64_t> sorted = samples_;
        std::sort(sorted.begin(), sorted.end());
        s.count = static_cast<int64_t>(sorted.size());
        s.min_us = sorted.front();
        s.max_us = sorted.back();
        long double sum = 0;
        for (int64_t v : sorted) sum += static_cast<long double>(v);
        s.mean_us = static_cast<double>(sum / static_cast<long double>(sorted.size()));
        auto rank = [&](double q) {
            size_t idx = static_cast<size_t>(std::max<long long>(
                0, static_cast<long long>(q * static_cast<double>(sorted.size()) + 0.999999) - 1));
            if (idx >= sorted.size()) idx = sorted.size() - 1;
            return sorted[idx];
        };
        s.p50_us = rank(0.50);
        s.p95_us = rank(0.95);
        s.p99_us = rank(0.99);
        return s;
    }

private:
    std::vector<int64_t> samples_;
};

} // namespace bwrsim
