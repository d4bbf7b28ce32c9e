#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace bwrsim {

// Named deterministic random stream (xoshiro256**). The (global seed,
// stream id) pair fully determines the draw sequence; consumers on one
// stream cannot perturb another. <random> distributions are avoided on
// purpose: their algorithms are implementation-defined.
class RngStream {
public:
    RngStream() = default;
    RngStream(uint64_t global_seed, std::string_view stream_id);

    uint64_t next_u64();

    // Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
    int64_t uniform_int(int64_t lo, int64_t hi);

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01();

    double uniform(double lo, double hi);

    // Exponential with the given mean (mean > 0).
    double exponential(double mean);

    bool bernoulli(double p);

private:
    uint64_t state_[4] = {1, 2, 3, 4};
};

// Stream registry: creates streams lazily, keyed by id. Ordered map so the
// registry itself never introduces iteration nondeterminism.
class RngRegistry {
public:
    explicit RngRegistry(uint64_t global_seed = 0) : seed_(global_seed) {}

    void reseed(uint64_t global_seed) {
        seed_ = global_seed;
        streams_.clear();
    }

    uint64_t seed() const { return seed_; }

    RngStream& stream(std::string_view id);

private:
    uint64_t seed_ = 0;
    std::map<std::string, RngStream, std::less<>> streams_;
};

} // namespace bwrsim
