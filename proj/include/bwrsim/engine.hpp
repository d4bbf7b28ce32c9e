#pragma once

#include "bwrsim/rng.hpp"
#include "bwrsim/time.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwrsim {

// Model misconfiguration (bad scenario values, schedule-in-the-past).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Internal consistency violation: a model bug, not a user error.
class ModelError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using EventFn = std::function<void()>;

struct Event {
    SimTime fire_at;
    uint64_t seq = 0;
    std::string target;
    std::string kind;
    EventFn fn;
    bool cancelled = false;
};

// Cancellation handle; valid until the event fires.
class EventHandle {
public:
    EventHandle() = default;
    explicit EventHandle(std::shared_ptr<Event> ev) : ev_(std::move(ev)) {}

    void cancel() {
        if (auto e = ev_.lock()) e->cancelled = true;
    }

private:
    std::weak_ptr<Event> ev_;
};

struct EngineStats {
    uint64_t events_fired = 0;
    SimTime final_clock{0};
};

using TraceSink =
    std::function<void(SimTime at, uint64_t seq, const std::string& target, const std::string& kind)>;

// Deterministic discrete-event engine. Events with equal fire times are
// delivered in insertion order; handlers never observe the clock decrease.
class Engine {
public:
    explicit Engine(uint64_t seed = 0) : rng_(seed) {}

    SimTime now() const { return now_; }

    EventHandle schedule_at(SimTime t, std::string target, std::string kind, EventFn fn);
    EventHandle schedule_in(SimTime dt, std::string target, std::string kind, EventFn fn) {
        return schedule_at(now_ + dt, std::move(target), std::move(kind), std::move(fn));
    }

    // Delivers every event with fire_at <= end. The clock lands on `end`
    // unless the queue empties first, in which case it stays on the last
    // delivered event.
    EngineStats run_until(SimTime end);

    RngStream& rng(std::string_view stream_id) { return rng_.stream(stream_id); }
    RngRegistry& rng_registry() { return rng_; }

    void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }

    uint64_t events_fired() const { return stats_.events_fired; }

private:
    struct HeapCmp {
        bool operator()(const std::shared_ptr<Event>& a, const std::shared_ptr<Event>& b) const {
            if (a->fire_at != b->fire_at) return a->fire_at > b->fire_at;
            return a->seq > b->seq;
        }
    };

    SimTime now_{0};
    uint64_t next_seq_ = 0;
    std::vector<std::shared_ptr<Event>> heap_;
    RngRegistry rng_;
    EngineStats stats_;
    TraceSink trace_;
};

} // namespace bwrsim
