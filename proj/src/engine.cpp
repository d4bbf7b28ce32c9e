#include "bwrsim/engine.hpp"

#include <algorithm>
#include <cstdio>

namespace bwrsim {

std::string format_us(SimTime t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(t.us));
    return buf;
}

EventHandle Engine::schedule_at(SimTime t, std::string target, std::string kind, EventFn fn) {
    if (t < now_) {
        throw ConfigError("schedule in the past: t=" + format_us(t) + "us, now=" +
                          format_us(now_) + "us (" + target + "/" + kind + ")");
    }
    auto ev = std::make_shared<Event>();
    ev->fire_at = t;
    ev->seq = next_seq_++;
    ev->target = std::move(target);
    ev->kind = std::move(kind);
    ev->fn = std::move(fn);
    heap_.push_back(ev);
    std::push_heap(heap_.begin(), heap_.end(), HeapCmp{});
    return EventHandle(ev);
}

EngineStats Engine::run_until(SimTime end) {
    while (!heap_.empty()) {
        const auto& top = heap_.front();
        if (top->fire_at > end) break;
        std::pop_heap(heap_.begin(), heap_.end(), HeapCmp{});
        auto ev = std::move(heap_.back());
        heap_.pop_back();
        if (ev->cancelled) continue;
        now_ = ev->fire_at;
        ++stats_.events_fired;
        if (trace_) trace_(ev->fire_at, ev->seq, ev->target, ev->kind);
        ev->fn();
    }
    // Land on the horizon unless the queue emptied mid-run, in which case the
    // clock stays on the last delivered event.
    if (!heap_.empty() || stats_.events_fired == 0) now_ = end;
    stats_.final_clock = now_;
    return stats_;
}

} // namespace bwrsim
