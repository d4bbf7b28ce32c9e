#pragma once

#include <cstdint>
#include <compare>
#include <string>

namespace bwrsim {

// Simulation time in integer microseconds. Every module trades in this one
// currency; millisecond quantities convert exactly (1 ms = 1000 us).
struct SimTime {
    int64_t us = 0;

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(SimTime o) const { return {us + o.us}; }
    constexpr SimTime operator-(SimTime o) const { return {us - o.us}; }
    constexpr SimTime operator*(int64_t k) const { return {us * k}; }
    constexpr SimTime operator/(int64_t k) const { return {us / k}; }
    SimTime& operator+=(SimTime o) { us += o.us; return *this; }
    SimTime& operator-=(SimTime o) { us -= o.us; return *this; }

    constexpr double ms() const { return static_cast<double>(us) / 1000.0; }
    constexpr double seconds() const { return static_cast<double>(us) / 1e6; }
};

constexpr SimTime usec(int64_t n) { return {n}; }
constexpr SimTime msec(int64_t n) { return {n * 1000}; }
constexpr SimTime sec(int64_t n) { return {n * 1000000}; }

// First multiple of `period` at or after `t`. period > 0.
constexpr SimTime ceil_to(SimTime t, SimTime period) {
    int64_t q = (t.us + period.us - 1) / period.us;
    return {q * period.us};
}

constexpr SimTime floor_to(SimTime t, SimTime period) {
    return {(t.us / period.us) * period.us};
}

std::string format_us(SimTime t);

} // namespace bwrsim
