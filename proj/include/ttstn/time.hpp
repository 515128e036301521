#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ttstn {

// Simulated time and durations, integer nanoseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kNsPerSecond = 1'000'000'000;

// UART 8N1: start + 8 data + stop.
inline constexpr int kFrameBits = 10;
// Silence appended to every byte slot.
inline constexpr int kSlotGapBits = 3;
inline constexpr int kSlotBits = kFrameBits + kSlotGapBits;
// Extra silence the master leaves between two rounds.
inline constexpr int kRoundGapBits = 6;

// Round-half-up of a non-negative double to integer ns.
SimTime round_half_up(double value);

// Per-baud timing constants. Every duration is a multiple of the rounded bit time
// so traces are bit-exact on every platform.
struct BusTiming {
    std::uint32_t baud = 0;
    SimTime bit_ns = 0;
    SimTime frame_ns = 0;
    SimTime slot_ns = 0;
    SimTime slot_gap_ns = 0;
    SimTime round_gap_ns = 0;

    static BusTiming for_baud(std::int64_t baud);

    SimTime slots(std::int64_t count) const { return count * slot_ns; }
};

// Exact slot length in seconds, (frame + gap) / baud.
double slot_duration_seconds(double baud);

// Parses "30ms", "1.5 s", "250us", "1200ns" or a bare integer (ns).
SimTime parse_duration(std::string_view text);

std::string format_duration(SimTime ns);

}  // namespace ttstn
