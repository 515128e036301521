#include "ttstn/error.hpp"
#include "ttstn/time.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

namespace ttstn {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Range: return "range";
    case ErrorCode::MalformedAddress: return "malformed-address";
    case ErrorCode::Address: return "address";
    case ErrorCode::Size: return "size";
    case ErrorCode::NotExecutable: return "not-executable";
    case ErrorCode::FileImmutable: return "file-immutable";
    case ErrorCode::SlotConflict: return "slot-conflict";
    case ErrorCode::DanglingReference: return "dangling-reference";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Overflow: return "overflow";
    case ErrorCode::StaleFault: return "stale-fault";
    case ErrorCode::Capacity: return "capacity";
    case ErrorCode::Assignment: return "assignment";
    case ErrorCode::UnknownSeries: return "unknown-series";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::NotSubscribed: return "not-subscribed";
    case ErrorCode::Configuration: return "configuration";
    case ErrorCode::PartialConfig: return "partial-config";
    case ErrorCode::Timeout: return "timeout";
    case ErrorCode::DataPhase: return "data-phase";
    case ErrorCode::DeadlineMissed: return "deadline-missed";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

SimTime round_half_up(double value)
{
    return static_cast<SimTime>(std::floor(value + 0.5));
}

BusTiming BusTiming::for_baud(std::int64_t baud)
{
    if (baud <= 0 || baud > 10'000'000)
        throw Error(ErrorCode::Range, "baud rate out of range: " + std::to_string(baud));
    BusTiming t;
    t.baud = static_cast<std::uint32_t>(baud);
    // Integer round-half-up of 1e9 / baud.
    t.bit_ns = (kNsPerSecond + baud / 2) / baud;
    t.frame_ns = kFrameBits * t.bit_ns;
    t.slot_ns = kSlotBits * t.bit_ns;
    t.slot_gap_ns = kSlotGapBits * t.bit_ns;
    t.round_gap_ns = kRoundGapBits * t.bit_ns;
    return t;
}

double slot_duration_seconds(double baud)
{
    if (!(baud > 0.0))
        throw Error(ErrorCode::Range, "baud rate must be positive");
    return static_cast<double>(kSlotBits) / baud;
}

SimTime parse_duration(std::string_view text)
{
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c)))
            s.push_back(c);
    if (s.empty())
        throw Error(ErrorCode::Parse, "empty duration");

    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, "bad duration '" + std::string(text) + "'");
    }
    const std::string unit = s.substr(pos);
    double scale = 1.0;
    if (unit.empty() || unit == "ns")
        scale = 1.0;
    else if (unit == "us")
        scale = 1e3;
    else if (unit == "ms")
        scale = 1e6;
    else if (unit == "s")
        scale = 1e9;
    else
        throw Error(ErrorCode::Parse, "unknown duration unit '" + unit + "'");
    if (value < 0)
        throw Error(ErrorCode::Parse, "negative duration '" + std::string(text) + "'");
    return round_half_up(value * scale);
}

std::string format_duration(SimTime ns)
{
    char buf[64];
    if (ns % 1'000'000 == 0)
        std::snprintf(buf, sizeof buf, "%lldms", static_cast<long long>(ns / 1'000'000));
    else if (ns % 1'000 == 0)
        std::snprintf(buf, sizeof buf, "%lldus", static_cast<long long>(ns / 1'000));
    else
        std::snprintf(buf, sizeof buf, "%lldns", static_cast<long long>(ns));
    return buf;
}

}  // namespace ttstn
