#pragma once

#include "ttstn/node.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace ttstn {

// A byte on the wire. `sender` is the simulator's node index, or -1 for a
// byte injected by a fault.
struct BusTx {
    std::uint64_t id = 0;
    int sender = -1;
    Transmission tx;
    SimTime end = 0;
    bool resolved = false;
};

struct Combined {
    RxStatus status = RxStatus::Clean;
    std::uint8_t byte = 0;
};

// Normal mode: any overlap destroys every byte involved. WiredAnd: identical
// bytes survive, different bytes merge into their AND and are flagged.
Combined combine(std::span<const std::pair<std::uint8_t, TxMode>> bytes);

// The shared medium. Holds every transmission until it and everything that
// overlaps it has been delivered.
class SimBus {
public:
    explicit SimBus(const BusTiming& timing) : timing_(timing) {}

    // Caller guarantees start >= simulation time.
    std::uint64_t transmit(int sender, const Transmission& tx);

    // Overlap group of `id` once every member has ended by `now`; empty if the
    // group is still on the wire or was already delivered. Members ordered by start.
    std::vector<std::uint64_t> resolve(std::uint64_t id, SimTime now);

    const BusTx& get(std::uint64_t id) const;

    // Drops resolved transmissions that ended before `before`.
    void prune(SimTime before);

    SimTime propagation_delay() const { return propagation_ns_; }

private:
    BusTx* find(std::uint64_t id);

    BusTiming timing_;
    SimTime propagation_ns_ = 0;
    std::deque<BusTx> live_;
    std::uint64_t next_id_ = 1;
};

}  // namespace ttstn
