#include "ttstn/bus.hpp"

#include <algorithm>
#include <stdexcept>

namespace ttstn {

Combined combine(std::span<const std::pair<std::uint8_t, TxMode>> bytes)
{
    Combined c;
    if (bytes.empty())
        return c;
    c.byte = bytes.front().first;
    if (bytes.size() == 1)
        return c;
    const bool wired = std::all_of(bytes.begin(), bytes.end(), [](const auto& b) { return b.second == TxMode::WiredAnd; });
    if (!wired) {
        c.status = RxStatus::Collision;
        return c;
    }
    bool same = true;
    for (const auto& [b, _] : bytes) {
        same = same && b == c.byte;
        c.byte &= b;
    }
    c.status = same ? RxStatus::Clean : RxStatus::Ambiguous;
    return c;
}

std::uint64_t SimBus::transmit(int sender, const Transmission& tx)
{
    BusTx b;
    b.id = next_id_++;
    b.sender = sender;
    b.tx = tx;
    b.end = tx.start + timing_.frame_ns + propagation_ns_;
    live_.push_back(b);
    return b.id;
}

BusTx* SimBus::find(std::uint64_t id)
{
    for (auto& b : live_)
        if (b.id == id)
            return &b;
    return nullptr;
}

const BusTx& SimBus::get(std::uint64_t id) const
{
    for (const auto& b : live_)
        if (b.id == id)
            return b;
    throw std::out_of_range("unknown bus transmission");
}

std::vector<std::uint64_t> SimBus::resolve(std::uint64_t id, SimTime now)
{
    BusTx* self = find(id);
    if (!self || self->resolved)
        return {};
    // Transitive closure of interval overlap among undelivered bytes.
    std::vector<BusTx*> group{self};
    for (std::size_t i = 0; i < group.size(); ++i) {
        for (auto& b : live_) {
            if (b.resolved || std::find(group.begin(), group.end(), &b) != group.end())
                continue;
            if (b.tx.start < group[i]->end && group[i]->tx.start < b.end)
                group.push_back(&b);
        }
    }
    for (auto* b : group)
        if (b->end > now)
            return {};
    std::sort(group.begin(), group.end(), [](const BusTx* a, const BusTx* b) {
        return a->tx.start != b->tx.start ? a->tx.start < b->tx.start : a->id < b->id;
    });
    std::vector<std::uint64_t> ids;
    for (auto* b : group) {
        b->resolved = true;
        ids.push_back(b->id);
    }
    return ids;
}

void SimBus::prune(SimTime before)
{
    live_.erase(std::remove_if(live_.begin(), live_.end(),
                               [&](const BusTx& b) { return b.resolved && b.end < before; }),
                live_.end());
}

}  // namespace ttstn
