#pragma once

#include "ttstn/ifs.hpp"
#include "ttstn/time.hpp"
#include "ttstn/wire.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ttstn {

enum class SlotKind { Send, Receive, Execute, Idle };

std::string_view to_string(SlotKind kind);
SlotKind parse_slot_kind(std::string_view text);

inline constexpr int kMaxRoundSlots = 255;

struct SlotAction {
    SlotKind kind = SlotKind::Idle;
    std::uint8_t file = 0;
    std::uint8_t record = 0;
    // Consecutive byte slots, one byte per slot, most significant byte first.
    int length_slots = 1;

    friend bool operator==(const SlotAction&, const SlotAction&) = default;
};

struct RodlEntry {
    int slot_index = 1;  // slot 0 carries the fireworks byte
    Alias actor = 0;
    SlotAction action;

    int last_slot() const { return slot_index + action.length_slots - 1; }

    friend bool operator==(const RodlEntry&, const RodlEntry&) = default;
};

struct Rodl {
    RoundId round_id = 0;
    std::vector<RodlEntry> entries;
    int round_length_slots = 1;  // includes the fireworks slot

    std::vector<RodlEntry> entries_for(Alias actor) const;
    // Entry whose Send covers `slot`, if any.
    const RodlEntry* sender_at(int slot) const;
};

// Validates and orders entries (slot, then kind, then actor). `length_slots`
// defaults to the smallest round that holds every entry.
Rodl build_rodl(RoundId round_id, std::vector<RodlEntry> entries, std::optional<int> length_slots = std::nullopt);

struct ClusterSchedule {
    // Round ids in execution order; a master/slave round appears as 6 followed by 7.
    std::vector<RoundId> sequence;
    SimTime cycle_duration = 0;
    int ms_rounds_per_cycle = 0;
};

struct PlannedRound {
    RoundId round_id = 0;
    int index = 0;           // position in the cycle sequence
    SimTime offset = 0;      // from cycle start to the fireworks byte
    SimTime duration = 0;    // slots * slot_ns
    int slots = 0;
};

int round_slots(RoundId id, const std::map<RoundId, Rodl>& rodls);

// Lays the sequence out back to back with the inter-round gap after every round.
// Throws Overflow if the cycle cannot hold it.
std::vector<PlannedRound> plan_cycle(const ClusterSchedule& schedule, const std::map<RoundId, Rodl>& rodls,
                                     const BusTiming& timing);

// One MS round after every `ms_interleave` MP rounds; a trailing MS round is
// appended so each cycle has at least one.
ClusterSchedule recommended_schedule(std::span<const Rodl> mp_rodls, int ms_interleave, SimTime cycle_duration,
                                     const BusTiming& timing);

enum class Severity { Warning, Error };

struct ValidationIssue {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    std::optional<int> round;
    std::optional<int> slot;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const;
    std::size_t error_count() const;
    std::size_t warning_count() const;
    bool has(std::string_view code) const;
    std::string to_text() const;
};

// Active interval opened by an Execute binding; bindings sharing a group must not overlap.
struct ExclusiveWindow {
    std::uint8_t file = 0;
    std::uint8_t record = 0;
    std::string group;
    SimTime duration = 0;
};

struct NodeView {
    std::string name;
    std::optional<Alias> alias;  // nullopt: not baptized
    std::vector<FileLayout> files;
    std::vector<std::pair<std::uint8_t, std::uint8_t>> executable;
    std::vector<ExclusiveWindow> windows;
};

struct ClusterView {
    BusTiming timing;
    std::optional<ClusterSchedule> schedule;
    std::vector<NodeView> nodes;  // the master appears with alias kMasterAlias
};

ValidationReport validate_schedule(std::span<const Rodl> rodls, const ClusterView& cluster);

}  // namespace ttstn
