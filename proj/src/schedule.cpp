#include "ttstn/schedule.hpp"

#include "ttstn/error.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace ttstn {

std::string_view to_string(SlotKind kind)
{
    switch (kind) {
    case SlotKind::Send: return "send";
    case SlotKind::Receive: return "receive";
    case SlotKind::Execute: return "execute";
    case SlotKind::Idle: return "idle";
    }
    return "?";
}

SlotKind parse_slot_kind(std::string_view text)
{
    if (text == "send") return SlotKind::Send;
    if (text == "receive") return SlotKind::Receive;
    if (text == "execute") return SlotKind::Execute;
    if (text == "idle") return SlotKind::Idle;
    throw Error(ErrorCode::Parse, "unknown slot action '" + std::string(text) + "'");
}

std::vector<RodlEntry> Rodl::entries_for(Alias actor) const
{
    std::vector<RodlEntry> out;
    for (const auto& e : entries)
        if (e.actor == actor)
            out.push_back(e);
    return out;
}

const RodlEntry* Rodl::sender_at(int slot) const
{
    for (const auto& e : entries)
        if (e.action.kind == SlotKind::Send && slot >= e.slot_index && slot <= e.last_slot())
            return &e;
    return nullptr;
}

namespace {

int kind_rank(SlotKind k)
{
    switch (k) {
    case SlotKind::Send: return 0;
    case SlotKind::Receive: return 1;
    case SlotKind::Execute: return 2;
    case SlotKind::Idle: return 3;
    }
    return 4;
}

std::string slot_name(RoundId round, int slot)
{
    return "round " + std::to_string(round) + " slot " + std::to_string(slot);
}

}  // namespace

Rodl build_rodl(RoundId round_id, std::vector<RodlEntry> entries, std::optional<int> length_slots)
{
    if (!is_mp_round(round_id))
        throw Error(ErrorCode::Validation, "round id " + std::to_string(round_id) + " is not a multipartner round");
    if (entries.empty())
        throw Error(ErrorCode::Validation, "RODL for round " + std::to_string(round_id) + " has no entries");

    int needed = 1;
    for (const auto& e : entries) {
        if (e.slot_index < 1)
            throw Error(ErrorCode::Validation, "slot index must be >= 1 in round " + std::to_string(round_id));
        if (!is_node_alias(e.actor) && e.actor != kMasterAlias)
            throw Error(ErrorCode::Validation,
                        "actor alias " + std::to_string(e.actor) + " cannot act in " + slot_name(round_id, e.slot_index));
        if (e.action.length_slots < 1)
            throw Error(ErrorCode::Validation, "length must be >= 1 at " + slot_name(round_id, e.slot_index));
        if ((e.action.kind == SlotKind::Send || e.action.kind == SlotKind::Receive) &&
            e.action.length_slots > static_cast<int>(kRecordBytes))
            throw Error(ErrorCode::Validation, "record transfer longer than 4 slots at " + slot_name(round_id, e.slot_index));
        if (e.action.kind == SlotKind::Execute && e.action.length_slots != 1)
            throw Error(ErrorCode::Validation, "execute must occupy one slot at " + slot_name(round_id, e.slot_index));
        if (e.action.file >= kMaxFiles)
            throw Error(ErrorCode::Validation, "file index out of range at " + slot_name(round_id, e.slot_index));
        needed = std::max(needed, e.last_slot() + 1);
    }

    std::stable_sort(entries.begin(), entries.end(), [](const RodlEntry& a, const RodlEntry& b) {
        if (a.slot_index != b.slot_index) return a.slot_index < b.slot_index;
        if (kind_rank(a.action.kind) != kind_rank(b.action.kind))
            return kind_rank(a.action.kind) < kind_rank(b.action.kind);
        return a.actor < b.actor;
    });

    std::map<int, Alias> senders;
    for (const auto& e : entries) {
        if (e.action.kind != SlotKind::Send)
            continue;
        for (int s = e.slot_index; s <= e.last_slot(); ++s) {
            auto [it, fresh] = senders.emplace(s, e.actor);
            if (!fresh)
                throw Error(ErrorCode::SlotConflict, "two senders in " + slot_name(round_id, s) + " (aliases " +
                                                         std::to_string(it->second) + " and " +
                                                         std::to_string(e.actor) + ")");
        }
    }

    const int length = length_slots.value_or(needed);
    if (length > kMaxRoundSlots)
        throw Error(ErrorCode::Overflow, "round " + std::to_string(round_id) + " longer than 255 slots");
    if (length < needed)
        throw Error(ErrorCode::Overflow, "round " + std::to_string(round_id) + " entries exceed round length " +
                                             std::to_string(length));
    return Rodl{round_id, std::move(entries), length};
}

int round_slots(RoundId id, const std::map<RoundId, Rodl>& rodls)
{
    if (is_ms_round(id))
        return kMsRoundSlots;
    auto it = rodls.find(id);
    if (it == rodls.end())
        throw Error(ErrorCode::Configuration, "schedule references undefined round " + std::to_string(id));
    return it->second.round_length_slots;
}

std::vector<PlannedRound> plan_cycle(const ClusterSchedule& schedule, const std::map<RoundId, Rodl>& rodls,
                                     const BusTiming& timing)
{
    std::vector<PlannedRound> plan;
    SimTime t = 0;
    int index = 0;
    for (RoundId id : schedule.sequence) {
        PlannedRound r;
        r.round_id = id;
        r.index = index++;
        r.slots = round_slots(id, rodls);
        r.offset = t;
        r.duration = timing.slots(r.slots);
        t += r.duration + timing.round_gap_ns;
        plan.push_back(r);
    }
    if (t > schedule.cycle_duration)
        throw Error(ErrorCode::Overflow, "rounds need " + format_duration(t) + " but the cycle is " +
                                             format_duration(schedule.cycle_duration));
    return plan;
}

ClusterSchedule recommended_schedule(std::span<const Rodl> mp_rodls, int ms_interleave, SimTime cycle_duration,
                                     const BusTiming& timing)
{
    if (mp_rodls.empty())
        throw Error(ErrorCode::Validation, "schedule needs at least one multipartner round");
    if (ms_interleave < 1)
        throw Error(ErrorCode::Validation, "ms_interleave must be >= 1");

    ClusterSchedule s;
    s.cycle_duration = cycle_duration;
    std::map<RoundId, Rodl> by_id;
    int since_ms = 0;
    for (const auto& r : mp_rodls) {
        by_id[r.round_id] = r;
        s.sequence.push_back(r.round_id);
        if (++since_ms == ms_interleave) {
            s.sequence.push_back(kMsAddressRound);
            s.sequence.push_back(kMsDataRound);
            ++s.ms_rounds_per_cycle;
            since_ms = 0;
        }
    }
    if (since_ms != 0) {
        s.sequence.push_back(kMsAddressRound);
        s.sequence.push_back(kMsDataRound);
        ++s.ms_rounds_per_cycle;
    }
    plan_cycle(s, by_id, timing);
    return s;
}

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const
{
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(),
                                                  [](const auto& i) { return i.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const { return issues.size() - error_count(); }

bool ValidationReport::has(std::string_view code) const
{
    return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
}

std::string ValidationReport::to_text() const
{
    std::ostringstream os;
    for (const auto& i : issues) {
        os << (i.severity == Severity::Error ? "error" : "warning") << ": [" << i.code << "] " << i.message;
        if (i.round)
            os << " (round " << *i.round;
        if (i.slot)
            os << (i.round ? ", " : " (") << "slot " << *i.slot;
        if (i.round || i.slot)
            os << ")";
        os << "\n";
    }
    return os.str();
}

namespace {

struct Interval {
    SimTime begin;
    SimTime end;
    std::string owner;
    int round;
    int slot;
};

bool intersects(SimTime a0, SimTime a1, SimTime b0, SimTime b1) { return a0 < b1 && b0 < a1; }

}  // namespace

ValidationReport validate_schedule(std::span<const Rodl> rodls, const ClusterView& cluster)
{
    ValidationReport report;
    auto add = [&](Severity sev, std::string code, std::string msg, std::optional<int> round = std::nullopt,
                   std::optional<int> slot = std::nullopt) {
        report.issues.push_back({sev, std::move(code), std::move(msg), round, slot});
    };

    std::map<Alias, const NodeView*> by_alias;
    for (const auto& n : cluster.nodes) {
        if (!n.alias)
            continue;
        if (*n.alias == kBroadcastAlias) {
            add(Severity::Error, "broadcast-alias", "node " + n.name + " uses the broadcast alias 0");
            continue;
        }
        if (!is_node_alias(*n.alias) && *n.alias != kMasterAlias) {
            add(Severity::Error, "reserved-alias", "node " + n.name + " uses reserved alias " + std::to_string(*n.alias));
            continue;
        }
        auto [it, fresh] = by_alias.emplace(*n.alias, &n);
        if (!fresh)
            add(Severity::Error, "duplicate-alias",
                "alias " + std::to_string(*n.alias) + " used by " + it->second->name + " and " + n.name);
    }

    auto has_record = [](const NodeView& n, int file, int record) {
        for (const auto& f : n.files)
            if (f.name == file)
                return record >= 0 && record < f.records;
        return false;
    };
    auto executable = [](const NodeView& n, int file, int record) {
        return std::find(n.executable.begin(), n.executable.end(),
                         std::pair<std::uint8_t, std::uint8_t>(static_cast<std::uint8_t>(file),
                                                               static_cast<std::uint8_t>(record))) !=
               n.executable.end();
    };

    std::map<RoundId, Rodl> by_id;
    for (const auto& rodl : rodls) {
        const int rid = rodl.round_id;
        if (!is_mp_round(rid)) {
            add(Severity::Error, "round-id", "round id " + std::to_string(rid) + " is reserved", rid);
            continue;
        }
        if (by_id.count(rodl.round_id))
            add(Severity::Error, "duplicate-round", "round " + std::to_string(rid) + " defined twice", rid);
        by_id[rodl.round_id] = rodl;
        if (rodl.entries.empty())
            add(Severity::Error, "empty-round", "round " + std::to_string(rid) + " has no entries", rid);
        if (rodl.round_length_slots > kMaxRoundSlots)
            add(Severity::Error, "round-length", "round longer than 255 slots", rid);

        std::map<int, Alias> senders;
        std::set<int> sent_slots;
        for (const auto& e : rodl.entries) {
            if (e.slot_index < 1)
                add(Severity::Error, "slot-index", "slot index must be >= 1", rid, e.slot_index);
            if (e.last_slot() >= rodl.round_length_slots)
                add(Severity::Error, "round-overflow",
                    "entry ends after the round (length " + std::to_string(rodl.round_length_slots) + ")", rid,
                    e.slot_index);
            if (e.actor == kBroadcastAlias) {
                add(Severity::Error, "broadcast-actor",
                    std::string("broadcast alias cannot ") + std::string(to_string(e.action.kind)), rid, e.slot_index);
                continue;
            }
            auto node_it = by_alias.find(e.actor);
            if (node_it == by_alias.end()) {
                add(Severity::Error, "unknown-alias", "alias " + std::to_string(e.actor) + " is not in the cluster",
                    rid, e.slot_index);
                continue;
            }
            const NodeView& node = *node_it->second;
            const auto& a = e.action;
            if (a.kind == SlotKind::Send || a.kind == SlotKind::Receive || a.kind == SlotKind::Execute) {
                if (!has_record(node, a.file, a.record))
                    add(Severity::Error, "dangling-reference",
                        node.name + " has no record " + std::to_string(a.file) + ":" + std::to_string(a.record), rid,
                        e.slot_index);
                else if (a.kind == SlotKind::Execute && !executable(node, a.file, a.record))
                    add(Severity::Error, "not-executable",
                        node.name + " has no execute binding at " + std::to_string(a.file) + ":" +
                            std::to_string(a.record),
                        rid, e.slot_index);
            }
            if ((a.kind == SlotKind::Send || a.kind == SlotKind::Receive) && a.length_slots > static_cast<int>(kRecordBytes))
                add(Severity::Error, "record-length", "record transfer longer than 4 slots", rid, e.slot_index);
            if (a.kind == SlotKind::Send) {
                for (int s = e.slot_index; s <= e.last_slot(); ++s) {
                    auto [it, fresh] = senders.emplace(s, e.actor);
                    sent_slots.insert(s);
                    if (!fresh)
                        add(Severity::Error, "slot-conflict",
                            "two senders in round " + std::to_string(rid) + " slot " + std::to_string(s) +
                                " (aliases " + std::to_string(it->second) + " and " + std::to_string(e.actor) + ")",
                            rid, s);
                }
            }
        }
        for (const auto& e : rodl.entries) {
            if (e.action.kind != SlotKind::Receive)
                continue;
            for (int s = e.slot_index; s <= e.last_slot(); ++s)
                if (!sent_slots.count(s))
                    add(Severity::Warning, "receive-without-sender", "nobody sends in this slot", rid, s);
        }
    }

    if (!cluster.schedule)
        return report;

    std::vector<PlannedRound> plan;
    try {
        plan = plan_cycle(*cluster.schedule, by_id, cluster.timing);
    } catch (const Error& e) {
        add(Severity::Error, e.code() == ErrorCode::Overflow ? "cycle-overflow" : "schedule", e.what());
        return report;
    }
    if (cluster.schedule->ms_rounds_per_cycle < 1)
        add(Severity::Warning, "no-ms-round", "cycle has no master/slave round");

    // Exclusive active windows, compared over two consecutive cycles to catch wrap-around.
    const SimTime cycle = cluster.schedule->cycle_duration;
    std::map<std::string, std::vector<Interval>> groups;
    for (const auto& pr : plan) {
        if (!is_mp_round(pr.round_id))
            continue;
        const Rodl& rodl = by_id.at(pr.round_id);
        for (const auto& e : rodl.entries) {
            if (e.action.kind != SlotKind::Execute)
                continue;
            auto node_it = by_alias.find(e.actor);
            if (node_it == by_alias.end())
                continue;
            for (const auto& w : node_it->second->windows) {
                if (w.file != e.action.file || w.record != e.action.record)
                    continue;
                const SimTime begin = pr.offset + cluster.timing.slots(e.slot_index);
                groups[w.group].push_back({begin, begin + w.duration, node_it->second->name, pr.round_id, e.slot_index});
            }
        }
    }
    for (const auto& [group, list] : groups) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                const auto& a = list[i];
                const auto& b = list[j];
                if (a.owner == b.owner)
                    continue;
                bool hit = false;
                for (SimTime shift : {-cycle, SimTime{0}, cycle})
                    hit = hit || intersects(a.begin, a.end, b.begin + shift, b.end + shift);
                if (hit)
                    add(Severity::Warning, "window-overlap",
                        "exclusive group '" + group + "': windows of " + a.owner + " and " + b.owner + " overlap",
                        b.round, b.slot);
            }
        }
    }
    return report;
}

}  // namespace ttstn
