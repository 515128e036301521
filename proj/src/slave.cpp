#include "ttstn/slave.hpp"

#include "ttstn/error.hpp"

#include <algorithm>
#include <cstdlib>

namespace ttstn {

namespace {

// A fireworks candidate must follow at least this much line time since the
// previous arrival; consecutive slot bytes arrive one slot (13 bits) apart.
constexpr int kCandidateSpacingBits = 16;

std::uint8_t saturate(int v) { return static_cast<std::uint8_t>(std::min(v, 255)); }

bool prefix_matches(std::uint64_t name, std::uint64_t reg, int k)
{
    if (k <= 0)
        return true;
    if (k >= 64)
        return name == reg;
    return (name >> (64 - k)) == (reg >> (64 - k));
}

}  // namespace

SlaveMachine::SlaveMachine(std::string name, const PhysicalName& physical, const BusTiming& timing,
                           std::optional<Alias> alias)
    : Node(std::move(name), physical, timing)
{
    if (alias) {
        if (!is_node_alias(*alias))
            throw Error(ErrorCode::Validation, "slave alias must be in 1..250, got " + std::to_string(*alias));
        ifs_.push(sysfile::kConfiguration, cfgfile::kAliasRecord, Record{*alias, 0, 0, 0});
    }
    refresh_status();
}

Alias SlaveMachine::alias() const { return ifs_.pull(sysfile::kConfiguration, cfgfile::kAliasRecord)[0]; }

void SlaveMachine::install_configuration(const NodeConfiguration& config)
{
    for (const auto& [rec, bytes] : serialize_configuration(config))
        ifs_.push(sysfile::kConfiguration, rec, bytes);
    reload_configuration();
}

std::uint64_t SlaveMachine::token(Op op, int index, int slot) const
{
    return ((epoch_ & 0x7FFFFFFFull) << 32) | (static_cast<std::uint64_t>(op) << 28) |
           ((static_cast<std::uint64_t>(index) & 0xFFFFFull) << 8) | (static_cast<std::uint64_t>(slot) & 0xFFull);
}

SimTime SlaveMachine::slot_start(int slot) const { return clock_.real_at(round_.anchor_local + timing_.slots(slot)); }

SlotTag SlaveMachine::slot_tag(int slot) const
{
    SlotTag t = round_.tag;
    t.slot = slot;
    return t;
}

int SlaveMachine::round_length(RoundId id) const
{
    if (is_ms_round(id))
        return kMsRoundSlots;
    if (config_)
        return config_->round_lengths[id];
    return 0;
}

void SlaveMachine::note_round(RoundId id)
{
    if (!config_ || config_->sequence.empty())
        return;
    const auto& seq = config_->sequence;
    const std::size_t n = seq.size();
    const std::size_t from = sequence_pos_ ? (*sequence_pos_ + 1) % n : 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = (from + i) % n;
        if (seq[p] == id) {
            sequence_pos_ = p;
            return;
        }
    }
}

NodeOutput SlaveMachine::start(SimTime now)
{
    running_ = true;
    NodeOutput out;
    for (std::size_t i = 0; i < tasks_.size(); ++i)
        if (std::holds_alternative<PeriodTrigger>(tasks_[i].trigger))
            out.append(schedule_periodic(i, now));
    return out;
}

NodeOutput SlaveMachine::on_delivery(const Delivery& d)
{
    NodeOutput out;
    const SimTime local = clock_.local_at(d.time);
    const bool spaced =
        !last_arrival_local_ || local - *last_arrival_local_ >= kCandidateSpacingBits * timing_.bit_ns;
    last_arrival_local_ = local;

    switch (state_) {
    case SlaveState::Listening:
        if (!spaced)
            break;
        if (d.status == RxStatus::Clean) {
            if (auto id = fireworks_decode(d.byte)) {
                out = begin_round(*id, d);
                break;
            }
        }
        out = bad_fireworks(d);
        break;
    case SlaveState::InRound: {
        const SimTime offset = local - timing_.frame_ns - round_.anchor_local;
        const SimTime k = (offset + timing_.slot_ns / 2) / timing_.slot_ns;
        const SimTime deviation = offset - k * timing_.slot_ns;
        if (offset < 0 || k < 1 || k >= round_.length || std::llabs(deviation) > timing_.slot_gap_ns) {
            ++counters_.framing_errors;
            abandon_round();
            break;
        }
        store_byte(static_cast<int>(k), d);
        break;
    }
    case SlaveState::Skipping:
        break;
    }
    return out;
}

NodeOutput SlaveMachine::begin_round(RoundId id, const Delivery& fw)
{
    NodeOutput out;
    const int length = round_length(id);
    if (length <= 0)
        return out;  // unknown multipartner round: keep listening

    clock_.resync(fw.time, fw.time);
    ++epoch_;
    state_ = SlaveState::InRound;
    round_.id = id;
    round_.length = length;
    round_.anchor_local = fw.time - timing_.frame_ns;
    round_.tag = {fw.tag.cycle, id, 0, fw.tag.round_start};
    ++counters_.rounds;
    note_round(id);
    send_snapshots_.clear();
    ms_rx_.fill(std::nullopt);

    if (is_mp_round(id) && config_ && baptized()) {
        for (std::size_t i = 0; i < config_->entries.size(); ++i) {
            const auto& e = config_->entries[i];
            if (e.round != id)
                continue;
            if (e.action.kind == SlotKind::Send)
                for (int s = e.slot; s < e.slot + e.action.length_slots; ++s)
                    out.wakeups.push_back({slot_start(s), WakeKind::Send, token(Op::MpSend, static_cast<int>(i), s)});
            else if (e.action.kind == SlotKind::Execute)
                out.wakeups.push_back({slot_start(e.slot), WakeKind::Execute, token(Op::MpExecute, static_cast<int>(i), e.slot)});
        }
    }
    if (id == kMsDataRound)
        plan_data_phase(out);
    else if (id == kMsAddressRound)
        pending_.reset();

    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto* st = std::get_if<SlotTrigger>(&tasks_[i].trigger);
        if (!st || st->round != id || st->slot >= length)
            continue;
        const SimTime t = std::max(fw.time, slot_start(st->slot));
        out.wakeups.push_back({t, WakeKind::Task, token(Op::SlotTask, static_cast<int>(i), st->slot)});
    }
    out.wakeups.push_back({slot_start(length), WakeKind::RoundEnd, token(Op::RoundEnd, 0, 0)});
    return out;
}

NodeOutput SlaveMachine::bad_fireworks(const Delivery& d)
{
    NodeOutput out;
    ++counters_.decode_errors;
    refresh_status();
    if (!config_ || config_->sequence.empty())
        return out;
    // The lost round is the one after the last recognised round.
    const auto& seq = config_->sequence;
    const std::size_t next = sequence_pos_ ? (*sequence_pos_ + 1) % seq.size() : 0;
    const int length = round_length(seq[next]);
    sequence_pos_ = next;
    if (length <= 0)
        return out;
    ++epoch_;
    state_ = SlaveState::Skipping;
    ++counters_.skipped_rounds;
    pending_.reset();
    round_.id = seq[next];
    round_.length = length;
    round_.anchor_local = clock_.local_at(d.time) - timing_.frame_ns;
    round_.tag = {};
    out.wakeups.push_back({slot_start(length), WakeKind::RoundEnd, token(Op::RoundEnd, 0, 0)});
    return out;
}

void SlaveMachine::abandon_round()
{
    ++epoch_;
    state_ = SlaveState::Listening;
    pending_.reset();
    send_snapshots_.clear();
    refresh_status();
}

void SlaveMachine::store_byte(int slot, const Delivery& d)
{
    const bool clean = d.status == RxStatus::Clean;
    if (is_ms_round(round_.id)) {
        if (slot <= kMsPhaseBytes)
            ms_rx_[static_cast<std::size_t>(slot - 1)] =
                clean ? std::optional<std::uint8_t>(d.byte) : std::optional<std::uint8_t>();
        return;
    }
    if (!config_ || !clean || !baptized())
        return;
    for (const auto& e : config_->entries) {
        if (e.round != round_.id || e.action.kind != SlotKind::Receive)
            continue;
        if (slot < e.slot || slot >= e.slot + e.action.length_slots)
            continue;
        ifs_.push_byte(e.action.file, e.action.record, static_cast<std::size_t>(slot - e.slot), d.byte);
    }
}

void SlaveMachine::plan_data_phase(NodeOutput& out)
{
    if (!pending_ || muted_)
        return;
    const MsRequest& r = *pending_;
    const bool unicast = r.alias != kBroadcastAlias && r.alias == alias();
    switch (r.action) {
    case MsAction::Read:
        if (!unicast)
            return;
        if (!ifs_.has_record(r.file, r.record)) {
            ++counters_.ms_errors;
            return;
        }
        ms_tx_ = ms_encode_data_phase(ifs_.pull(r.file, r.record));
        for (int s = 1; s <= kMsPhaseBytes; ++s)
            out.wakeups.push_back({slot_start(s), WakeKind::Send, token(Op::MsSend, 0, s)});
        break;
    case MsAction::Execute:
        out.wakeups.push_back({slot_start(1), WakeKind::Execute, token(Op::MsExecute, unicast ? 1 : 0, 1)});
        break;
    case MsAction::Probe: {
        if (baptized())
            return;
        const Record hi = ifs_.pull(sysfile::kMembership, sysfile::kSearchHighRecord);
        const Record lo = ifs_.pull(sysfile::kMembership, sysfile::kSearchLowRecord);
        const std::uint64_t reg = (std::uint64_t{record_to_u32(hi)} << 32) | record_to_u32(lo);
        if (prefix_matches(physical_.value(), reg, r.record))
            out.wakeups.push_back({slot_start(1), WakeKind::Send, token(Op::ProbeReply, 0, 1)});
        break;
    }
    case MsAction::Write:
        break;
    }
}

NodeOutput SlaveMachine::on_wakeup(const Wakeup& w)
{
    NodeOutput out;
    if (w.token & kPeriodicTag) {
        const SlotTag tag = state_ == SlaveState::InRound ? round_.tag : SlotTag{};
        return run_periodic(static_cast<std::size_t>(w.token & 0xFFFFFFFFull), w.time, tag);
    }
    if ((w.token >> 32) != (epoch_ & 0x7FFFFFFFull))
        return out;  // belongs to an abandoned round
    const auto op = static_cast<Op>((w.token >> 28) & 0xF);
    const int index = static_cast<int>((w.token >> 8) & 0xFFFFF);
    const int slot = static_cast<int>(w.token & 0xFF);

    auto transmit = [&](std::uint8_t byte, TxMode mode) {
        if (!muted_)
            out.tx.push_back({w.time, byte, mode, false, slot_tag(slot)});
    };

    switch (op) {
    case Op::MpSend: {
        const auto& e = config_->entries[static_cast<std::size_t>(index)];
        if (slot == e.slot)
            send_snapshots_[index] = ifs_.pull(e.action.file, e.action.record);
        auto it = send_snapshots_.find(index);
        if (it != send_snapshots_.end())
            transmit(it->second[static_cast<std::size_t>(slot - e.slot)], TxMode::Normal);
        break;
    }
    case Op::MpExecute: {
        const auto& e = config_->entries[static_cast<std::size_t>(index)];
        out.invocations.push_back(run_execute(e.action.file, e.action.record, w.time, TriggerKind::SlotExecute, slot_tag(slot)));
        break;
    }
    case Op::SlotTask:
        out.invocations.push_back(run_task(static_cast<std::size_t>(index), w.time, TriggerKind::Slot, slot_tag(slot)));
        break;
    case Op::MsSend:
        transmit(ms_tx_[static_cast<std::size_t>(slot - 1)], TxMode::Normal);
        break;
    case Op::ProbeReply:
        transmit(kProbeResponse, TxMode::WiredAnd);
        break;
    case Op::MsExecute: {
        const MsRequest& r = *pending_;
        if (!ifs_.is_executable(r.file, r.record)) {
            ++counters_.ms_errors;
            break;
        }
        out.invocations.push_back(run_execute(r.file, r.record, w.time, TriggerKind::MsExecute, slot_tag(slot)));
        if (index == 1) {
            ms_tx_ = ms_encode_data_phase(kExecuteAck);
            transmit(ms_tx_[0], TxMode::Normal);
            for (int s = 2; s <= kMsPhaseBytes; ++s)
                out.wakeups.push_back({slot_start(s), WakeKind::Send, token(Op::MsSend, 0, s)});
        }
        break;
    }
    case Op::RoundEnd:
        out.append(finish_round());
        break;
    }
    return out;
}

NodeOutput SlaveMachine::finish_round()
{
    NodeOutput out;
    if (state_ == SlaveState::InRound && round_.id == kMsAddressRound) {
        bool complete = std::all_of(ms_rx_.begin(), ms_rx_.end(), [](const auto& b) { return b.has_value(); });
        if (complete) {
            MsFrame f;
            for (std::size_t i = 0; i < f.size(); ++i)
                f[i] = *ms_rx_[i];
            auto req = ms_decode_address_phase(f);
            if (!req)
                ++counters_.ms_errors;
            else if (req->alias == kBroadcastAlias || (baptized() && req->alias == alias()))
                pending_ = req;
        }
    } else if (state_ == SlaveState::InRound && round_.id == kMsDataRound && pending_ &&
               pending_->action == MsAction::Write) {
        bool complete = std::all_of(ms_rx_.begin(), ms_rx_.end(), [](const auto& b) { return b.has_value(); });
        std::optional<Record> data;
        if (complete) {
            MsFrame f;
            for (std::size_t i = 0; i < f.size(); ++i)
                f[i] = *ms_rx_[i];
            data = ms_decode_data_phase(f);
        }
        if (data)
            apply_write(*pending_, *data);
        else
            ++counters_.ms_errors;
    }
    if (round_.id == kMsDataRound)
        pending_.reset();
    ++epoch_;
    state_ = SlaveState::Listening;
    send_snapshots_.clear();
    refresh_status();
    return out;
}

void SlaveMachine::apply_write(const MsRequest& r, const Record& data)
{
    if (!ifs_.has_record(r.file, r.record)) {
        ++counters_.ms_errors;
        return;
    }
    if (r.file == sysfile::kMembership && r.record == sysfile::kStatusRecord)
        return;  // status is node-maintained
    if (r.file == sysfile::kMembership && r.record == sysfile::kAssignRecord) {
        const Record hi = ifs_.pull(sysfile::kMembership, sysfile::kSearchHighRecord);
        const Record lo = ifs_.pull(sysfile::kMembership, sysfile::kSearchLowRecord);
        const std::uint64_t reg = (std::uint64_t{record_to_u32(hi)} << 32) | record_to_u32(lo);
        if (reg == physical_.value() && is_node_alias(data[0]))
            ifs_.push(sysfile::kConfiguration, cfgfile::kAliasRecord, Record{data[0], 0, 0, 0});
        ifs_.push(r.file, r.record, data);
        return;
    }
    if (r.file == sysfile::kConfiguration && r.record == cfgfile::kAliasRecord) {
        const Alias a = is_node_alias(data[0]) ? data[0] : kBroadcastAlias;
        ifs_.push(r.file, r.record, Record{a, 0, 0, 0});
        return;
    }
    ifs_.push(r.file, r.record, data);
    if (r.file == sysfile::kConfiguration && r.record == cfgfile::kCommitRecord)
        reload_configuration();
}

void SlaveMachine::reload_configuration()
{
    config_ = parse_configuration(ifs_.file(sysfile::kConfiguration));
    if (config_) {
        for (const auto& e : config_->entries) {
            const auto& a = e.action;
            bool ok = ifs_.has_record(a.file, a.record) &&
                      (a.kind != SlotKind::Execute || ifs_.is_executable(a.file, a.record)) &&
                      e.slot + a.length_slots <= std::max<int>(config_->round_lengths[e.round], 1);
            if (!ok) {
                config_.reset();
                break;
            }
        }
    }
    sequence_pos_.reset();
    refresh_status();
}

void SlaveMachine::refresh_status()
{
    const std::uint8_t flags = static_cast<std::uint8_t>((baptized() ? sysfile::kStatusBaptized : 0) | (configured() ? sysfile::kStatusConfigured : 0));
    ifs_.push(sysfile::kMembership, sysfile::kStatusRecord,
              Record{flags, saturate(counters_.decode_errors), saturate(counters_.framing_errors),
                     saturate(counters_.ms_errors)});
}

}  // namespace ttstn
