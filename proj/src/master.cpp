#include "ttstn/master.hpp"

#include "ttstn/error.hpp"

#include <algorithm>

namespace ttstn {

std::string_view to_string(MsStatus s)
{
    switch (s) {
    case MsStatus::Ok: return "ok";
    case MsStatus::Timeout: return "timeout";
    case MsStatus::DataPhase: return "data-phase";
    case MsStatus::DeadlineMissed: return "deadline-missed";
    }
    return "?";
}

MasterMachine::MasterMachine(std::string name, const PhysicalName& physical, const BusTiming& timing,
                             ClusterSchedule schedule, std::map<RoundId, Rodl> rodls)
    : Node(std::move(name), physical, timing), schedule_(std::move(schedule)), rodls_(std::move(rodls))
{
    if (schedule_.sequence.empty())
        throw Error(ErrorCode::Validation, "cluster schedule is empty");
    if (schedule_.cycle_duration <= 0)
        throw Error(ErrorCode::Validation, "cycle duration must be positive");
    plan_ = plan_cycle(schedule_, rodls_, timing_);
}

std::vector<RodlEntry> MasterMachine::own_entries(RoundId round) const
{
    auto it = rodls_.find(round);
    if (it == rodls_.end())
        return {};
    return it->second.entries_for(kMasterAlias);
}

void MasterMachine::add_entries(RoundId round, const std::vector<RodlEntry>& entries)
{
    auto it = rodls_.find(round);
    if (it == rodls_.end())
        throw Error(ErrorCode::Configuration, "round " + std::to_string(round) + " is not scheduled");
    std::vector<RodlEntry> merged = it->second.entries;
    for (const auto& e : entries)
        if (std::find(merged.begin(), merged.end(), e) == merged.end())
            merged.push_back(e);
    it->second = build_rodl(round, std::move(merged), it->second.round_length_slots);
}

int MasterMachine::ms_rounds_per_cycle() const
{
    return static_cast<int>(std::count(schedule_.sequence.begin(), schedule_.sequence.end(), kMsAddressRound));
}

int MasterMachine::eligible_cycle(SimTime t) const
{
    int c = cycle_at(t);
    for (int tries = 0; tries < 2; ++tries, ++c)
        for (const auto& pr : plan_)
            if (pr.round_id == kMsAddressRound && cycle_start(c) + pr.offset >= t)
                return c;
    return c;
}

std::uint64_t MasterMachine::enqueue(const MsRequest& request, std::optional<SimTime> deadline, SimTime release)
{
    validate_ms_request(request);
    std::lock_guard lock(mutex_);
    Queued q;
    q.ticket = next_ticket_++;
    q.request = request;
    q.deadline = deadline;
    q.release = release;
    q.position = static_cast<int>(queue_.size()) + 1;
    q.eligible_cycle = eligible_cycle(release);
    queue_.push_back(q);
    return q.ticket;
}

std::size_t MasterMachine::queue_length() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

bool MasterMachine::idle() const
{
    std::lock_guard lock(mutex_);
    return queue_.empty() && !active_;
}

std::optional<MsCompletion> MasterMachine::completion(std::uint64_t ticket) const
{
    std::lock_guard lock(mutex_);
    auto it = completions_.find(ticket);
    if (it == completions_.end())
        return std::nullopt;
    return it->second;
}

std::vector<MsCompletion> MasterMachine::completions() const
{
    std::lock_guard lock(mutex_);
    std::vector<MsCompletion> out;
    for (const auto& [_, c] : completions_)
        out.push_back(c);
    return out;
}

bool MasterMachine::mirrors(std::uint8_t file, std::uint8_t record) const
{
    for (const auto& [_, rodl] : rodls_)
        for (const auto& e : rodl.entries)
            if (e.actor == kMasterAlias && e.action.kind == SlotKind::Receive && e.action.file == file &&
                e.action.record == record)
                return true;
    return false;
}

RsValue MasterMachine::rs_value(std::uint8_t file, std::uint8_t record) const
{
    RsValue v;
    v.value = ifs_.pull(file, record);
    auto it = rs_cycle_.find({file, record});
    if (it != rs_cycle_.end())
        v.cycle = it->second;
    return v;
}

std::uint64_t MasterMachine::token(Op op, int a, int b)
{
    return (static_cast<std::uint64_t>(op) << 56) | ((static_cast<std::uint64_t>(a) & 0xFFFFFFull) << 24) |
           (static_cast<std::uint64_t>(b) & 0xFFFFFFull);
}

SlotTag MasterMachine::tag(int slot) const { return {cycle_, round_id_, slot, round_begin_}; }

NodeOutput MasterMachine::start(SimTime now)
{
    running_ = true;
    NodeOutput out;
    const int c = cycle_at(now);
    // First round at or after `now`.
    for (int cc = c; cc <= c + 1; ++cc)
        for (std::size_t i = 0; i < plan_.size(); ++i)
            if (cycle_start(cc) + plan_[i].offset >= now) {
                out.wakeups.push_back({cycle_start(cc) + plan_[i].offset, WakeKind::RoundStart,
                                       token(Op::RoundStart, cc, static_cast<int>(i))});
                goto scheduled;
            }
scheduled:
    for (std::size_t i = 0; i < tasks_.size(); ++i)
        if (std::holds_alternative<PeriodTrigger>(tasks_[i].trigger))
            out.append(schedule_periodic(i, now));
    return out;
}

NodeOutput MasterMachine::round_start(int cycle, int index, SimTime now)
{
    NodeOutput out;
    const PlannedRound& pr = plan_[static_cast<std::size_t>(index)];
    cycle_ = cycle;
    round_id_ = pr.round_id;
    round_begin_ = now;
    round_slots_ = pr.slots;
    snapshots_.clear();
    received_mask_.clear();
    ms_rx_.fill(std::nullopt);
    ms_ambiguous_ = false;

    out.tx.push_back({now, fireworks_encode(pr.round_id), TxMode::Normal, true, tag(0)});

    auto at = [&](int slot) { return now + timing_.slots(slot); };

    if (is_mp_round(pr.round_id)) {
        active_entries_ = own_entries(pr.round_id);
        for (std::size_t i = 0; i < active_entries_.size(); ++i) {
            const auto& e = active_entries_[i];
            if (e.action.kind == SlotKind::Send)
                for (int s = e.slot_index; s <= e.last_slot(); ++s)
                    out.wakeups.push_back({at(s), WakeKind::Send, token(Op::Send, static_cast<int>(i), s)});
            else if (e.action.kind == SlotKind::Execute)
                out.wakeups.push_back({at(e.slot_index), WakeKind::Execute, token(Op::Execute, static_cast<int>(i), e.slot_index)});
        }
    } else {
        active_entries_.clear();
    }

    if (pr.round_id == kMsAddressRound) {
        std::vector<Queued> expired;
        {
            std::lock_guard lock(mutex_);
            while (!queue_.empty() && queue_.front().deadline && now > *queue_.front().deadline) {
                expired.push_back(queue_.front());
                queue_.pop_front();
            }
            if (!active_ && !queue_.empty() && queue_.front().release <= now) {
                active_ = queue_.front();
                queue_.pop_front();
            }
        }
        for (auto& q : expired)
            complete(q, MsStatus::DeadlineMissed, Record{}, false, now, cycle);
        if (active_) {
            ms_tx_ = ms_encode_address_phase(active_->request);
            for (int s = 1; s <= kMsPhaseBytes; ++s)
                out.wakeups.push_back({at(s), WakeKind::Send, token(Op::MsSend, 0, s)});
        }
    } else if (pr.round_id == kMsDataRound && active_ && active_->request.action == MsAction::Write) {
        ms_tx_ = ms_encode_data_phase(active_->request.data);
        for (int s = 1; s <= kMsPhaseBytes; ++s)
            out.wakeups.push_back({at(s), WakeKind::Send, token(Op::MsSend, 0, s)});
    }

    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto* st = std::get_if<SlotTrigger>(&tasks_[i].trigger);
        if (st && st->round == pr.round_id && st->slot < pr.slots)
            out.wakeups.push_back({at(st->slot), WakeKind::Task, token(Op::SlotTask, static_cast<int>(i), st->slot)});
    }
    out.wakeups.push_back({at(pr.slots), WakeKind::RoundEnd, token(Op::RoundEnd, 0, 0)});

    int next_cycle = cycle;
    int next_index = index + 1;
    if (next_index == static_cast<int>(plan_.size())) {
        next_index = 0;
        ++next_cycle;
    }
    out.wakeups.push_back({cycle_start(next_cycle) + plan_[static_cast<std::size_t>(next_index)].offset,
                           WakeKind::RoundStart, token(Op::RoundStart, next_cycle, next_index)});
    return out;
}

void MasterMachine::complete(Queued q, MsStatus status, const Record& data, bool response, SimTime now, int cycle)
{
    MsCompletion c;
    c.ticket = q.ticket;
    c.request = q.request;
    c.status = status;
    c.data = data;
    c.response = response;
    c.position = q.position;
    c.eligible_cycle = q.eligible_cycle;
    c.completion_cycle = cycle;
    c.latency_cycles = cycle - q.eligible_cycle + 1;
    c.completed_at = now;
    std::lock_guard lock(mutex_);
    completions_[c.ticket] = c;
}

void MasterMachine::round_end()
{
    if (round_id_ != kMsDataRound || !active_)
        return;
    Queued q = *active_;
    active_.reset();
    const MsRequest& r = q.request;
    const SimTime now = round_begin_ + timing_.slots(round_slots_);
    const bool complete_frame = std::all_of(ms_rx_.begin(), ms_rx_.end(), [](const auto& b) { return b.has_value(); });
    auto decoded = [&]() -> std::optional<Record> {
        if (!complete_frame)
            return std::nullopt;
        MsFrame f;
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = *ms_rx_[i];
        return ms_decode_data_phase(f);
    };

    switch (r.action) {
    case MsAction::Write:
        complete(q, MsStatus::Ok, r.data, false, now, cycle_);
        break;
    case MsAction::Probe:
        complete(q, MsStatus::Ok, Record{}, ms_rx_[0].has_value() || ms_ambiguous_, now, cycle_);
        break;
    case MsAction::Execute:
        if (r.alias == kBroadcastAlias) {
            complete(q, MsStatus::Ok, Record{}, false, now, cycle_);
            break;
        }
        [[fallthrough]];
    case MsAction::Read: {
        if (!complete_frame) {
            complete(q, MsStatus::Timeout, Record{}, false, now, cycle_);
            break;
        }
        auto data = decoded();
        if (!data || (r.action == MsAction::Execute && *data != kExecuteAck))
            complete(q, MsStatus::DataPhase, Record{}, false, now, cycle_);
        else
            complete(q, MsStatus::Ok, *data, true, now, cycle_);
        break;
    }
    }
}

NodeOutput MasterMachine::on_delivery(const Delivery& d)
{
    NodeOutput out;
    const SimTime offset = d.time - timing_.frame_ns - round_begin_;
    if (offset < 0)
        return out;
    const SimTime k = (offset + timing_.slot_ns / 2) / timing_.slot_ns;
    if (k < 1 || k >= round_slots_)
        return out;
    const int slot = static_cast<int>(k);

    if (round_id_ == kMsDataRound) {
        if (d.status == RxStatus::Clean)
            ms_rx_[static_cast<std::size_t>(slot - 1)] = d.byte;
        else if (d.status == RxStatus::Ambiguous)
            ms_ambiguous_ = true;
        return out;
    }
    if (!is_mp_round(round_id_) || d.status != RxStatus::Clean)
        return out;
    for (std::size_t i = 0; i < active_entries_.size(); ++i) {
        const auto& e = active_entries_[i];
        if (e.action.kind != SlotKind::Receive || slot < e.slot_index || slot > e.last_slot())
            continue;
        const int byte_index = slot - e.slot_index;
        ifs_.push_byte(e.action.file, e.action.record, static_cast<std::size_t>(byte_index), d.byte);
        unsigned& mask = received_mask_[i];
        mask |= 1u << byte_index;
        if (mask == (1u << e.action.length_slots) - 1u)
            rs_cycle_[{e.action.file, e.action.record}] = cycle_;
    }
    return out;
}

NodeOutput MasterMachine::on_wakeup(const Wakeup& w)
{
    NodeOutput out;
    if (w.token & kPeriodicTag)
        return run_periodic(static_cast<std::size_t>(w.token & 0xFFFFFFFFull), w.time, tag(-1));
    const auto op = static_cast<Op>(w.token >> 56);
    const int a = static_cast<int>((w.token >> 24) & 0xFFFFFF);
    const int b = static_cast<int>(w.token & 0xFFFFFF);
    switch (op) {
    case Op::RoundStart:
        return round_start(a, b, w.time);
    case Op::RoundEnd:
        round_end();
        break;
    case Op::Send: {
        const auto& e = active_entries_[static_cast<std::size_t>(a)];
        if (b == e.slot_index)
            snapshots_[static_cast<std::size_t>(a)] = ifs_.pull(e.action.file, e.action.record);
        out.tx.push_back({w.time, snapshots_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b - e.slot_index)],
                          TxMode::Normal, false, tag(b)});
        break;
    }
    case Op::Execute: {
        const auto& e = active_entries_[static_cast<std::size_t>(a)];
        out.invocations.push_back(run_execute(e.action.file, e.action.record, w.time, TriggerKind::SlotExecute, tag(b)));
        break;
    }
    case Op::SlotTask:
        out.invocations.push_back(run_task(static_cast<std::size_t>(a), w.time, TriggerKind::Slot, tag(b)));
        break;
    case Op::MsSend:
        out.tx.push_back({w.time, ms_tx_[static_cast<std::size_t>(b - 1)], TxMode::Normal, false, tag(b)});
        break;
    }
    return out;
}

}  // namespace ttstn
