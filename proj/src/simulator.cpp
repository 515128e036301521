#include "ttstn/simulator.hpp"

#include "ttstn/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ttstn {

std::string_view to_string(FaultSpec::Effect e)
{
    switch (e) {
    case FaultSpec::Effect::BitFlip: return "bitflip";
    case FaultSpec::Effect::Drop: return "drop";
    case FaultSpec::Effect::Spurious: return "spurious";
    }
    return "?";
}

std::string_view to_string(TraceKind k)
{
    switch (k) {
    case TraceKind::Fireworks: return "fireworks";
    case TraceKind::Send: return "send";
    case TraceKind::Execute: return "execute";
    case TraceKind::Collision: return "collision";
    case TraceKind::Fault: return "fault";
    case TraceKind::Ambiguous: return "ambiguous";
    case TraceKind::Spurious: return "spurious";
    }
    return "?";
}

std::string format_trace_line(const TraceRecord& r)
{
    auto field = [](int v) { return v < 0 ? std::string("-") : std::to_string(v); };
    std::string actor = r.actor == kMasterAlias ? "M" : field(r.actor);
    char byte[4] = "--";
    if (r.byte)
        std::snprintf(byte, sizeof byte, "%02x", *r.byte);
    std::string line = std::to_string(r.time);
    line += ',' + (r.tag.cycle > 0 ? std::to_string(r.tag.cycle) : std::string("-"));
    line += ',' + field(r.tag.round);
    line += ',' + field(r.tag.slot);
    line += ',' + actor;
    line += ',';
    line += byte;
    line += ',';
    line += to_string(r.kind);
    return line;
}

std::vector<TraceRecord> mp_projection(const std::vector<TraceRecord>& trace)
{
    std::vector<TraceRecord> out;
    for (const auto& r : trace)
        if (is_mp_round(r.tag.round))
            out.push_back(r);
    return out;
}

bool Simulator::Later::operator()(const Event& a, const Event& b) const
{
    if (a.time != b.time) return a.time > b.time;
    if (a.actor_key != b.actor_key) return a.actor_key > b.actor_key;
    if (a.rank != b.rank) return a.rank > b.rank;
    return a.seq > b.seq;
}

Simulator::Simulator(const BusTiming& timing, ClusterSchedule schedule, std::map<RoundId, Rodl> rodls,
                     SimOptions options)
    : timing_(timing), options_(options), bus_(timing)
{
    auto m = std::make_unique<MasterMachine>("M", options_.master_name, timing_, std::move(schedule), std::move(rodls));
    master_ = m.get();
    nodes_.push_back(std::move(m));
    actor_keys_.push_back(0);
}

Simulator::~Simulator() = default;

SlaveMachine& Simulator::add_slave(std::string name, const PhysicalName& physical, std::optional<Alias> alias)
{
    for (const auto& n : nodes_) {
        if (n->name() == name)
            throw Error(ErrorCode::Validation, "duplicate node name '" + name + "'");
        if (alias && n->alias() == *alias)
            throw Error(ErrorCode::Validation, "alias " + std::to_string(*alias) + " already used by " + n->name());
    }
    auto s = std::make_unique<SlaveMachine>(std::move(name), physical, timing_, alias);
    SlaveMachine& ref = *s;
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(s));
    actor_keys_.push_back(alias ? *alias : 1000 + index);
    if (started_)
        apply(index, ref.start(now_));
    return ref;
}

SlaveMachine* Simulator::find_slave(const std::string& name)
{
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (nodes_[i]->name() == name)
            return static_cast<SlaveMachine*>(nodes_[i].get());
    return nullptr;
}

SlaveMachine* Simulator::slave_by_alias(Alias alias)
{
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (nodes_[i]->alias() == alias)
            return static_cast<SlaveMachine*>(nodes_[i].get());
    return nullptr;
}

std::vector<SlaveMachine*> Simulator::slaves()
{
    std::vector<SlaveMachine*> out;
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        out.push_back(static_cast<SlaveMachine*>(nodes_[i].get()));
    return out;
}

Node& Simulator::node(const std::string& name)
{
    for (auto& n : nodes_)
        if (n->name() == name)
            return *n;
    throw Error(ErrorCode::Configuration, "unknown node '" + name + "'");
}

void Simulator::bind_task(const std::string& node_name, BoundTask task)
{
    if (const auto* st = std::get_if<SlotTrigger>(&task.trigger)) {
        const auto& seq = master_->schedule().sequence;
        if (std::find(seq.begin(), seq.end(), st->round) == seq.end())
            throw Error(ErrorCode::Configuration, "task '" + task.name + "' references round " +
                                                      std::to_string(st->round) + ", which is not scheduled");
        const int len = round_slots(st->round, master_->rodls());
        if (st->slot < 0 || st->slot >= len)
            throw Error(ErrorCode::Configuration, "task '" + task.name + "' references slot " +
                                                      std::to_string(st->slot) + " of round " +
                                                      std::to_string(st->round) + " (length " +
                                                      std::to_string(len) + ")");
    }
    node(node_name).bind_task(std::move(task));
}

void Simulator::set_drift(const std::string& node_name, double rho)
{
    Node& n = node(node_name);
    if (&n == master_ && rho != 0.0)
        throw Error(ErrorCode::Validation, "the master clock is the time reference");
    n.clock().set_rho(rho, options_.rho_max);
}

SimTime Simulator::nominal_time(const SlotRef& ref) const
{
    if (ref.cycle < 1)
        throw Error(ErrorCode::Validation, "cycles are numbered from 1");
    for (const auto& pr : master_->plan())
        if (pr.round_id == ref.round) {
            if (ref.slot < 0 || ref.slot >= pr.slots)
                throw Error(ErrorCode::Validation, "slot " + std::to_string(ref.slot) + " outside round " +
                                                       std::to_string(ref.round));
            return master_->cycle_start(ref.cycle) + pr.offset + timing_.slots(ref.slot);
        }
    throw Error(ErrorCode::Validation, "round " + std::to_string(ref.round) + " is not scheduled");
}

void Simulator::inject_fault(const FaultSpec& fault)
{
    if (fault.at.has_value() == fault.slot.has_value())
        throw Error(ErrorCode::Validation, "a fault needs exactly one of a time or a slot reference");
    if (fault.effect == FaultSpec::Effect::BitFlip && (fault.bit < 0 || fault.bit > 7))
        throw Error(ErrorCode::Range, "bit index must be 0..7");
    const SimTime when = fault.at ? *fault.at : nominal_time(*fault.slot);
    if (when < now_)
        throw Error(ErrorCode::StaleFault, "fault at " + std::to_string(when) + " ns is before the current time " +
                                               std::to_string(now_) + " ns");
    if (fault.effect == FaultSpec::Effect::Spurious) {
        SlotTag tag;
        if (fault.slot)
            tag = {fault.slot->cycle, fault.slot->round, fault.slot->slot, nominal_time({fault.slot->cycle, fault.slot->round, 0})};
        register_tx(-1, {when, fault.octet, TxMode::Normal, false, tag});
        return;
    }
    faults_.push_back({fault, false});
}

int Simulator::actor_of(int node) const
{
    if (node < 0)
        return -1;
    const Alias a = nodes_[static_cast<std::size_t>(node)]->alias();
    return a == kBroadcastAlias ? -1 : a;
}

void Simulator::push_wakeup(int node, const Wakeup& w)
{
    Event e;
    e.time = w.time;
    e.actor_key = actor_keys_[static_cast<std::size_t>(node)];
    e.rank = static_cast<int>(w.kind);
    e.seq = seq_++;
    e.node = node;
    e.wakeup = w;
    events_.push(e);
}

void Simulator::register_tx(int sender, const Transmission& tx)
{
    if (tx.start < now_)
        throw std::logic_error("transmission scheduled in the past");
    const std::uint64_t id = bus_.transmit(sender, tx);
    ++stats_.transmissions;
    if (tx.fireworks)
        ++stats_.fireworks;
    Event e;
    e.time = bus_.get(id).end;
    e.actor_key = sender < 0 ? -1 : actor_keys_[static_cast<std::size_t>(sender)];
    e.rank = 0;
    e.seq = seq_++;
    e.tx_id = id;
    events_.push(e);
}

void Simulator::apply(int node, NodeOutput&& out)
{
    for (const auto& tx : out.tx)
        register_tx(node, tx);
    for (const auto& w : out.wakeups)
        push_wakeup(node, w);
    for (auto& inv : out.invocations) {
        if (inv.trigger == TriggerKind::SlotExecute || inv.trigger == TriggerKind::MsExecute)
            trace_.push_back({inv.time, inv.tag, actor_of(node), std::nullopt, TraceKind::Execute});
        invocations_.push_back(std::move(inv));
    }
}

void Simulator::deliver(std::uint64_t tx_id, SimTime now)
{
    const auto members = bus_.resolve(tx_id, now);
    if (members.empty())
        return;

    std::vector<std::pair<std::uint8_t, TxMode>> contributions;
    std::vector<int> senders;
    SlotTag tag;
    bool have_tag = false;
    for (std::uint64_t id : members) {
        const BusTx& b = bus_.get(id);
        senders.push_back(b.sender);
        if (!have_tag || (b.sender >= 0 && tag.round < 0)) {
            tag = b.tx.tag;
            have_tag = true;
        }
        if (b.sender < 0) {
            trace_.push_back({b.tx.start, b.tx.tag, -1, b.tx.byte, TraceKind::Spurious});
            contributions.push_back({b.tx.byte, b.tx.mode});
            continue;
        }
        const int actor = actor_of(b.sender);
        trace_.push_back({b.tx.start, b.tx.tag, actor, b.tx.byte, b.tx.fireworks ? TraceKind::Fireworks : TraceKind::Send});

        if (b.sender != 0 && b.tx.tag.round_start >= 0 && b.tx.tag.slot >= 0) {
            const SimTime expected = b.tx.tag.round_start + timing_.slots(b.tx.tag.slot);
            if (std::llabs(b.tx.start - expected) > timing_.slot_gap_ns)
                ++stats_.slot_boundary_violations;
        }

        std::optional<std::uint8_t> byte = b.tx.byte;
        for (auto& f : faults_) {
            if (f.consumed)
                continue;
            bool hit = false;
            if (f.spec.at)
                hit = b.tx.start >= *f.spec.at;
            else
                hit = b.tx.tag.cycle == f.spec.slot->cycle && b.tx.tag.round == f.spec.slot->round &&
                      b.tx.tag.slot == f.spec.slot->slot;
            if (!hit)
                continue;
            f.consumed = true;
            ++stats_.faults_applied;
            if (f.spec.effect == FaultSpec::Effect::BitFlip)
                byte = static_cast<std::uint8_t>(*byte ^ (1u << f.spec.bit));
            else
                byte.reset();
            trace_.push_back({b.tx.start, b.tx.tag, actor, byte, TraceKind::Fault});
            break;
        }
        if (byte)
            contributions.push_back({*byte, b.tx.mode});
    }
    if (contributions.empty())
        return;

    const Combined c = combine(contributions);
    const BusTx& first = bus_.get(members.front());
    if (c.status == RxStatus::Collision) {
        ++stats_.collisions;
        trace_.push_back({first.tx.start, tag, -1, std::nullopt, TraceKind::Collision});
    } else if (c.status == RxStatus::Ambiguous) {
        ++stats_.ambiguous;
        trace_.push_back({first.tx.start, tag, -1, c.byte, TraceKind::Ambiguous});
    }
    ++stats_.deliveries;

    Delivery d{now, c.byte, c.status, tag};
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
        if (std::find(senders.begin(), senders.end(), i) == senders.end())
            order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return actor_keys_[static_cast<std::size_t>(a)] < actor_keys_[static_cast<std::size_t>(b)];
    });
    for (int i : order)
        apply(i, nodes_[static_cast<std::size_t>(i)]->on_delivery(d));
    bus_.prune(now - timing_.slot_ns);
}

void Simulator::start_nodes()
{
    started_ = true;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
        apply(i, nodes_[static_cast<std::size_t>(i)]->start(now_));
}

std::vector<TraceRecord> Simulator::advance(SimTime until)
{
    if (until < now_)
        throw Error(ErrorCode::Range, "cannot advance backwards");
    if (!started_)
        start_nodes();
    const std::size_t first = trace_.size();
    while (!events_.empty() && events_.top().time < until) {
        Event e = events_.top();
        events_.pop();
        now_ = e.time;
        if (e.node >= 0)
            apply(e.node, nodes_[static_cast<std::size_t>(e.node)]->on_wakeup(e.wakeup));
        else
            deliver(e.tx_id, now_);
    }
    now_ = until;
    return {trace_.begin() + static_cast<std::ptrdiff_t>(first), trace_.end()};
}

void Simulator::run_cycles(int count)
{
    const SimTime cycle = master_->schedule().cycle_duration;
    advance(static_cast<SimTime>(completed_cycles() + count) * cycle);
}

std::uint64_t Simulator::enqueue(const MsRequest& request, std::optional<SimTime> deadline)
{
    return master_->enqueue(request, deadline, now_);
}

MsCompletion Simulator::await(std::uint64_t ticket, int max_cycles)
{
    for (int i = 0; i <= max_cycles; ++i) {
        if (auto c = master_->completion(ticket))
            return *c;
        run_cycles(1);
    }
    throw Error(ErrorCode::Timeout, "ticket " + std::to_string(ticket) + " not served within " +
                                        std::to_string(max_cycles) + " cycles");
}

void Simulator::export_trace(std::ostream& out) const
{
    std::vector<const TraceRecord*> sorted;
    sorted.reserve(trace_.size());
    for (const auto& r : trace_)
        sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const TraceRecord* a, const TraceRecord* b) { return a->time < b->time; });
    out << "# ttstn-trace v1, baud=" << timing_.baud << "\n";
    for (const auto* r : sorted)
        out << format_trace_line(*r) << "\n";
    out.flush();
    if (!out)
        throw Error(ErrorCode::Io, "failed to write trace");
}

std::string Simulator::trace_text() const
{
    std::ostringstream os;
    export_trace(os);
    return os.str();
}

}  // namespace ttstn
