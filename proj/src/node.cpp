#include "ttstn/node.hpp"

#include "ttstn/error.hpp"

namespace ttstn {

std::string_view to_string(TriggerKind kind)
{
    switch (kind) {
    case TriggerKind::Slot: return "slot";
    case TriggerKind::Period: return "period";
    case TriggerKind::SlotExecute: return "slot-execute";
    case TriggerKind::MsExecute: return "ms-execute";
    }
    return "?";
}

void NodeOutput::append(NodeOutput&& o)
{
    tx.insert(tx.end(), o.tx.begin(), o.tx.end());
    wakeups.insert(wakeups.end(), o.wakeups.begin(), o.wakeups.end());
    for (auto& r : o.invocations)
        invocations.push_back(std::move(r));
}

Node::Node(std::string name, const PhysicalName& physical, const BusTiming& timing)
    : name_(std::move(name)), physical_(physical), timing_(timing), ifs_(physical)
{
}

void Node::bind_execute(std::uint8_t file, int record, std::string action_name, ExecuteAction action)
{
    ifs_.bind_execute(file, record, std::move(action));
    execute_names_[{file, record}] = std::move(action_name);
}

const std::string& Node::execute_name(std::uint8_t file, int record) const
{
    static const std::string unnamed = "execute";
    auto it = execute_names_.find({file, record});
    return it == execute_names_.end() ? unnamed : it->second;
}

void Node::bind_task(BoundTask task)
{
    if (running_)
        throw Error(ErrorCode::Configuration, "task '" + task.name + "' bound while node " + name_ + " is running");
    if (const auto* p = std::get_if<PeriodTrigger>(&task.trigger); p && p->period <= 0)
        throw Error(ErrorCode::Configuration, "task '" + task.name + "' has a non-positive period");
    tasks_.push_back(std::move(task));
}

NodeOutput Node::schedule_periodic(std::size_t index, SimTime now)
{
    NodeOutput out;
    const auto& p = std::get<PeriodTrigger>(tasks_[index].trigger);
    const SimTime local_now = clock_.local_at(now);
    SimTime next = p.phase;
    if (next < local_now)
        next += ((local_now - next + p.period - 1) / p.period) * p.period;
    SimTime real = clock_.real_at(next);
    if (real < now)
        real = now;
    out.wakeups.push_back({real, WakeKind::Task, kPeriodicTag | index});
    return out;
}

NodeOutput Node::run_periodic(std::size_t index, SimTime now, const SlotTag& tag)
{
    NodeOutput out;
    out.invocations.push_back(run_task(index, now, TriggerKind::Period, tag));
    const auto& p = std::get<PeriodTrigger>(tasks_[index].trigger);
    const SimTime next_local = clock_.local_at(now) + p.period;
    SimTime real = clock_.real_at(next_local);
    if (real <= now)
        real = now + 1;
    out.wakeups.push_back({real, WakeKind::Task, kPeriodicTag | index});
    return out;
}

InvocationRecord Node::run_task(std::size_t index, SimTime now, TriggerKind trigger, const SlotTag& tag)
{
    TaskContext ctx(ifs_, clock_.local_at(now));
    tasks_[index].action(ctx);
    return {now, name_, tasks_[index].name, trigger, tag, 0};
}

InvocationRecord Node::run_execute(std::uint8_t file, int record, SimTime now, TriggerKind trigger, const SlotTag& tag)
{
    const std::uint32_t value = ifs_.execute(file, record);
    return {now, name_, execute_name(file, record), trigger, tag, value};
}

}  // namespace ttstn
