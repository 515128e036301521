#pragma once

#include "ttstn/clock.hpp"
#include "ttstn/ifs.hpp"
#include "ttstn/schedule.hpp"
#include "ttstn/time.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ttstn {

// Attribution of a bus byte: 1-based cluster cycle, round id and slot index.
// round_start is the master's fireworks instant of that round.
struct SlotTag {
    int cycle = 0;
    int round = -1;
    int slot = -1;
    SimTime round_start = -1;

    friend bool operator==(const SlotTag&, const SlotTag&) = default;
};

enum class TxMode { Normal, WiredAnd };

struct Transmission {
    SimTime start = 0;
    std::uint8_t byte = 0;
    TxMode mode = TxMode::Normal;
    bool fireworks = false;
    SlotTag tag;
};

enum class RxStatus { Clean, Collision, Ambiguous };

// A byte as seen by a receiver, at the end of its frame.
struct Delivery {
    SimTime time = 0;
    std::uint8_t byte = 0;
    RxStatus status = RxStatus::Clean;
    SlotTag tag;
};

// Same-instant ordering rank inside the event loop; deliveries come first.
enum class WakeKind { RoundEnd = 1, RoundStart = 2, Task = 3, Execute = 4, Send = 5 };

struct Wakeup {
    SimTime time = 0;
    WakeKind kind = WakeKind::Task;
    std::uint64_t token = 0;
};

enum class TriggerKind { Slot, Period, SlotExecute, MsExecute };

std::string_view to_string(TriggerKind kind);

struct InvocationRecord {
    SimTime time = 0;
    std::string node;
    std::string action;
    TriggerKind trigger = TriggerKind::Slot;
    SlotTag tag;
    std::uint32_t value = 0;
};

struct NodeOutput {
    std::vector<Transmission> tx;
    std::vector<Wakeup> wakeups;
    std::vector<InvocationRecord> invocations;

    void append(NodeOutput&& other);
};

struct SlotTrigger {
    RoundId round = 0;
    int slot = 1;
};

// Local-clock period; first firing at `phase`.
struct PeriodTrigger {
    SimTime period = 0;
    SimTime phase = 0;
};

using TaskTrigger = std::variant<SlotTrigger, PeriodTrigger>;

// The only thing a task can touch: its node's IFS and local time.
class TaskContext {
public:
    TaskContext(InterfaceFileSystem& ifs, SimTime local_time) : ifs_(ifs), local_(local_time) {}

    Record pull(std::uint8_t file, int record) const { return ifs_.pull(file, record); }
    void push(std::uint8_t file, int record, const Record& bytes) { ifs_.push(file, record, bytes); }
    std::uint32_t execute(std::uint8_t file, int record) { return ifs_.execute(file, record); }
    SimTime local_time() const { return local_; }

private:
    InterfaceFileSystem& ifs_;
    SimTime local_;
};

using TaskAction = std::function<void(TaskContext&)>;

struct BoundTask {
    std::string name;
    TaskTrigger trigger;
    TaskAction action;
};

// State shared by master and slave machines: identity, IFS, clock and tasks.
class Node {
public:
    Node(std::string name, const PhysicalName& physical, const BusTiming& timing);
    virtual ~Node() = default;

    const std::string& name() const { return name_; }
    const PhysicalName& physical_name() const { return physical_; }
    virtual Alias alias() const = 0;

    InterfaceFileSystem& ifs() { return ifs_; }
    const InterfaceFileSystem& ifs() const { return ifs_; }
    LocalClock& clock() { return clock_; }
    const LocalClock& clock() const { return clock_; }
    const BusTiming& timing() const { return timing_; }

    void bind_execute(std::uint8_t file, int record, std::string action_name, ExecuteAction action);
    const std::string& execute_name(std::uint8_t file, int record) const;

    // Fails with Configuration once the node is running.
    void bind_task(BoundTask task);
    const std::vector<BoundTask>& tasks() const { return tasks_; }

    virtual NodeOutput start(SimTime now) = 0;
    virtual NodeOutput on_delivery(const Delivery& delivery) = 0;
    virtual NodeOutput on_wakeup(const Wakeup& wakeup) = 0;

protected:
    NodeOutput schedule_periodic(std::size_t task_index, SimTime now);
    NodeOutput run_periodic(std::size_t task_index, SimTime now, const SlotTag& tag);
    InvocationRecord run_task(std::size_t task_index, SimTime now, TriggerKind trigger, const SlotTag& tag);
    InvocationRecord run_execute(std::uint8_t file, int record, SimTime now, TriggerKind trigger, const SlotTag& tag);

    // Wakeup tokens carry the owner's bookkeeping in their low bits and a tag here.
    static constexpr std::uint64_t kPeriodicTag = 1ull << 63;

    std::string name_;
    PhysicalName physical_;
    BusTiming timing_;
    InterfaceFileSystem ifs_;
    LocalClock clock_;
    std::vector<BoundTask> tasks_;
    std::map<std::pair<std::uint8_t, int>, std::string> execute_names_;
    bool running_ = false;
};

}  // namespace ttstn
