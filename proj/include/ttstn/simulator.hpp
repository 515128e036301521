#pragma once

#include "ttstn/bus.hpp"
#include "ttstn/master.hpp"
#include "ttstn/slave.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace ttstn {

struct SlotRef {
    int cycle = 1;
    int round = 0;
    int slot = 0;
};

struct FaultSpec {
    enum class Effect { BitFlip, Drop, Spurious };

    Effect effect = Effect::Drop;
    int bit = 0;              // BitFlip
    std::uint8_t octet = 0;   // Spurious
    std::optional<SimTime> at;
    std::optional<SlotRef> slot;
};

std::string_view to_string(FaultSpec::Effect effect);

enum class TraceKind { Fireworks, Send, Execute, Collision, Fault, Ambiguous, Spurious };

std::string_view to_string(TraceKind kind);

struct TraceRecord {
    SimTime time = 0;
    SlotTag tag;
    int actor = -1;  // alias, kMasterAlias, or -1
    std::optional<std::uint8_t> byte;
    TraceKind kind = TraceKind::Send;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

std::string format_trace_line(const TraceRecord& record);

struct SimStats {
    std::int64_t transmissions = 0;
    std::int64_t deliveries = 0;
    std::int64_t collisions = 0;  // overlap groups, not bytes
    std::int64_t ambiguous = 0;
    std::int64_t faults_applied = 0;
    std::int64_t slot_boundary_violations = 0;
    std::int64_t fireworks = 0;
};

struct SimOptions {
    double rho_max = 1e-3;
    PhysicalName master_name{0x4D415354u, 1};
};

class Simulator {
public:
    Simulator(const BusTiming& timing, ClusterSchedule schedule, std::map<RoundId, Rodl> rodls, SimOptions options = {});
    ~Simulator();

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    const BusTiming& timing() const { return timing_; }
    double rho_max() const { return options_.rho_max; }
    MasterMachine& master() { return *master_; }
    const MasterMachine& master() const { return *master_; }

    SlaveMachine& add_slave(std::string name, const PhysicalName& physical, std::optional<Alias> alias = std::nullopt);
    SlaveMachine* find_slave(const std::string& name);
    SlaveMachine* slave_by_alias(Alias alias);
    std::vector<SlaveMachine*> slaves();
    Node& node(const std::string& name);

    // Slot triggers must name a scheduled round and a slot inside it.
    void bind_task(const std::string& node_name, BoundTask task);
    void set_drift(const std::string& node_name, double rho);
    // Throws StaleFault if the fault's instant is already in the past.
    void inject_fault(const FaultSpec& fault);

    // Processes every event strictly before `until`; events at `until` stay queued.
    std::vector<TraceRecord> advance(SimTime until);
    // Advances to the end of the next `count` whole cycles.
    void run_cycles(int count);
    SimTime now() const { return now_; }
    int completed_cycles() const { return static_cast<int>(now_ / master_->schedule().cycle_duration); }

    // Advances cycle by cycle until the ticket completes. Throws Timeout after max_cycles.
    MsCompletion await(std::uint64_t ticket, int max_cycles = 10000);
    // Enqueues at the current simulated time.
    std::uint64_t enqueue(const MsRequest& request, std::optional<SimTime> deadline = std::nullopt);

    const std::vector<TraceRecord>& trace() const { return trace_; }
    const std::vector<InvocationRecord>& invocations() const { return invocations_; }
    const SimStats& stats() const { return stats_; }

    // Trace sorted by time (stable), header first. Throws Io on a failed stream.
    void export_trace(std::ostream& out) const;
    std::string trace_text() const;

    // Nominal start of a slot in the schedule (first occurrence of the round in the cycle).
    SimTime nominal_time(const SlotRef& ref) const;

private:
    struct Event {
        SimTime time = 0;
        int actor_key = 0;
        int rank = 0;
        std::uint64_t seq = 0;
        int node = -1;          // wakeup target; -1 for a delivery
        Wakeup wakeup;
        std::uint64_t tx_id = 0;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const;
    };

    void start_nodes();
    void push_wakeup(int node, const Wakeup& w);
    void apply(int node, NodeOutput&& out);
    void register_tx(int sender, const Transmission& tx);
    void deliver(std::uint64_t tx_id, SimTime now);
    int actor_of(int node) const;

    BusTiming timing_;
    SimOptions options_;
    SimBus bus_;
    std::vector<std::unique_ptr<Node>> nodes_;  // index 0 is the master
    std::vector<int> actor_keys_;
    MasterMachine* master_ = nullptr;

    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::uint64_t seq_ = 0;
    SimTime now_ = 0;
    bool started_ = false;

    struct PendingFault {
        FaultSpec spec;
        bool consumed = false;
    };
    std::vector<PendingFault> faults_;

    std::vector<TraceRecord> trace_;
    std::vector<InvocationRecord> invocations_;
    SimStats stats_;
};

// Trace records of multipartner rounds only (rounds 0..5).
std::vector<TraceRecord> mp_projection(const std::vector<TraceRecord>& trace);

}  // namespace ttstn
