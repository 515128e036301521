#pragma once

#include "ttstn/node.hpp"
#include "ttstn/wire.hpp"

#include <array>
#include <deque>
#include <map>
#include <mutex>
#include <optional>

namespace ttstn {

enum class MsStatus { Ok, Timeout, DataPhase, DeadlineMissed };

std::string_view to_string(MsStatus status);

struct MsCompletion {
    std::uint64_t ticket = 0;
    MsRequest request;
    MsStatus status = MsStatus::Ok;
    Record data{};
    bool response = false;  // probe: at least one node answered
    int position = 0;       // 1-based queue position at enqueue
    int eligible_cycle = 0;
    int completion_cycle = 0;
    int latency_cycles = 0;  // completion_cycle - eligible_cycle + 1
    SimTime completed_at = 0;
};

struct RsValue {
    Record value{};
    std::optional<int> cycle;  // nullopt: never received
};

class MasterMachine : public Node {
public:
    MasterMachine(std::string name, const PhysicalName& physical, const BusTiming& timing, ClusterSchedule schedule,
                  std::map<RoundId, Rodl> rodls);

    Alias alias() const override { return kMasterAlias; }

    const ClusterSchedule& schedule() const { return schedule_; }
    const std::vector<PlannedRound>& plan() const { return plan_; }
    const std::map<RoundId, Rodl>& rodls() const { return rodls_; }
    std::vector<RodlEntry> own_entries(RoundId round) const;

    // Merges entries of a newly configured node, including master-side mirroring; entries
    // already present are skipped. Throws
    // SlotConflict / Overflow like build_rodl; takes effect from the next round.
    void add_entries(RoundId round, const std::vector<RodlEntry>& entries);

    int ms_rounds_per_cycle() const;
    SimTime cycle_start(int cycle) const { return static_cast<SimTime>(cycle - 1) * schedule_.cycle_duration; }
    int cycle_at(SimTime t) const { return static_cast<int>(t / schedule_.cycle_duration) + 1; }
    // Cycle holding the first master/slave round starting at or after t.
    int eligible_cycle(SimTime t) const;

    // Linearizable: may be called from any thread. Service is FIFO by enqueue order;
    // a request is not served before `release`.
    std::uint64_t enqueue(const MsRequest& request, std::optional<SimTime> deadline, SimTime release);
    std::size_t queue_length() const;
    bool idle() const;
    std::optional<MsCompletion> completion(std::uint64_t ticket) const;
    std::vector<MsCompletion> completions() const;

    bool mirrors(std::uint8_t file, std::uint8_t record) const;
    RsValue rs_value(std::uint8_t file, std::uint8_t record) const;

    NodeOutput start(SimTime now) override;
    NodeOutput on_delivery(const Delivery& delivery) override;
    NodeOutput on_wakeup(const Wakeup& wakeup) override;

private:
    struct Queued {
        std::uint64_t ticket = 0;
        MsRequest request;
        std::optional<SimTime> deadline;
        SimTime release = 0;
        int position = 0;
        int eligible_cycle = 0;
    };

    enum class Op : std::uint64_t { RoundStart = 1, RoundEnd, Send, Execute, SlotTask, MsSend };

    static std::uint64_t token(Op op, int a, int b);
    SlotTag tag(int slot) const;
    NodeOutput round_start(int cycle, int index, SimTime now);
    void round_end();
    void complete(Queued q, MsStatus status, const Record& data, bool response, SimTime now, int cycle);

    ClusterSchedule schedule_;
    std::map<RoundId, Rodl> rodls_;
    std::vector<PlannedRound> plan_;

    mutable std::mutex mutex_;
    std::deque<Queued> queue_;
    std::map<std::uint64_t, MsCompletion> completions_;
    std::uint64_t next_ticket_ = 1;

    // Current round.
    int cycle_ = 0;
    RoundId round_id_ = 0;
    SimTime round_begin_ = 0;
    int round_slots_ = 0;
    std::vector<RodlEntry> active_entries_;
    std::map<std::size_t, Record> snapshots_;
    std::map<std::size_t, unsigned> received_mask_;

    std::optional<Queued> active_;
    MsFrame ms_tx_{};
    std::array<std::optional<std::uint8_t>, kMsPhaseBytes> ms_rx_{};
    bool ms_ambiguous_ = false;

    std::map<std::pair<std::uint8_t, std::uint8_t>, int> rs_cycle_;
};

}  // namespace ttstn
