#pragma once

#include "ttstn/node.hpp"
#include "ttstn/node_config.hpp"
#include "ttstn/wire.hpp"

#include <array>
#include <optional>

namespace ttstn {

enum class SlaveState { Listening, InRound, Skipping };

struct SlaveCounters {
    int rounds = 0;
    int decode_errors = 0;
    int framing_errors = 0;
    int ms_errors = 0;
    int skipped_rounds = 0;
};

class SlaveMachine : public Node {
public:
    // No alias: the node is unbaptized and stays out of multipartner rounds.
    SlaveMachine(std::string name, const PhysicalName& physical, const BusTiming& timing,
                 std::optional<Alias> alias = std::nullopt);

    Alias alias() const override;
    bool baptized() const { return alias() != kBroadcastAlias; }
    bool configured() const { return config_.has_value(); }
    const std::optional<NodeConfiguration>& configuration() const { return config_; }

    // Writes the configuration file and commit locally, as a factory-provisioned node.
    void install_configuration(const NodeConfiguration& config);

    // Test hook: a muted node keeps listening but never transmits.
    void set_muted(bool muted) { muted_ = muted; }
    bool muted() const { return muted_; }

    SlaveState state() const { return state_; }
    const SlaveCounters& counters() const { return counters_; }

    NodeOutput start(SimTime now) override;
    NodeOutput on_delivery(const Delivery& delivery) override;
    NodeOutput on_wakeup(const Wakeup& wakeup) override;

private:
    struct ActiveRound {
        RoundId id = 0;
        int length = 0;
        SimTime anchor_local = 0;  // local time of the round's fireworks start
        SlotTag tag;
    };

    enum class Op : std::uint64_t { MpSend = 1, MpExecute, SlotTask, RoundEnd, MsSend, MsExecute, ProbeReply };

    std::uint64_t token(Op op, int index, int slot) const;
    SimTime slot_start(int slot) const;
    SlotTag slot_tag(int slot) const;

    NodeOutput begin_round(RoundId id, const Delivery& fireworks);
    NodeOutput bad_fireworks(const Delivery& delivery);
    NodeOutput finish_round();
    void abandon_round();
    void store_byte(int slot, const Delivery& delivery);
    void plan_data_phase(NodeOutput& out);
    void apply_write(const MsRequest& request, const Record& data);
    void reload_configuration();
    void refresh_status();
    int round_length(RoundId id) const;
    void note_round(RoundId id);

    std::optional<NodeConfiguration> config_;
    SlaveState state_ = SlaveState::Listening;
    ActiveRound round_;
    std::uint64_t epoch_ = 0;
    std::optional<SimTime> last_arrival_local_;
    std::optional<std::size_t> sequence_pos_;
    bool muted_ = false;
    SlaveCounters counters_;

    std::map<int, Record> send_snapshots_;  // by entry index, taken at the entry's first slot
    std::array<std::optional<std::uint8_t>, kMsPhaseBytes> ms_rx_{};
    std::optional<MsRequest> pending_;
    MsFrame ms_tx_{};
};

}  // namespace ttstn
