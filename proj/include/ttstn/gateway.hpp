#pragma once

#include "ttstn/master.hpp"
#include "ttstn/pnp.hpp"
#include "ttstn/simulator.hpp"

#include <map>
#include <optional>
#include <span>

namespace ttstn {

enum class View { RS, DM, CP };
enum class ViewOp { Read, Write, Execute, DownloadRodl };

struct ViewRequest {
    View view = View::DM;
    ViewOp op = ViewOp::Read;
    IfsAddress address;
    std::optional<Record> payload;
    std::optional<SimTime> deadline;  // absolute simulated time
};

struct DmResult {
    IfsAddress address;
    MsStatus status = MsStatus::Ok;
    Record value{};
    int position = 0;
    int latency_cycles = 0;
    int bound_cycles = 0;  // ceil(position / MS rounds per cycle)
    SimTime completed_at = 0;
};

// ceil(position / ms_per_cycle)
int latency_bound(int position, int ms_per_cycle);

// The three interface views of one cluster. RS reads are local to the master;
// DM and CP requests become MS transactions.
class Gateway {
public:
    explicit Gateway(Simulator& sim);

    // Producer addresses are mapped to the master record mirroring them; alias 255
    // names a master record directly. Throws NotSubscribed for anything else.
    std::map<IfsAddress, RsValue> rs_snapshot(std::span<const IfsAddress> addresses) const;

    // Queues without running the simulation.
    std::uint64_t submit(const ViewRequest& request);
    // Runs the simulation until the ticket completes.
    DmResult wait(std::uint64_t ticket, int max_cycles = 10000);
    // submit + wait; throws Timeout, DataPhase or DeadlineMissed when not Ok.
    DmResult dm_request(const ViewRequest& request);

    void cp_download_rodl(Alias alias, const Rodl& rodl);

    PlugAndPlay& pnp() { return pnp_; }
    Simulator& simulator() { return sim_; }

private:
    std::optional<std::pair<std::uint8_t, std::uint8_t>> mirror_of(const IfsAddress& address) const;

    Simulator& sim_;
    PlugAndPlay pnp_;
};

std::string format_dm_result(const DmResult& result);

}  // namespace ttstn
