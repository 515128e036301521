#include "ttstn/gateway.hpp"

#include "ttstn/error.hpp"

#include <cstdio>

namespace ttstn {

int latency_bound(int position, int ms_per_cycle)
{
    if (ms_per_cycle <= 0)
        throw Error(ErrorCode::Validation, "schedule has no master/slave round");
    return (position + ms_per_cycle - 1) / ms_per_cycle;
}

Gateway::Gateway(Simulator& sim) : sim_(sim), pnp_(sim) {}

std::optional<std::pair<std::uint8_t, std::uint8_t>> Gateway::mirror_of(const IfsAddress& a) const
{
    const MasterMachine& m = sim_.master();
    if (a.alias == kMasterAlias)
        return m.mirrors(a.file, a.record) ? std::optional(std::pair{a.file, a.record}) : std::nullopt;
    for (const auto& [_, rodl] : m.rodls()) {
        for (const auto& send : rodl.entries) {
            if (send.actor != a.alias || send.action.kind != SlotKind::Send || send.action.file != a.file ||
                send.action.record != a.record)
                continue;
            for (const auto& rx : rodl.entries)
                if (rx.actor == kMasterAlias && rx.action.kind == SlotKind::Receive && rx.slot_index == send.slot_index)
                    return std::pair{rx.action.file, rx.action.record};
        }
    }
    return std::nullopt;
}

std::map<IfsAddress, RsValue> Gateway::rs_snapshot(std::span<const IfsAddress> addresses) const
{
    std::map<IfsAddress, RsValue> out;
    const InterfaceFileSystem& ifs = sim_.master().ifs();
    for (const auto& a : addresses) {
        const auto mirror = mirror_of(a);
        if (!mirror || !ifs.has_file(mirror->first) || mirror->second >= ifs.file(mirror->first).size() ||
            ifs.file(mirror->first).section(mirror->second) != Section::RS)
            throw Error(ErrorCode::NotSubscribed, to_string(a) + " is not mirrored at the master");
        out[a] = sim_.master().rs_value(mirror->first, mirror->second);
    }
    return out;
}

std::uint64_t Gateway::submit(const ViewRequest& request)
{
    if (request.view == View::RS)
        throw Error(ErrorCode::Validation, "RS view is read through rs_snapshot");
    MsRequest ms;
    ms.alias = request.address.alias;
    ms.file = request.address.file;
    ms.record = request.address.record;
    switch (request.op) {
    case ViewOp::Read:
        ms.action = MsAction::Read;
        break;
    case ViewOp::Write:
        if (!request.payload)
            throw Error(ErrorCode::Validation, "write needs a payload");
        ms.action = MsAction::Write;
        ms.data = *request.payload;
        break;
    case ViewOp::Execute:
        ms.action = MsAction::Execute;
        break;
    case ViewOp::DownloadRodl:
        throw Error(ErrorCode::Validation, "RODL downloads go through cp_download_rodl");
    }
    return sim_.enqueue(ms, request.deadline);
}

DmResult Gateway::wait(std::uint64_t ticket, int max_cycles)
{
    const MsCompletion c = sim_.await(ticket, max_cycles);
    DmResult r;
    r.address = IfsAddress{0, c.request.alias, c.request.file, c.request.record};
    r.status = c.status;
    r.value = c.data;
    r.position = c.position;
    r.latency_cycles = c.latency_cycles;
    r.bound_cycles = latency_bound(c.position, sim_.master().ms_rounds_per_cycle());
    r.completed_at = c.completed_at;
    return r;
}

DmResult Gateway::dm_request(const ViewRequest& request)
{
    DmResult r = wait(submit(request));
    switch (r.status) {
    case MsStatus::Ok:
        return r;
    case MsStatus::Timeout:
        throw Error(ErrorCode::Timeout, to_string(r.address) + ": no answer from the slave");
    case MsStatus::DataPhase:
        throw Error(ErrorCode::DataPhase, to_string(r.address) + ": corrupt data phase");
    case MsStatus::DeadlineMissed:
        throw Error(ErrorCode::DeadlineMissed, to_string(r.address) + ": deadline passed before service");
    }
    return r;
}

void Gateway::cp_download_rodl(Alias alias, const Rodl& rodl)
{
    pnp_.download(alias, {{rodl.round_id, rodl.entries}});
}

std::string format_dm_result(const DmResult& r)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "address=0x%08X, value=0x%08X, latency_cycles=%d", encode_address(r.address),
                  record_to_u32(r.value), r.latency_cycles);
    return buf;
}

}  // namespace ttstn
