#include "ttstn/wire.hpp"

#include "ttstn/error.hpp"

#include <algorithm>

namespace ttstn {

std::uint8_t fireworks_encode(int round_id)
{
    if (round_id < 0 || round_id >= kRoundIdCount)
        throw Error(ErrorCode::Range, "round id out of range: " + std::to_string(round_id));
    return kFireworksCodebook[static_cast<std::size_t>(round_id)];
}

std::optional<RoundId> fireworks_decode(std::uint8_t octet)
{
    auto it = std::find(kFireworksCodebook.begin(), kFireworksCodebook.end(), octet);
    if (it == kFireworksCodebook.end())
        return std::nullopt;
    return static_cast<RoundId>(it - kFireworksCodebook.begin());
}

std::uint8_t checksum(std::span<const std::uint8_t> bytes)
{
    if (bytes.empty())
        throw Error(ErrorCode::Size, "checksum over empty byte sequence");
    std::uint8_t acc = 0xA5;
    for (auto b : bytes)
        acc ^= b;
    return acc;
}

std::string_view to_string(MsAction action)
{
    switch (action) {
    case MsAction::Read: return "read";
    case MsAction::Write: return "write";
    case MsAction::Execute: return "execute";
    case MsAction::Probe: return "probe";
    }
    return "?";
}

void validate_ms_request(const MsRequest& r)
{
    if (r.file >= kMaxFiles)
        throw Error(ErrorCode::Validation, "MS request file out of range");
    if (r.alias == kMasterAlias)
        throw Error(ErrorCode::Validation, "MS request addressed to the master alias");
    if (r.alias == kBroadcastAlias && r.action == MsAction::Read)
        throw Error(ErrorCode::Validation, "MS read to the broadcast alias");
    if (r.action == MsAction::Probe && r.alias != kBroadcastAlias)
        throw Error(ErrorCode::Validation, "baptize probe must be broadcast");
    if (r.action == MsAction::Probe && r.record > 64)
        throw Error(ErrorCode::Validation, "probe prefix longer than 64 bits");
}

MsFrame ms_encode_address_phase(const MsRequest& r)
{
    MsFrame f{};
    f[0] = r.alias;
    f[1] = static_cast<std::uint8_t>((static_cast<unsigned>(r.action) << 6) | (r.file & 0x3F));
    f[2] = r.record;
    f[3] = 0x00;
    f[4] = checksum(std::span<const std::uint8_t>(f.data(), 4));
    return f;
}

std::optional<MsRequest> ms_decode_address_phase(const MsFrame& f)
{
    if (checksum(std::span<const std::uint8_t>(f.data(), 4)) != f[4] || f[3] != 0x00)
        return std::nullopt;
    MsRequest r;
    r.alias = f[0];
    r.action = static_cast<MsAction>(f[1] >> 6);
    r.file = f[1] & 0x3F;
    r.record = f[2];
    return r;
}

MsFrame ms_encode_data_phase(const Record& d)
{
    MsFrame f{d[0], d[1], d[2], d[3], 0};
    f[4] = checksum(d);
    return f;
}

std::optional<Record> ms_decode_data_phase(const MsFrame& f)
{
    Record d{f[0], f[1], f[2], f[3]};
    if (checksum(d) != f[4])
        return std::nullopt;
    return d;
}

}  // namespace ttstn
