#include "ttstn/node_config.hpp"

#include "ttstn/error.hpp"
#include "ttstn/wire.hpp"

#include <algorithm>

namespace ttstn {

NodeConfiguration configuration_for(Alias alias, std::span<const Rodl> rodls, const ClusterSchedule& schedule)
{
    NodeConfiguration c;
    c.round_lengths[kMsAddressRound] = kMsRoundSlots;
    c.round_lengths[kMsDataRound] = kMsRoundSlots;
    for (const auto& r : rodls) {
        c.round_lengths[r.round_id] = static_cast<std::uint8_t>(r.round_length_slots);
        for (const auto& e : r.entries)
            if (e.actor == alias && e.action.kind != SlotKind::Idle)
                c.entries.push_back({r.round_id, e.slot_index, e.action});
    }
    c.sequence = schedule.sequence;
    return c;
}

std::uint32_t encode_slot(const ConfiguredSlot& s)
{
    const unsigned kind = static_cast<unsigned>(s.action.kind) & 0x3u;
    const unsigned len = static_cast<unsigned>(s.action.length_slots - 1) & 0x3u;
    const std::uint8_t head = static_cast<std::uint8_t>(0x80u | (unsigned{s.round} << 4) | (kind << 2) | len);
    return (std::uint32_t{head} << 24) | (std::uint32_t(s.slot & 0xFF) << 16) | (std::uint32_t{s.action.file} << 8) |
           s.action.record;
}

std::optional<ConfiguredSlot> decode_slot(const Record& r)
{
    if (!(r[0] & 0x80) || r[2] >= kMaxFiles || r[1] == 0)
        return std::nullopt;
    ConfiguredSlot s;
    s.round = static_cast<RoundId>((r[0] >> 4) & 0x7);
    s.action.kind = static_cast<SlotKind>((r[0] >> 2) & 0x3);
    s.action.length_slots = (r[0] & 0x3) + 1;
    s.slot = r[1];
    s.action.file = r[2];
    s.action.record = r[3];
    return s;
}

namespace {

std::vector<std::pair<std::uint8_t, Record>> body_records(const NodeConfiguration& c)
{
    if (c.entries.size() > static_cast<std::size_t>(cfgfile::kMaxEntries))
        throw Error(ErrorCode::Validation, "configuration has " + std::to_string(c.entries.size()) +
                                               " entries; the configuration file holds " +
                                               std::to_string(cfgfile::kMaxEntries));
    if (c.sequence.size() > static_cast<std::size_t>(cfgfile::kMaxSequence))
        throw Error(ErrorCode::Validation, "cycle sequence longer than 8 rounds");
    for (const auto& e : c.entries) {
        if (e.slot < 1 || e.slot > kMaxRoundSlots || e.action.length_slots < 1 || e.action.length_slots > 4 ||
            e.round >= kRoundIdCount || e.action.file >= kMaxFiles)
            throw Error(ErrorCode::Validation, "entry cannot be encoded in the configuration file");
    }

    std::vector<std::pair<std::uint8_t, Record>> out;
    out.push_back({cfgfile::kRoundLengthRecord, {c.round_lengths[0], c.round_lengths[1], c.round_lengths[2], c.round_lengths[3]}});
    out.push_back({static_cast<std::uint8_t>(cfgfile::kRoundLengthRecord + 1),
                   {c.round_lengths[4], c.round_lengths[5], c.round_lengths[6], c.round_lengths[7]}});
    std::array<std::uint8_t, 8> seq;
    seq.fill(0xFF);
    for (std::size_t i = 0; i < std::min(c.sequence.size(), seq.size()); ++i)
        seq[i] = c.sequence[i];
    out.push_back({cfgfile::kSequenceRecord, {seq[0], seq[1], seq[2], seq[3]}});
    out.push_back({static_cast<std::uint8_t>(cfgfile::kSequenceRecord + 1), {seq[4], seq[5], seq[6], seq[7]}});

    std::uint8_t rec = cfgfile::kFirstEntryRecord;
    for (const auto& e : c.entries)
        out.push_back({rec++, u32_to_record(encode_slot(e))});
    if (rec < cfgfile::kCommitRecord)
        out.push_back({rec, Record{}});
    return out;
}

std::uint8_t body_checksum(const std::vector<std::pair<std::uint8_t, Record>>& body)
{
    std::vector<std::uint8_t> bytes;
    for (const auto& [_, r] : body)
        bytes.insert(bytes.end(), r.begin(), r.end());
    return checksum(bytes);
}

}  // namespace

Record commit_record(const NodeConfiguration& c)
{
    const auto body = body_records(c);
    return {cfgfile::kCommitTag, static_cast<std::uint8_t>(c.entries.size()), body_checksum(body), cfgfile::kCommitTrailer};
}

std::vector<std::pair<std::uint8_t, Record>> serialize_configuration(const NodeConfiguration& c)
{
    auto out = body_records(c);
    out.push_back({cfgfile::kCommitRecord, commit_record(c)});
    return out;
}

std::optional<NodeConfiguration> parse_configuration(const IfsFile& file)
{
    if (file.size() <= cfgfile::kCommitRecord)
        return std::nullopt;
    const Record& commit = file.at(cfgfile::kCommitRecord);
    if (commit[0] != cfgfile::kCommitTag || commit[3] != cfgfile::kCommitTrailer)
        return std::nullopt;
    const int count = commit[1];
    if (count > cfgfile::kMaxEntries)
        return std::nullopt;

    NodeConfiguration c;
    const Record& l0 = file.at(cfgfile::kRoundLengthRecord);
    const Record& l1 = file.at(cfgfile::kRoundLengthRecord + 1);
    for (int i = 0; i < 4; ++i) {
        c.round_lengths[i] = l0[i];
        c.round_lengths[4 + i] = l1[i];
    }
    const Record& s0 = file.at(cfgfile::kSequenceRecord);
    const Record& s1 = file.at(cfgfile::kSequenceRecord + 1);
    for (auto b : {s0[0], s0[1], s0[2], s0[3], s1[0], s1[1], s1[2], s1[3]}) {
        if (b == 0xFF)
            break;
        if (b >= kRoundIdCount)
            return std::nullopt;
        c.sequence.push_back(b);
    }
    for (int i = 0; i < count; ++i) {
        auto slot = decode_slot(file.at(static_cast<std::size_t>(cfgfile::kFirstEntryRecord + i)));
        if (!slot)
            return std::nullopt;
        c.entries.push_back(*slot);
    }
    // The checksum covers the stored records, not a re-encoding of what was parsed,
    // so bytes the parser ignores are protected too.
    const std::size_t term = static_cast<std::size_t>(cfgfile::kFirstEntryRecord + count);
    std::vector<std::pair<std::uint8_t, Record>> stored;
    for (std::size_t r = cfgfile::kRoundLengthRecord; r <= std::min<std::size_t>(term, cfgfile::kCommitRecord - 1); ++r)
        stored.push_back({static_cast<std::uint8_t>(r), file.at(r)});
    if (body_checksum(stored) != commit[2])
        return std::nullopt;
    if (term < cfgfile::kCommitRecord && file.at(term) != Record{})
        return std::nullopt;
    try {
        if (commit_record(c) != commit)
            return std::nullopt;
    } catch (const Error&) {
        return std::nullopt;
    }
    return c;
}

}  // namespace ttstn
