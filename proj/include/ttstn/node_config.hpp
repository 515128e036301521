#pragma once

#include "ttstn/ifs.hpp"
#include "ttstn/schedule.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace ttstn {

// Layout of the configuration file (file 0):
//   record 0       [alias, 0, 0, 0]
//   records 1-2    round length in slots for round ids 0..7 (0 = undefined)
//   records 3-4    cycle sequence of round ids, 0xFF terminated
//   records 5-62   one RODL entry per record, terminated by a zero first byte
//   record 63      commit record; RODLs are inert until it validates
namespace cfgfile {
inline constexpr std::uint8_t kAliasRecord = 0;
inline constexpr std::uint8_t kRoundLengthRecord = 1;
inline constexpr std::uint8_t kSequenceRecord = 3;
inline constexpr std::uint8_t kFirstEntryRecord = 5;
inline constexpr std::uint8_t kCommitRecord = 63;
inline constexpr int kMaxEntries = kCommitRecord - kFirstEntryRecord;
inline constexpr int kMaxSequence = 8;
inline constexpr std::uint8_t kCommitTag = 0xC3;
inline constexpr std::uint8_t kCommitTrailer = 0x3C;
}  // namespace cfgfile

struct ConfiguredSlot {
    RoundId round = 0;
    int slot = 1;
    SlotAction action;

    friend bool operator==(const ConfiguredSlot&, const ConfiguredSlot&) = default;
};

// What a node needs to take part in multipartner rounds: its own RODL entries
// plus enough of the cluster schedule to skip a round whose fireworks was lost.
struct NodeConfiguration {
    std::array<std::uint8_t, 8> round_lengths{};
    std::vector<RoundId> sequence;
    std::vector<ConfiguredSlot> entries;

    friend bool operator==(const NodeConfiguration&, const NodeConfiguration&) = default;
};

// Extracts the entries of `alias` from the cluster RODLs.
NodeConfiguration configuration_for(Alias alias, std::span<const Rodl> rodls, const ClusterSchedule& schedule);

std::uint32_t encode_slot(const ConfiguredSlot& slot);
std::optional<ConfiguredSlot> decode_slot(const Record& record);

// Records 1..62 in write order followed by the commit record. Throws Validation
// if the configuration does not fit the file.
std::vector<std::pair<std::uint8_t, Record>> serialize_configuration(const NodeConfiguration& config);

// Checksum stored in the commit record, over records 1 .. last entry + terminator.
Record commit_record(const NodeConfiguration& config);

// Parses records 1..62 and checks them against the commit record.
std::optional<NodeConfiguration> parse_configuration(const IfsFile& file);

}  // namespace ttstn
