#pragma once

#include "ttstn/ifs.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace ttstn {

using RoundId = std::uint8_t;

inline constexpr int kRoundIdCount = 8;
inline constexpr RoundId kMaxMpRoundId = 5;
// A master/slave round is two fireworks-initiated sub-rounds.
inline constexpr RoundId kMsAddressRound = 6;
inline constexpr RoundId kMsDataRound = 7;
inline constexpr int kMsPhaseBytes = 5;
inline constexpr int kMsRoundSlots = 1 + kMsPhaseBytes;

inline constexpr bool is_mp_round(int id) { return id >= 0 && id <= kMaxMpRoundId; }
inline constexpr bool is_ms_round(int id) { return id == kMsAddressRound || id == kMsDataRound; }

constexpr int hamming_distance(std::uint8_t a, std::uint8_t b)
{
    return std::popcount(static_cast<unsigned>(a ^ b));
}

namespace detail {

// Systematic extended Hamming [8,4,4]: data nibble in the high half, then three
// Hamming parity bits and an overall even-parity bit.
constexpr std::uint8_t extended_hamming_codeword(unsigned nibble)
{
    const unsigned d0 = nibble & 1u, d1 = (nibble >> 1) & 1u, d2 = (nibble >> 2) & 1u, d3 = (nibble >> 3) & 1u;
    const unsigned p0 = d0 ^ d1 ^ d3;
    const unsigned p1 = d0 ^ d2 ^ d3;
    const unsigned p2 = d1 ^ d2 ^ d3;
    const unsigned body = (nibble << 4) | (p0 << 3) | (p1 << 2) | (p2 << 1);
    const unsigned pe = static_cast<unsigned>(std::popcount(body)) & 1u;
    return static_cast<std::uint8_t>(body | pe);
}

// Drop 0x00 and 0xFF, then keep the 8 smallest of the remaining 14 codewords.
constexpr std::array<std::uint8_t, kRoundIdCount> make_fireworks_codebook()
{
    std::array<std::uint8_t, 16> all{};
    for (unsigned n = 0; n < 16; ++n)
        all[n] = extended_hamming_codeword(n);
    // insertion sort; constexpr-friendly
    for (std::size_t i = 1; i < all.size(); ++i)
        for (std::size_t j = i; j > 0 && all[j - 1] > all[j]; --j) {
            auto t = all[j];
            all[j] = all[j - 1];
            all[j - 1] = t;
        }
    std::array<std::uint8_t, kRoundIdCount> book{};
    std::size_t out = 0;
    for (auto cw : all) {
        if (cw == 0x00 || cw == 0xFF)
            continue;
        if (out < book.size())
            book[out++] = cw;
    }
    return book;
}

constexpr int min_pairwise_distance(const std::array<std::uint8_t, kRoundIdCount>& book)
{
    int best = 8;
    for (std::size_t i = 0; i < book.size(); ++i)
        for (std::size_t j = i + 1; j < book.size(); ++j)
            best = hamming_distance(book[i], book[j]) < best ? hamming_distance(book[i], book[j]) : best;
    return best;
}

}  // namespace detail

// Fireworks codeword per round id.
inline constexpr std::array<std::uint8_t, kRoundIdCount> kFireworksCodebook = detail::make_fireworks_codebook();

static_assert(detail::min_pairwise_distance(kFireworksCodebook) >= 4, "fireworks codebook must have distance 4");

std::uint8_t fireworks_encode(int round_id);
// Exact match only; any other octet is a corrupted or spurious fireworks byte.
std::optional<RoundId> fireworks_decode(std::uint8_t octet);

// XOR of all bytes, XOR 0xA5.
std::uint8_t checksum(std::span<const std::uint8_t> bytes);

enum class MsAction : std::uint8_t {
    Read = 0b00,
    Write = 0b01,
    Execute = 0b10,
    // Baptize probe: broadcast only; record field carries the prefix length.
    Probe = 0b11,
};

std::string_view to_string(MsAction action);

struct MsRequest {
    MsAction action = MsAction::Read;
    Alias alias = 0;
    std::uint8_t file = 0;
    std::uint8_t record = 0;
    Record data{};  // Write only

    friend bool operator==(const MsRequest&, const MsRequest&) = default;
};

// Throws Validation for requests that cannot be put on the wire.
void validate_ms_request(const MsRequest& request);

using MsFrame = std::array<std::uint8_t, kMsPhaseBytes>;

inline constexpr Record kExecuteAck{0xAC, 0x00, 0x00, 0x00};
// Fixed reply to a matching baptize probe; identical from every responder.
inline constexpr std::uint8_t kProbeResponse = 0x5A;

// [alias, action<<6 | file, record, 0x00, checksum]
MsFrame ms_encode_address_phase(const MsRequest& request);
// nullopt on checksum mismatch or a nonzero reserved byte; data is left zero.
std::optional<MsRequest> ms_decode_address_phase(const MsFrame& frame);

// [d0, d1, d2, d3, checksum]
MsFrame ms_encode_data_phase(const Record& data);
std::optional<Record> ms_decode_data_phase(const MsFrame& frame);

}  // namespace ttstn
