#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "ttstn/wire.hpp"

#include <bit>
#include <random>
#include <set>

using namespace ttstn;

namespace {

int popcount8(unsigned v)
{
    int n = 0;
    for (; v; v >>= 1)
        n += static_cast<int>(v & 1u);
    return n;
}

// Every byte at distance 1..3 from `cw`.
std::vector<std::uint8_t> corruptions(std::uint8_t cw)
{
    std::vector<std::uint8_t> out;
    for (unsigned mask = 1; mask < 256; ++mask)
        if (popcount8(mask) <= 3)
            out.push_back(static_cast<std::uint8_t>(cw ^ mask));
    return out;
}

}  // namespace

TEST_CASE("fireworks codebook values")
{
    // Frozen from a separate script enumerating the systematic [8,4,4] code.
    const std::array<std::uint8_t, 8> expected{0x1D, 0x2B, 0x36, 0x47, 0x5A, 0x6C, 0x71, 0x8E};
    CHECK(kFireworksCodebook == expected);
    for (int id = 0; id < kRoundIdCount; ++id) {
        CHECK(fireworks_encode(id) == expected[static_cast<std::size_t>(id)]);
        CHECK(fireworks_decode(expected[static_cast<std::size_t>(id)]) == id);
    }
    CHECK_ERROR_CODE(fireworks_encode(8), ErrorCode::Range);
}

TEST_CASE("every codeword is a word of a distance-4 code")
{
    std::set<std::uint8_t> seen(kFireworksCodebook.begin(), kFireworksCodebook.end());
    CHECK(seen.size() == 8);
    CHECK_FALSE(seen.count(0x00));
    CHECK_FALSE(seen.count(0xFF));
    int pairs = 0;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j, ++pairs)
            CHECK(popcount8(kFireworksCodebook[i] ^ kFireworksCodebook[j]) >= 4);
    CHECK(pairs == 28);
    for (auto cw : kFireworksCodebook)
        CHECK(popcount8(cw) % 2 == 0);  // even overall parity
}

TEST_CASE("1-3 bit corruptions never decode")
{
    int cases = 0;
    for (auto cw : kFireworksCodebook)
        for (auto bad : corruptions(cw)) {
            ++cases;
            CHECK_FALSE(fireworks_decode(bad).has_value());
        }
    CHECK(cases == 8 * (8 + 28 + 56));
}

TEST_CASE("checksum")
{
    const std::uint8_t b[4] = {1, 2, 3, 4};
    CHECK(checksum(std::span<const std::uint8_t>(b, 4)) == 0xA1);  // 1^2^3^4 = 4, ^0xA5
    const std::uint8_t zero[1] = {0x00}, k[1] = {0xA5};
    CHECK(checksum(std::span<const std::uint8_t>(zero, 1)) == 0xA5);
    CHECK(checksum(std::span<const std::uint8_t>(k, 1)) == 0x00);
    CHECK_ERROR_CODE(checksum({}), ErrorCode::Size);
}

TEST_CASE("address phase layout")
{
    const MsFrame f = ms_encode_address_phase({MsAction::Read, 5, 1, 0, {}});
    CHECK(f == MsFrame{0x05, 0x01, 0x00, 0x00, 0xA1});
    const MsFrame w = ms_encode_address_phase({MsAction::Write, 3, 0x3F, 7, {}});
    CHECK(w[1] == ((0b01 << 6) | 0x3F));
    const MsFrame p = ms_encode_address_phase({MsAction::Probe, 0, 2, 64, {}});
    CHECK((p[1] >> 6) == 0b11);
    CHECK(p[2] == 64);
}

TEST_CASE("MS frames round trip")
{
    std::mt19937 gen(11);
    for (int i = 0; i < 2000; ++i) {
        MsRequest r;
        r.action = static_cast<MsAction>(gen() % 3);
        r.alias = static_cast<Alias>(1 + gen() % 250);
        r.file = static_cast<std::uint8_t>(gen() % 64);
        r.record = static_cast<std::uint8_t>(gen() % 256);
        const auto back = ms_decode_address_phase(ms_encode_address_phase(r));
        REQUIRE(back.has_value());
        CHECK(back->action == r.action);
        CHECK(back->alias == r.alias);
        CHECK(back->file == r.file);
        CHECK(back->record == r.record);

        const Record d{static_cast<std::uint8_t>(gen()), static_cast<std::uint8_t>(gen()),
                       static_cast<std::uint8_t>(gen()), static_cast<std::uint8_t>(gen())};
        CHECK(ms_decode_data_phase(ms_encode_data_phase(d)) == d);
    }
}

TEST_CASE("corrupted MS frames are rejected")
{
    MsFrame f = ms_encode_address_phase({MsAction::Read, 5, 1, 0, {}});
    for (std::size_t byte = 0; byte < f.size(); ++byte)
        for (int bit = 0; bit < 8; ++bit) {
            MsFrame g = f;
            g[byte] ^= static_cast<std::uint8_t>(1u << bit);
            CHECK_FALSE(ms_decode_address_phase(g).has_value());
        }
    MsFrame d = ms_encode_data_phase(Record{1, 2, 3, 4});
    d[2] ^= 0x10;
    CHECK_FALSE(ms_decode_data_phase(d).has_value());
}

TEST_CASE("request validation")
{
    CHECK_NOTHROW(validate_ms_request({MsAction::Read, 5, 1, 0, {}}));
    CHECK_ERROR_CODE(validate_ms_request({MsAction::Read, 0, 1, 0, {}}), ErrorCode::Validation);
    CHECK_ERROR_CODE(validate_ms_request({MsAction::Read, kMasterAlias, 1, 0, {}}), ErrorCode::Validation);
    CHECK_ERROR_CODE(validate_ms_request({MsAction::Read, 5, 64, 0, {}}), ErrorCode::Validation);
    CHECK_ERROR_CODE(validate_ms_request({MsAction::Probe, 5, 2, 3, {}}), ErrorCode::Validation);
    CHECK_ERROR_CODE(validate_ms_request({MsAction::Probe, 0, 2, 65, {}}), ErrorCode::Validation);
    CHECK_NOTHROW(validate_ms_request({MsAction::Write, 0, 2, 1, {}}));
}
