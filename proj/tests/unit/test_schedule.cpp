#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "ttstn/clock.hpp"
#include "ttstn/node_config.hpp"
#include "ttstn/schedule.hpp"
#include "ttstn/time.hpp"

#include <cmath>
#include <random>

using namespace ttstn;

namespace {

RodlEntry send(int slot, Alias a, std::uint8_t f, std::uint8_t r, int len = 1)
{
    return {slot, a, {SlotKind::Send, f, r, len}};
}
RodlEntry recv(int slot, Alias a, std::uint8_t f, std::uint8_t r, int len = 1)
{
    return {slot, a, {SlotKind::Receive, f, r, len}};
}
RodlEntry exec(int slot, Alias a, std::uint8_t f, std::uint8_t r) { return {slot, a, {SlotKind::Execute, f, r, 1}}; }

Rodl table1()
{
    return build_rodl(0, {send(1, 1, 8, 0, 3), send(4, 2, 8, 0, 2), exec(6, 3, 9, 0), send(9, 2, 8, 1, 4)}, 13);
}

}  // namespace

TEST_CASE("slot timing")
{
    CHECK(slot_duration_seconds(9600) == doctest::Approx(13.0 / 9600.0).epsilon(1e-15));
    CHECK(slot_duration_seconds(19200) == doctest::Approx(slot_duration_seconds(9600) / 2).epsilon(1e-15));
    CHECK_ERROR_CODE(slot_duration_seconds(0), ErrorCode::Range);
    CHECK_ERROR_CODE(BusTiming::for_baud(0), ErrorCode::Range);

    const BusTiming t = BusTiming::for_baud(9600);
    // 1e9/9600 = 104166.67 ns, rounded half up
    CHECK(t.bit_ns == 104167);
    CHECK(t.frame_ns == 10 * 104167);
    CHECK(t.slot_ns == 13 * 104167);
    CHECK(t.slot_ns == 1354171);
    CHECK(t.round_gap_ns == 6 * 104167);
    CHECK(std::abs(static_cast<double>(t.slot_ns) * 1e-9 - 13.0 / 9600.0) < 1e-6);
}

TEST_CASE("durations parse and format")
{
    CHECK(parse_duration("30ms") == 30'000'000);
    CHECK(parse_duration("1.5us") == 1500);
    CHECK(parse_duration("2s") == 2'000'000'000);
    CHECK(parse_duration("17ns") == 17);
    CHECK(parse_duration("0") == 0);
    CHECK_ERROR_CODE(parse_duration("3 parsecs"), ErrorCode::Parse);
    CHECK(format_duration(30'000'000) == "30ms");
    CHECK(format_duration(1354171) == "1354171ns");
}

TEST_CASE("build_rodl")
{
    const Rodl r = table1();
    CHECK(r.round_length_slots == 13);
    REQUIRE(r.entries.size() == 4);
    CHECK(r.entries[0].slot_index == 1);
    CHECK(r.entries[3].slot_index == 9);
    CHECK(r.sender_at(2)->actor == 1);
    CHECK(r.sender_at(5)->actor == 2);
    CHECK(r.sender_at(6) == nullptr);
    CHECK(r.sender_at(12)->actor == 2);
    CHECK(r.entries_for(2).size() == 2);

    // Smallest length that holds every entry.
    CHECK(build_rodl(0, {send(1, 1, 8, 0, 3), send(4, 2, 8, 0, 2), exec(6, 3, 9, 0), send(9, 2, 8, 1, 4)})
              .round_length_slots == 13);

    CHECK_ERROR_CODE(build_rodl(0, {send(3, 1, 8, 0), send(3, 2, 8, 0)}), ErrorCode::SlotConflict);
    CHECK_ERROR_CODE(build_rodl(0, {send(1, 1, 8, 0, 3), send(3, 2, 8, 0)}), ErrorCode::SlotConflict);
    CHECK_ERROR_CODE(build_rodl(0, {}), ErrorCode::Validation);
    CHECK_ERROR_CODE(build_rodl(6, {send(1, 1, 8, 0)}), ErrorCode::Validation);
    CHECK_ERROR_CODE(build_rodl(0, {send(0, 1, 8, 0)}), ErrorCode::Validation);
    CHECK_ERROR_CODE(build_rodl(0, {send(1, 1, 8, 0, 5)}), ErrorCode::Validation);
    CHECK_ERROR_CODE(build_rodl(0, {send(4, 1, 8, 0, 2)}, 5), ErrorCode::Overflow);
}

TEST_CASE("one sender per slot over random RODLs")
{
    std::mt19937 gen(3);
    for (int i = 0; i < 300; ++i) {
        std::vector<RodlEntry> entries;
        const int n = 1 + static_cast<int>(gen() % 6);
        for (int k = 0; k < n; ++k)
            entries.push_back(send(1 + static_cast<int>(gen() % 12), static_cast<Alias>(1 + gen() % 5), 8, 0,
                                   1 + static_cast<int>(gen() % 3)));
        Rodl r;
        try {
            r = build_rodl(0, entries);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SlotConflict);
            continue;
        }
        for (int s = 1; s < r.round_length_slots; ++s) {
            int senders = 0;
            for (const auto& e : r.entries)
                senders += e.action.kind == SlotKind::Send && s >= e.slot_index && s <= e.last_slot();
            CHECK(senders <= 1);
        }
        for (std::size_t k = 1; k < r.entries.size(); ++k)
            CHECK(r.entries[k - 1].slot_index <= r.entries[k].slot_index);
    }
}

TEST_CASE("recommended schedule")
{
    const BusTiming t = BusTiming::for_baud(9600);
    const Rodl a = table1();
    const Rodl b = build_rodl(1, {send(1, 1, 8, 0)});

    const Rodl one[] = {a};
    const ClusterSchedule s1 = recommended_schedule(one, 1, 40'000'000, t);
    CHECK(s1.sequence == std::vector<RoundId>{0, 6, 7});
    CHECK(s1.ms_rounds_per_cycle == 1);

    const Rodl two[] = {a, b};
    CHECK(recommended_schedule(two, 2, 60'000'000, t).sequence == std::vector<RoundId>{0, 1, 6, 7});
    CHECK(recommended_schedule(two, 1, 80'000'000, t).sequence == std::vector<RoundId>{0, 6, 7, 1, 6, 7});

    // 13 + 6 + 6 = 25 slots at 9600 baud is about 33.9 ms.
    CHECK_ERROR_CODE(recommended_schedule(one, 1, 30'000'000, t), ErrorCode::Overflow);
}

TEST_CASE("cycle plan lays rounds back to back")
{
    const BusTiming t = BusTiming::for_baud(9600);
    const Rodl one[] = {table1()};
    const ClusterSchedule s = recommended_schedule(one, 1, 40'000'000, t);
    const auto plan = plan_cycle(s, {{0, table1()}}, t);
    REQUIRE(plan.size() == 3);
    // oracle: offset(k) = sum over earlier rounds of slots*slot_ns + round gap
    SimTime off = 0;
    const int slots[] = {13, 6, 6};
    for (int k = 0; k < 3; ++k) {
        CHECK(plan[static_cast<std::size_t>(k)].offset == off);
        CHECK(plan[static_cast<std::size_t>(k)].duration == slots[k] * t.slot_ns);
        off += slots[k] * t.slot_ns + t.round_gap_ns;
    }
    CHECK(plan[1].offset == 18229225);
    CHECK(plan[2].offset == 26979253);
}

TEST_CASE("validate_schedule reports problems")
{
    const BusTiming t = BusTiming::for_baud(9600);
    auto node = [](std::string name, std::optional<Alias> alias) {
        NodeView v;
        v.name = std::move(name);
        v.alias = alias;
        InterfaceFileSystem ifs;
        ifs.add_file({8, 2, Section::RS});
        ifs.add_file({9, 1, Section::RS});
        v.files = ifs.layout();
        v.executable.push_back({9, 0});
        return v;
    };
    ClusterView view;
    view.timing = t;
    view.nodes = {node("A", 1), node("B", 2), node("C", 3), node("D", 4), node("M", kMasterAlias)};
    const Rodl good[] = {table1()};
    view.schedule = recommended_schedule(good, 1, 40'000'000, t);
    CHECK(validate_schedule(good, view).ok());

    SUBCASE("unknown alias")
    {
        Rodl bad = table1();
        bad.entries.push_back(recv(1, 9, 8, 0));
        const Rodl r[] = {bad};
        CHECK(validate_schedule(r, view).has("unknown-alias"));
    }
    SUBCASE("broadcast alias as sender")
    {
        Rodl bad;
        bad.round_length_slots = 13;
        bad.entries = {send(1, 0, 8, 0)};
        const Rodl r[] = {bad};
        CHECK(validate_schedule(r, view).has("broadcast-actor"));
    }
    SUBCASE("missing record")
    {
        Rodl bad = build_rodl(0, {send(1, 1, 8, 5)}, 13);
        const Rodl r[] = {bad};
        CHECK(validate_schedule(r, view).has("dangling-reference"));
    }
    SUBCASE("execute of a passive record")
    {
        Rodl bad = build_rodl(0, {exec(1, 1, 8, 0)}, 13);
        const Rodl r[] = {bad};
        CHECK(validate_schedule(r, view).has("not-executable"));
    }
    SUBCASE("two senders")
    {
        Rodl bad = table1();
        bad.entries.push_back(send(2, 3, 8, 0));
        const Rodl r[] = {bad};
        const auto rep = validate_schedule(r, view);
        CHECK(rep.has("slot-conflict"));
        CHECK(rep.to_text().find("slot 2") != std::string::npos);
    }
    SUBCASE("round overflow")
    {
        Rodl bad = table1();
        bad.round_length_slots = 10;
        const Rodl r[] = {bad};
        CHECK(validate_schedule(r, view).has("round-overflow"));
    }
    SUBCASE("cycle overflow")
    {
        view.schedule->cycle_duration = 30'000'000;
        CHECK(validate_schedule(good, view).has("cycle-overflow"));
    }
    SUBCASE("overlapping exclusive windows")
    {
        view.nodes[0].windows.push_back({9, 0, "us", 6'000'000});
        view.nodes[1].windows.push_back({9, 0, "us", 6'000'000});
        const Rodl r[] = {build_rodl(0, {exec(1, 1, 9, 0), exec(2, 2, 9, 0)}, 13)};
        const auto rep = validate_schedule(r, view);
        CHECK(rep.has("window-overlap"));
        CHECK(rep.ok());  // a warning only
        // oracle: [s1, s1+6ms) and [s2, s2+6ms) intersect iff |s1-s2| < 6ms
        CHECK(std::abs(t.slot_ns * (2 - 1)) < 6'000'000);
    }
}

TEST_CASE("node configuration round trips through file 0")
{
    std::mt19937 gen(5);
    for (int iter = 0; iter < 200; ++iter) {
        NodeConfiguration c;
        c.round_lengths = {static_cast<std::uint8_t>(4 + gen() % 30), 0, 0, 0, 0, 0, 6, 6};
        c.sequence = {0, 6, 7};
        const int n = static_cast<int>(gen() % 20);
        for (int k = 0; k < n; ++k) {
            const auto kind = static_cast<SlotKind>(gen() % 3);
            c.entries.push_back({0, 1 + static_cast<int>(gen() % 3),
                                 {kind, static_cast<std::uint8_t>(3 + gen() % 60), static_cast<std::uint8_t>(gen() % 256),
                                  kind == SlotKind::Execute ? 1 : 1 + static_cast<int>(gen() % 4)}});
        }
        IfsFile file(sysfile::kConfiguration, sysfile::kConfigurationRecords, Section::CP);
        for (const auto& [rec, value] : serialize_configuration(c))
            file.at(rec) = value;
        const auto back = parse_configuration(file);
        REQUIRE(back.has_value());
        CHECK(*back == c);

        // flip one byte of a body record: the commit checksum must catch it
        const int victim = 1 + static_cast<int>(gen() % (4 + n));
        file.at(static_cast<std::size_t>(victim))[gen() % 4] ^= 0x01;
        CHECK_FALSE(parse_configuration(file).has_value());
    }
}

TEST_CASE("configuration capacity and commit")
{
    NodeConfiguration c;
    c.round_lengths = {13, 0, 0, 0, 0, 0, 6, 6};
    c.sequence = {0, 6, 7};
    for (int k = 0; k < cfgfile::kMaxEntries + 1; ++k)
        c.entries.push_back({0, 1, {SlotKind::Receive, 8, 0, 1}});
    CHECK_ERROR_CODE(serialize_configuration(c), ErrorCode::Validation);
    c.entries.resize(2);
    const auto recs = serialize_configuration(c);
    CHECK(recs.back().first == cfgfile::kCommitRecord);
    CHECK(recs.back().second[0] == cfgfile::kCommitTag);
    CHECK(recs.back().second[1] == 2);
    CHECK(recs.back().second[3] == cfgfile::kCommitTrailer);
    // checksum oracle: XOR over every body record byte, then 0xA5
    std::uint8_t x = 0xA5;
    for (std::size_t i = 0; i + 1 < recs.size(); ++i)
        for (auto b : recs[i].second)
            x ^= b;
    CHECK(recs.back().second[2] == x);
}

TEST_CASE("slot entry encoding")
{
    const ConfiguredSlot s{3, 17, {SlotKind::Send, 12, 200, 4}};
    const std::uint32_t v = encode_slot(s);
    CHECK((v >> 24) == (0x80u | (3u << 4) | (0u << 2) | 3u));
    CHECK(((v >> 16) & 0xFF) == 17u);
    CHECK(decode_slot(u32_to_record(v)) == s);
    CHECK_FALSE(decode_slot(Record{0, 0, 0, 0}).has_value());
}

TEST_CASE("local clock")
{
    LocalClock c(1e-3, 1e-3);
    CHECK(c.local_at(1'000'000'000) == 1'001'000'000);
    CHECK(c.real_at(c.local_at(123'456'789)) == doctest::Approx(123'456'789).epsilon(1e-9));
    c.resync(5'000'000, 5'000'000);
    CHECK(c.local_at(5'000'000) == 5'000'000);
    CHECK(c.local_at(6'000'000) == 6'001'000);
    CHECK_ERROR_CODE(LocalClock(2e-3, 1e-3), ErrorCode::Range);
    std::mt19937_64 gen(2);
    for (int i = 0; i < 1000; ++i) {
        const double rho = (static_cast<double>(gen() % 2001) - 1000.0) * 1e-6;
        LocalClock k(rho, 1e-3);
        const SimTime t = static_cast<SimTime>(gen() % 10'000'000'000ull);
        CHECK(std::llabs(k.real_at(k.local_at(t)) - t) <= 1);
    }
}
