#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "ttstn/behaviors.hpp"
#include "ttstn/gateway.hpp"
#include "ttstn/simulator.hpp"

#include <chrono>
#include <random>
#include <thread>

using namespace ttstn;

namespace {

std::unique_ptr<Simulator> load(const char* name) {
    return build_simulator(load_spec(test::config_path(name)), BehaviorLibrary::standard());
}

ViewRequest dm_read(Alias alias, std::uint8_t file, std::uint8_t record) {
    ViewRequest r;
    r.view = View::DM;
    r.op = ViewOp::Read;
    r.address = IfsAddress{0, alias, file, record};
    return r;
}

}  // namespace

TEST_CASE("latency bound arithmetic") {
    CHECK(latency_bound(1, 1) == 1);
    CHECK(latency_bound(10, 1) == 10);
    CHECK(latency_bound(5, 2) == 3);
    CHECK(latency_bound(4, 2) == 2);
}

TEST_CASE("RS snapshot") {
    auto sim = load("robot.cfg");
    Gateway gw(*sim);
    const IfsAddress ir1{0, 1, 8, 0};
    const IfsAddress mirror{0, kMasterAlias, 10, 0};
    const IfsAddress both[] = {ir1, mirror};

    auto snap = gw.rs_snapshot(both);
    CHECK_FALSE(snap.at(ir1).cycle.has_value());
    CHECK_FALSE(snap.at(mirror).cycle.has_value());

    sim->run_cycles(1);
    snap = gw.rs_snapshot(both);
    REQUIRE(snap.at(ir1).cycle.has_value());
    CHECK(*snap.at(ir1).cycle == 1);
    CHECK(snap.at(ir1).value == snap.at(mirror).value);

    sim->run_cycles(2);
    CHECK(*gw.rs_snapshot(both).at(ir1).cycle == 3);

    // Speed's DM record is not mirrored by the master.
    const IfsAddress speed[] = {{0, 10, 12, 0}};
    CHECK_ERROR_CODE(gw.rs_snapshot(speed), ErrorCode::NotSubscribed);
    const IfsAddress outside[] = {{0, kMasterAlias, 10, 9}};
    CHECK_ERROR_CODE(gw.rs_snapshot(outside), ErrorCode::NotSubscribed);
}

TEST_CASE("request validation") {
    auto sim = load("robot.cfg");
    Gateway gw(*sim);
    ViewRequest rs = dm_read(1, 8, 0);
    rs.view = View::RS;
    CHECK_ERROR_CODE(gw.submit(rs), ErrorCode::Validation);
    ViewRequest dl = dm_read(1, 8, 0);
    dl.view = View::CP;
    dl.op = ViewOp::DownloadRodl;
    CHECK_ERROR_CODE(gw.submit(dl), ErrorCode::Validation);
}

TEST_CASE("k-th queued request completes in k cycles") {
    for (int k : {1, 5, 10}) {
        CAPTURE(k);
        auto sim = load("robot.cfg");
        Gateway gw(*sim);
        std::vector<std::uint64_t> tickets;
        for (int i = 0; i < k; ++i) tickets.push_back(gw.submit(dm_read(static_cast<Alias>(1 + i % 11), 1, 0)));
        for (int i = 0; i < k; ++i) {
            const DmResult r = gw.wait(tickets[i]);
            CHECK(r.status == MsStatus::Ok);
            CHECK(r.position == i + 1);
            CHECK(r.latency_cycles == i + 1);
            CHECK(r.latency_cycles <= r.bound_cycles);
        }
    }
}

TEST_CASE("DM read and write") {
    auto sim = load("robot.cfg");
    Gateway gw(*sim);
    const DmResult series = gw.dm_request(dm_read(10, 1, 0));
    CHECK(record_to_u32(series.value) == sim->slave_by_alias(10)->physical_name().series);
    CHECK(format_dm_result(series).rfind("address=0x00028100, value=", 0) == 0);

    ViewRequest w = dm_read(10, 12, 0);
    w.op = ViewOp::Write;
    w.payload = u32_to_record(0x00000042);
    gw.dm_request(w);
    CHECK(record_to_u32(gw.dm_request(dm_read(10, 12, 0)).value) == 0x42u);
}

TEST_CASE("DM errors") {
    auto sim = load("robot.cfg");
    Gateway gw(*sim);
    ViewRequest late = dm_read(10, 1, 0);
    late.deadline = 0;
    CHECK_ERROR_CODE(gw.dm_request(late), ErrorCode::DeadlineMissed);
    CHECK_ERROR_CODE(gw.dm_request(dm_read(77, 1, 0)), ErrorCode::Timeout);

    // A dropped request does not hold up the one behind it.
    ViewRequest late2 = dm_read(10, 1, 0);
    late2.deadline = 0;
    const auto t1 = gw.submit(late2);
    const auto t2 = gw.submit(dm_read(10, 1, 0));
    CHECK(gw.wait(t1).status == MsStatus::DeadlineMissed);
    CHECK(gw.wait(t2).status == MsStatus::Ok);
}

TEST_CASE("saturated DM load leaves the multipartner projection unchanged") {
    auto quiet = load("robot.cfg");
    quiet->run_cycles(50);

    auto busy = load("robot.cfg");
    Gateway gw(*busy);
    int served = 0;
    for (int c = 0; c < 50; ++c) {
        while (busy->master().queue_length() < 2) gw.submit(dm_read(static_cast<Alias>(1 + c % 12), 1, 0));
        busy->run_cycles(1);
        ++served;
    }
    CHECK(busy->master().completions().size() >= 49);
    CHECK(mp_projection(busy->trace()) == mp_projection(quiet->trace()));
    CHECK(busy->trace().size() > quiet->trace().size());
}

TEST_CASE("enqueue from threads: the trace does not depend on wall-clock timing") {
    // Every thread submits the same request, so only the count matters. Sleeps
    // scramble the interleaving between runs.
    auto run = [](unsigned seed) {
        auto sim = load("robot.cfg");
        Gateway gw(*sim);
        sim->run_cycles(2);
        std::vector<std::thread> threads;
        for (int t = 0; t < 4; ++t)
            threads.emplace_back([&gw, seed, t] {
                std::mt19937 rng(seed * 31 + t);
                for (int i = 0; i < 5; ++i) {
                    std::this_thread::sleep_for(std::chrono::microseconds(rng() % 300));
                    gw.submit(dm_read(6, 1, 0));
                }
            });
        for (auto& th : threads) th.join();
        sim->run_cycles(25);
        return sim->trace_text();
    };
    const std::string a = run(1);
    CHECK(a == run(2));
    CHECK(a == run(3));
}

TEST_CASE("CP downloads") {
    auto sim = load("plugnplay.cfg");
    Gateway gw(*sim);
    const auto assigned = gw.pnp().baptize().assigned();
    REQUIRE(assigned.size() == 2);
    const Alias sonar = assigned[1].second;

    SUBCASE("new RODL takes effect next cycle") {
        Rodl rodl;
        rodl.round_id = 0;
        rodl.entries = {{5, sonar, {SlotKind::Execute, 8, 1, 1}},
                        {6, sonar, {SlotKind::Send, 8, 0, 2}},
                        {6, kMasterAlias, {SlotKind::Receive, 10, 2, 2}}};
        gw.cp_download_rodl(sonar, rodl);
        const int next = sim->completed_cycles() + 1;
        sim->run_cycles(1);
        int sends = 0;
        for (const auto& r : sim->trace())
            if (r.tag.cycle == next && r.kind == TraceKind::Send && r.actor == sonar) ++sends;
        CHECK(sends == 2);
        const auto rs = sim->master().rs_value(10, 2);
        REQUIRE(rs.cycle.has_value());
        CHECK(*rs.cycle == next);
    }
    SUBCASE("unbaptized alias") {
        Rodl rodl;
        rodl.entries = {{5, 99, {SlotKind::Send, 8, 0, 1}}};
        CHECK_ERROR_CODE(gw.cp_download_rodl(99, rodl), ErrorCode::Configuration);
    }
    SUBCASE("more entries than the configuration file holds") {
        Rodl rodl;
        for (int i = 0; i < 60; ++i)
            rodl.entries.push_back({3, sonar, {SlotKind::Receive, static_cast<std::uint8_t>(3 + i), 0, 1}});
        const auto before = sim->trace().size();
        CHECK_ERROR_CODE(gw.cp_download_rodl(sonar, rodl), ErrorCode::Validation);
        CHECK(sim->trace().size() == before);  // rejected before any bus traffic
    }
    SUBCASE("entries beyond the scheduled round length") {
        Rodl rodl;
        rodl.entries = {{20, sonar, {SlotKind::Send, 8, 0, 1}}};
        CHECK_ERROR_CODE(gw.cp_download_rodl(sonar, rodl), ErrorCode::Validation);
    }
}
