#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "ttstn/behaviors.hpp"
#include "ttstn/node_config.hpp"
#include "ttstn/pnp.hpp"
#include "ttstn/simulator.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace ttstn;

namespace {

const char* kEmptyCluster = R"(
[cluster]
baud = 9600
cycle = 30ms

[master]
files = 10:1:RS

[rodl 0]
length = 2
entry = 1 M send 10:0
)";

std::unique_ptr<Simulator> empty_cluster() {
    return build_simulator(parse_spec(kEmptyCluster), BehaviorLibrary::standard());
}

std::unique_ptr<Simulator> plugnplay() {
    return build_simulator(load_spec(test::config_path("plugnplay.cfg")), BehaviorLibrary::standard());
}

// Reference search over a known population: at each level choose 0 if any
// remaining candidate continues with 0, otherwise 1.
std::vector<std::uint64_t> search_order(std::vector<std::uint64_t> names) {
    std::vector<std::uint64_t> order;
    while (!names.empty()) {
        std::uint64_t prefix = 0;
        for (int level = 0; level < 64; ++level) {
            const int shift = 63 - level;
            const std::uint64_t zero = prefix;  // bit at `shift` cleared
            bool any = false;
            for (auto n : names) {
                const std::uint64_t mask = level == 0 ? 0 : ~std::uint64_t{0} << (64 - level);
                if ((n & mask) == (zero & mask) && ((n >> shift) & 1) == 0) any = true;
            }
            if (!any) prefix |= std::uint64_t{1} << shift;
        }
        order.push_back(prefix);
        names.erase(std::find(names.begin(), names.end(), prefix));
    }
    return order;
}

std::vector<std::uint64_t> random_names(std::mt19937_64& rng, int n) {
    std::set<std::uint64_t> s;
    while (static_cast<int>(s.size()) < n) {
        const std::uint64_t v = rng();
        if (v >> 32) s.insert(v);  // series 0 is not a valid product line
    }
    return {s.begin(), s.end()};
}

void check_population(const std::vector<std::uint64_t>& names) {
    auto sim = empty_cluster();
    int i = 0;
    for (auto n : names) sim->add_slave("n" + std::to_string(i++), PhysicalName::from_value(n));
    PlugAndPlay pnp(*sim);
    const auto report = pnp.baptize();

    const auto expected = search_order(names);
    REQUIRE(report.nodes.size() == names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        CHECK(report.nodes[k].name.value() == expected[k]);
        CHECK(report.nodes[k].bit_probes == 64);
        REQUIRE(report.nodes[k].alias.has_value());
        CHECK(*report.nodes[k].alias == static_cast<Alias>(k + 1));
    }
    CHECK(report.bit_probes == 64 * static_cast<int>(names.size()));
    CHECK(report.presence_probes == static_cast<int>(names.size()) + 1);

    std::set<std::uint64_t> found;
    for (const auto& [name, alias] : report.assigned()) {
        found.insert(name.value());
        auto* s = sim->slave_by_alias(alias);
        REQUIRE(s != nullptr);
        CHECK(s->physical_name().value() == name.value());
    }
    CHECK(found == std::set<std::uint64_t>(names.begin(), names.end()));
    for (auto* s : sim->slaves()) CHECK(s->baptized());
}

std::vector<TraceRecord> cycles_of(const std::vector<TraceRecord>& trace, int from, int to) {
    std::vector<TraceRecord> out;
    for (const auto& r : trace)
        if (r.tag.cycle >= from && r.tag.cycle <= to) out.push_back(r);
    return out;
}

bool transmits_in_mp(const Simulator& sim, Alias alias) {
    for (const auto& r : mp_projection(sim.trace()))
        if (r.kind == TraceKind::Send && r.actor == alias) return true;
    return false;
}

}  // namespace

TEST_CASE("search oracle picks names in ascending order") {
    const std::vector<std::uint64_t> names = {0xFFFFFFFFFFFFFFFFull, 0x0000000100000001ull, 0x8000000000000000ull};
    const auto order = search_order(names);
    CHECK(order == std::vector<std::uint64_t>{0x0000000100000001ull, 0x8000000000000000ull, 0xFFFFFFFFFFFFFFFFull});
}

TEST_CASE("baptize with no new nodes finds nothing") {
    auto sim = empty_cluster();
    PlugAndPlay pnp(*sim);
    const auto report = pnp.baptize();
    CHECK(report.nodes.empty());
    CHECK(report.presence_probes == 1);
    CHECK(pnp.probe_count() == 1);
}

TEST_CASE("one node: 64 probes and the lowest alias") {
    auto sim = empty_cluster();
    sim->add_slave("x", PhysicalName{0x2A, 0x1001});
    const auto assigned = baptize(*sim);
    REQUIRE(assigned.size() == 1);
    CHECK(assigned[0].first == PhysicalName{0x2A, 0x1001});
    CHECK(assigned[0].second == 1);

    // The node now answers by alias with its series.
    const auto done = sim->await(sim->enqueue({MsAction::Read, 1, 1, 0, {}}));
    CHECK(done.status == MsStatus::Ok);
    CHECK(record_to_u32(done.data) == 0x2Au);
}

TEST_CASE("corner names") {
    check_population({0x0000000100000001ull, 0x8000000000000000ull, 0xFFFFFFFFFFFFFFFFull});
}

TEST_CASE("random populations") {
    std::mt19937_64 rng(424242);
    for (int n : {1, 3, 10}) {
        CAPTURE(n);
        check_population(random_names(rng, n));
    }
    // Names sharing a long prefix.
    check_population({0x1234567800000000ull, 0x1234567800000001ull, 0x1234567800000003ull});
}

TEST_CASE("taken aliases are skipped") {
    auto sim = plugnplay();
    PlugAndPlay pnp(*sim);
    CHECK(pnp.in_use() == std::set<Alias>{1});
    const auto report = pnp.baptize();
    const auto assigned = report.assigned();
    REQUIRE(assigned.size() == 2);
    CHECK(assigned[0].first == PhysicalName{0x2A, 0x1001});
    CHECK(assigned[0].second == 2);
    CHECK(assigned[1].first == PhysicalName{0x2B, 7});
    CHECK(assigned[1].second == 3);
}

TEST_CASE("a lost probe response yields a failed identification; the node is found later") {
    const PhysicalName real{0x2A, 0x1001};

    // Locate the first bit probe's response slot in an undisturbed run.
    int probe_cycle = 0;
    {
        auto ref = empty_cluster();
        ref->add_slave("x", real);
        baptize(*ref);
        int probes = 0;
        for (const auto& r : ref->trace())
            if (r.tag.round == 6 && r.tag.slot == 2 && r.byte == 0xC2 && ++probes == 2) {
                probe_cycle = r.tag.cycle;
                break;
            }
    }
    REQUIRE(probe_cycle > 0);

    auto sim = empty_cluster();
    sim->add_slave("x", real);
    FaultSpec f;
    f.effect = FaultSpec::Effect::Drop;
    f.slot = SlotRef{probe_cycle, 7, 1};
    sim->inject_fault(f);
    PlugAndPlay pnp(*sim);
    const auto report = pnp.baptize();
    REQUIRE(report.nodes.size() == 2);
    CHECK_FALSE(report.nodes[0].alias.has_value());
    CHECK_FALSE(report.nodes[0].failure.empty());
    CHECK(report.nodes[0].name != real);
    CHECK(report.nodes[1].name == real);
    REQUIRE(report.nodes[1].alias.has_value());
    CHECK(*report.nodes[1].alias == 1);  // the failed attempt gave its alias back
}

TEST_CASE("alias pool errors") {
    auto sim = empty_cluster();
    sim->add_slave("x", PhysicalName{0x2A, 1});

    SUBCASE("full pool") {
        std::set<Alias> all;
        for (int a = 1; a <= 250; ++a) all.insert(static_cast<Alias>(a));
        PlugAndPlay pnp(*sim, all);
        CHECK_FALSE(pnp.lowest_free().has_value());
        CHECK_ERROR_CODE(pnp.baptize(), ErrorCode::Capacity);
    }
    SUBCASE("unassignable alias") {
        PlugAndPlay pnp(*sim);
        CHECK_ERROR_CODE(pnp.assign_alias(PhysicalName{0x2A, 1}, 0), ErrorCode::Validation);
        CHECK_ERROR_CODE(pnp.assign_alias(PhysicalName{0x2A, 1}, 251), ErrorCode::Validation);
    }
    SUBCASE("duplicate alias") {
        PlugAndPlay pnp(*sim, {5});
        CHECK_ERROR_CODE(pnp.assign_alias(PhysicalName{0x2A, 1}, 5), ErrorCode::Assignment);
    }
    SUBCASE("explicit assignment") {
        PlugAndPlay pnp(*sim);
        pnp.assign_alias(PhysicalName{0x2A, 1}, 17);
        CHECK(sim->find_slave("x")->alias() == 17);
        CHECK(pnp.in_use().count(17) == 1);
    }
    SUBCASE("assignment to an absent node") {
        PlugAndPlay pnp(*sim);
        CHECK_ERROR_CODE(pnp.assign_alias(PhysicalName{0x2A, 2}, 9), ErrorCode::Assignment);
        CHECK(pnp.in_use().count(9) == 0);
    }
}

TEST_CASE("datasheets") {
    const auto registry = test::config_path("registry");

    SUBCASE("fetch by series") {
        const auto sheet = fetch_datasheet(registry, 0x2B);
        CHECK(sheet.series == 0x2Bu);
        CHECK(sheet.description == "Ultrasonic range finder");
        REQUIRE(sheet.cluster_config_part.size() == 3);
        CHECK(sheet.cluster_config_part[1].action.kind == SlotKind::Send);
        CHECK(sheet.cluster_config_part[1].action.length_slots == 2);
        CHECK(sheet.cluster_config_part[2].actor == "M");
        REQUIRE(sheet.transducer_description_part.size() == 1);
        CHECK(datasheet_path(registry, 0x2B).filename() == "0000002B.xml");
    }
    SUBCASE("unknown series") {
        CHECK_ERROR_CODE(fetch_datasheet(registry, 0x77), ErrorCode::UnknownSeries);
    }
    SUBCASE("malformed document names the line") {
        std::istringstream in("<?xml version=\"1.0\"?>\n<datasheet series=\"1\">\n<files>\n<file name=8/>\n</files>\n</datasheet>\n");
        bool thrown = false;
        try {
            parse_datasheet(in, "bad.xml");
        } catch (const Error& e) {
            thrown = true;
            CHECK(e.code() == ErrorCode::Parse);
            CHECK_MESSAGE(std::string(e.what()).find("bad.xml:4") != std::string::npos, std::string(e.what()));
        }
        CHECK(thrown);
    }
    SUBCASE("file out of range") {
        std::istringstream in(R"(<datasheet series="1"><clusterConfig>
            <rodl round="0" slot="1" actor="M" action="receive" file="64" record="0"/>
            </clusterConfig></datasheet>)");
        CHECK_ERROR_CODE(parse_datasheet(in, "x"), ErrorCode::Validation);
    }
    SUBCASE("self entry on an undeclared file") {
        std::istringstream in(R"(<datasheet series="1"><clusterConfig>
            <rodl round="0" slot="1" actor="self" action="send" file="9" record="0"/>
            </clusterConfig></datasheet>)");
        CHECK_ERROR_CODE(parse_datasheet(in, "x"), ErrorCode::Validation);
    }
    SUBCASE("missing attribute") {
        std::istringstream in(R"(<datasheet><description>x</description></datasheet>)");
        CHECK_ERROR_CODE(parse_datasheet(in, "x"), ErrorCode::Validation);
    }
    SUBCASE("wrong root") {
        std::istringstream in("<sheet series=\"1\"/>");
        CHECK_ERROR_CODE(parse_datasheet(in, "x"), ErrorCode::Parse);
    }
}

TEST_CASE("configuration download") {
    auto sim = plugnplay();
    PlugAndPlay pnp(*sim);
    const auto assigned = pnp.baptize().assigned();
    REQUIRE(assigned.size() == 2);
    const Alias dist = assigned[0].second;
    const auto sheet = fetch_datasheet(test::config_path("registry"), 0x2A);

    SUBCASE("applied node transmits from the next cycle") {
        CHECK_FALSE(transmits_in_mp(*sim, dist));
        pnp.apply_configuration(sheet, dist);
        CHECK(pnp.configured(dist));
        CHECK(sim->slave_by_alias(dist)->configured());
        const int from = sim->completed_cycles() + 1;
        sim->run_cycles(2);
        int sends = 0;
        for (const auto& r : cycles_of(sim->trace(), from, from + 1))
            if (r.kind == TraceKind::Send && r.actor == dist && r.tag.round == 0) {
                CHECK(r.tag.slot == 4);
                ++sends;
            }
        CHECK(sends == 2);
        const auto rs = sim->master().rs_value(10, 1);
        REQUIRE(rs.cycle.has_value());
        CHECK(*rs.cycle == from + 1);
    }
    SUBCASE("re-applying the same sheet changes nothing") {
        pnp.apply_configuration(sheet, dist);
        const auto config = sim->slave_by_alias(dist)->configuration();
        const auto master_entries = sim->master().rodls().at(0).entries;
        sim->run_cycles(1);
        const int a = sim->completed_cycles();
        pnp.apply_configuration(sheet, dist);
        CHECK(sim->slave_by_alias(dist)->configuration() == config);
        CHECK(sim->master().rodls().at(0).entries == master_entries);
        sim->run_cycles(1);
        const int b = sim->completed_cycles();
        // The MP part of the cycle after each application is identical.
        auto first = mp_projection(cycles_of(sim->trace(), a, a));
        auto second = mp_projection(cycles_of(sim->trace(), b, b));
        REQUIRE(first.size() == second.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            const SimTime shift = static_cast<SimTime>(b - a) * 30'000'000;
            CHECK(second[i].time - shift == first[i].time);
            CHECK(second[i].kind == first[i].kind);
            CHECK(second[i].actor == first[i].actor);
        }
    }
    SUBCASE("unbaptized alias is refused") {
        CHECK_ERROR_CODE(pnp.apply_configuration(sheet, 40), ErrorCode::Configuration);
    }
    SUBCASE("unconfirmed download is a partial configuration") {
        sim->slave_by_alias(dist)->set_muted(true);
        CHECK_ERROR_CODE(pnp.apply_configuration(sheet, dist), ErrorCode::PartialConfig);
        CHECK_FALSE(pnp.configured(dist));
        bool has = false;
        for (const auto& e : sim->master().rodls().at(0).entries) has |= e.actor == dist;
        CHECK_FALSE(has);
    }
}

TEST_CASE("download interrupted before the commit record: the node stays silent") {
    // Reference: where does the commit write land?
    auto ref = plugnplay();
    PlugAndPlay ref_pnp(*ref);
    const Alias dist = ref_pnp.baptize().assigned().at(0).second;
    const int start = ref->completed_cycles();
    ref_pnp.apply_configuration(fetch_datasheet(test::config_path("registry"), 0x2A), dist);
    int commit_cycle = 0;
    for (const auto& r : ref->trace())
        if (r.tag.cycle > start && r.tag.round == 6 && r.tag.slot == 3 && r.byte == cfgfile::kCommitRecord)
            commit_cycle = r.tag.cycle;
    REQUIRE(commit_cycle > start);

    auto sim = plugnplay();
    PlugAndPlay pnp(*sim);
    pnp.baptize();
    REQUIRE(sim->completed_cycles() == start);
    FaultSpec f;
    f.effect = FaultSpec::Effect::Drop;
    f.slot = SlotRef{commit_cycle, 6, 1};
    sim->inject_fault(f);
    CHECK_ERROR_CODE(pnp.apply_configuration(fetch_datasheet(test::config_path("registry"), 0x2A), dist),
                     ErrorCode::PartialConfig);
    CHECK_FALSE(sim->slave_by_alias(dist)->configured());
    sim->run_cycles(20);
    CHECK_FALSE(transmits_in_mp(*sim, dist));
}

TEST_CASE("baptize leaves multipartner traffic untouched") {
    auto with = plugnplay();
    PlugAndPlay pnp(*with);
    pnp.baptize();
    const int cycles = with->completed_cycles();
    REQUIRE(cycles > 100);

    auto without = plugnplay();
    without->run_cycles(cycles);
    CHECK(mp_projection(with->trace()) == mp_projection(without->trace()));
    CHECK(with->trace().size() > without->trace().size());
}
