#include "ttstn/config.hpp"
#include "ttstn/error.hpp"
#include "ttstn/gateway.hpp"
#include "ttstn/master.hpp"
#include "ttstn/pnp.hpp"
#include "ttstn/robot.hpp"
#include "ttstn/slave.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#ifndef TTSTN_CONFIG_DIR
#define TTSTN_CONFIG_DIR "configs"
#endif

using namespace ttstn;

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kIo = 3 };

int exit_code(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Io:
        return kIo;
    case ErrorCode::Timeout:
    case ErrorCode::DataPhase:
    case ErrorCode::DeadlineMissed:
    case ErrorCode::PartialConfig:
    case ErrorCode::Capacity:
    case ErrorCode::Assignment:
    case ErrorCode::StaleFault:
        return kRuntime;
    default:
        return kValidation;
    }
}

IfsAddress parse_address(const std::string& text)
{
    if (text.find(':') == std::string::npos) {
        std::size_t used = 0;
        const unsigned long v = std::stoul(text, &used, 0);
        if (used != text.size())
            throw Error(ErrorCode::MalformedAddress, "bad address '" + text + "'");
        return decode_address(static_cast<std::uint32_t>(v));
    }
    std::vector<int> parts;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ':'))
        parts.push_back(std::stoi(part, nullptr, 0));
    if (parts.size() != 3)
        throw Error(ErrorCode::MalformedAddress, "address must be ALIAS:FILE:RECORD or a packed value");
    return make_address(0, parts[0], parts[1], parts[2]);
}

std::unique_ptr<Simulator> build(const ClusterSpec& spec, const BehaviorLibrary& lib)
{
    const ValidationReport report = validate_spec(spec);
    for (const auto& issue : report.issues)
        if (issue.severity == Severity::Warning)
            std::cerr << "warning: " << issue.message << "\n";
    return build_simulator(spec, lib);
}

void write_trace(const Simulator& sim, const std::string& path)
{
    if (path.empty())
        return;
    if (path == "-") {
        sim.export_trace(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write " + path);
    sim.export_trace(out);
    out.flush();
    if (!out)
        throw Error(ErrorCode::Io, "write failed: " + path);
}

// Per-cycle slot occupancy, compressed over identical consecutive cycles.
void print_summary(const Simulator& sim, const std::vector<MsCompletion>& dm)
{
    const auto& trace = sim.trace();
    const SimTime cycle = sim.master().schedule().cycle_duration;
    std::map<int, std::map<std::pair<SimTime, int>, std::set<int>>> used;  // cycle -> (round start, id) -> slots
    std::map<int, SimTime> first_fireworks;
    for (const auto& r : trace) {
        if (r.tag.cycle <= 0 || r.tag.round < 0)
            continue;
        if (r.kind == TraceKind::Fireworks)
            first_fireworks.emplace(r.tag.cycle, r.time);
        if (r.kind == TraceKind::Fireworks || r.kind == TraceKind::Send || r.kind == TraceKind::Execute)
            used[r.tag.cycle][{r.tag.round_start, r.tag.round}].insert(r.tag.slot);
    }

    std::cout << "cycles: " << sim.completed_cycles() << "\n";
    std::set<SimTime> periods;
    for (auto it = first_fireworks.begin(); it != first_fireworks.end() && std::next(it) != first_fireworks.end(); ++it)
        periods.insert(std::next(it)->second - it->second);
    if (periods.empty())
        std::cout << "cycle period: " << format_duration(cycle) << " (nominal)\n";
    else if (periods.size() == 1)
        std::cout << "cycle period: " << format_duration(*periods.begin()) << " (" << *periods.begin() << " ns, constant)\n";
    else
        std::cout << "cycle period: varies (" << *periods.begin() << " .. " << *periods.rbegin() << " ns)\n";
    const SimStats& s = sim.stats();
    std::cout << "transmissions: " << s.transmissions << "\n";
    std::cout << "collisions: " << s.collisions << "\n";
    std::cout << "slot boundary violations: " << s.slot_boundary_violations << "\n";
    std::cout << "faults applied: " << s.faults_applied << "\n";

    const auto& rodls = sim.master().rodls();
    auto describe = [&](const std::map<std::pair<SimTime, int>, std::set<int>>& rounds) {
        std::ostringstream line;
        bool first = true;
        for (const auto& [key, slots] : rounds) {
            const int id = key.second;
            const int len = is_ms_round(id) ? kMsRoundSlots : rodls.at(static_cast<RoundId>(id)).round_length_slots;
            line << (first ? "" : ", ") << "round " << id << " " << slots.size() << "/" << len;
            first = false;
        }
        return line.str();
    };
    std::cout << "slot occupancy (used/total incl. fireworks):\n";
    int run_start = 0, prev = 0;
    std::string prev_text;
    auto flush = [&] {
        if (run_start == 0)
            return;
        if (run_start == prev)
            std::cout << "  cycle " << run_start << ": " << prev_text << "\n";
        else
            std::cout << "  cycles " << run_start << "-" << prev << ": " << prev_text << "\n";
    };
    for (const auto& [c, rounds] : used) {
        const std::string text = describe(rounds);
        if (run_start != 0 && text == prev_text && c == prev + 1) {
            prev = c;
            continue;
        }
        flush();
        run_start = prev = c;
        prev_text = text;
    }
    flush();

    if (!dm.empty()) {
        int lo = dm.front().latency_cycles, hi = lo, missed = 0;
        for (const auto& c : dm) {
            lo = std::min(lo, c.latency_cycles);
            hi = std::max(hi, c.latency_cycles);
            missed += c.status != MsStatus::Ok;
        }
        std::cout << "dm requests: " << dm.size() << ", latency_cycles min " << lo << " max " << hi << ", failed " << missed
                  << "\n";
    } else {
        std::cout << "dm requests: 0\n";
    }
}

void write_plot(const Simulator& sim, const std::string& path)
{
    const SimTime cycle = sim.master().schedule().cycle_duration;
    const SimTime frame = sim.timing().frame_ns;
    const int rows = std::min(sim.completed_cycles(), 20);
    const double width = 1000.0, row_h = 18.0, left = 70.0;
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write " + path);
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 20 << "\" height=\""
        << (rows + 2) * row_h + 20 << "\" font-family=\"monospace\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int c = 1; c <= rows; ++c)
        out << "<text x=\"4\" y=\"" << c * row_h + 12 << "\">cycle " << c << "</text>\n";
    for (const auto& r : sim.trace()) {
        if (r.tag.cycle < 1 || r.tag.cycle > rows)
            continue;
        const char* color = "#4a7fb5";
        switch (r.kind) {
        case TraceKind::Fireworks: color = "#333333"; break;
        case TraceKind::Execute: color = "#e0a030"; break;
        case TraceKind::Collision:
        case TraceKind::Fault:
        case TraceKind::Spurious: color = "#d03030"; break;
        default: break;
        }
        const SimTime offset = r.time - static_cast<SimTime>(r.tag.cycle - 1) * cycle;
        const double x = left + width * static_cast<double>(offset) / static_cast<double>(cycle);
        const double w = std::max(1.0, width * static_cast<double>(frame) / static_cast<double>(cycle));
        std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.1f\" width=\"%.2f\" height=\"%.1f\" fill=\"%s\"/>\n", x,
                      r.tag.cycle * row_h + 2, w, row_h - 4, color);
        out << buf;
    }
    out << "<text x=\"" << left << "\" y=\"" << (rows + 1) * row_h + 14 << "\">0</text>\n";
    out << "<text x=\"" << left + width - 40 << "\" y=\"" << (rows + 1) * row_h + 14 << "\">" << format_duration(cycle)
        << "</text>\n";
    out << "</svg>\n";
    if (!out)
        throw Error(ErrorCode::Io, "write failed: " + path);
}

int cmd_validate(const std::string& cfg)
{
    const ClusterSpec spec = load_spec(cfg);
    const ValidationReport report = validate_spec(spec);
    if (!report.issues.empty())
        std::cout << report.to_text();
    if (!report.ok())
        return kValidation;
    std::cout << cfg << ": ok, " << spec.nodes.size() << " nodes, " << spec.rodls.size() << " rounds\n";
    return kOk;
}

struct RunOptions {
    int cycles = 0;
    std::string duration;
    std::string trace;
    bool summary = false;
    std::string plot;
    std::string saturate;
};

int cmd_run(const std::string& cfg, const RunOptions& o)
{
    const ClusterSpec spec = load_spec(cfg);
    const BehaviorLibrary lib = BehaviorLibrary::standard();
    auto sim = build(spec, lib);
    const SimTime cycle = sim->master().schedule().cycle_duration;
    SimTime end = cycle * 10;
    if (!o.duration.empty())
        end = parse_duration(o.duration);
    else if (o.cycles > 0)
        end = cycle * o.cycles;

    std::vector<std::uint64_t> tickets;
    if (o.saturate.empty()) {
        sim->advance(end);
    } else {
        const IfsAddress a = parse_address(o.saturate);
        const MsRequest req{MsAction::Read, a.alias, a.file, a.record, Record{}};
        // Keep one request waiting at every master/slave round.
        for (SimTime t = 0; t < end; t = std::min(end, t + cycle)) {
            if (sim->master().idle())
                tickets.push_back(sim->enqueue(req));
            sim->advance(std::min(end, t + cycle));
        }
    }
    std::vector<MsCompletion> done;
    for (auto t : tickets)
        if (auto c = sim->master().completion(t))
            done.push_back(*c);

    const std::string trace = o.trace.empty() ? std::filesystem::path(cfg).stem().string() + ".trace" : o.trace;
    write_trace(*sim, trace);
    if (trace != "-")
        std::cerr << "trace: " << trace << "\n";
    if (!o.plot.empty())
        write_plot(*sim, o.plot);
    if (o.summary)
        print_summary(*sim, done);
    return kOk;
}

int cmd_baptize(const std::string& cfg, const std::string& trace)
{
    const ClusterSpec spec = load_spec(cfg);
    auto sim = build(spec, BehaviorLibrary::standard());
    Gateway gw(*sim);
    const BaptizeReport rep = gw.pnp().baptize();
    for (const auto& n : rep.nodes) {
        std::cout << "name=" << to_string(n.name) << ", ";
        if (n.alias)
            std::cout << "alias=" << int(*n.alias);
        else
            std::cout << "alias=- (" << n.failure << ")";
        std::cout << ", bit_probes=" << n.bit_probes << "\n";
    }
    std::cout << "nodes: " << rep.assigned().size() << ", presence probes: " << rep.presence_probes
              << ", register writes: " << rep.register_writes << ", cycles: " << sim->completed_cycles() << "\n";
    write_trace(*sim, trace);
    return rep.assigned().size() == rep.nodes.size() ? kOk : kRuntime;
}

int cmd_configure(const std::string& cfg, int cycles, const std::string& trace)
{
    const ClusterSpec spec = load_spec(cfg);
    if (spec.registry.empty())
        throw Error(ErrorCode::Configuration, cfg + ": [cluster] has no registry");
    auto sim = build(spec, BehaviorLibrary::standard());
    Gateway gw(*sim);
    const BaptizeReport rep = gw.pnp().baptize();
    int status = kOk;
    for (const auto& [name, alias] : rep.assigned()) {
        const Datasheet ds = fetch_datasheet(spec.registry_path(), name.series);
        gw.pnp().apply_configuration(ds, alias);
        std::cout << "alias=" << int(alias) << ", name=" << to_string(name) << ", datasheet=\"" << ds.description
                  << "\", configured at cycle " << sim->completed_cycles() << "\n";
    }
    for (const auto& n : rep.nodes)
        if (!n.alias) {
            std::cout << "not integrated: " << to_string(n.name) << " (" << n.failure << ")\n";
            status = kRuntime;
        }
    sim->run_cycles(cycles);
    const InterfaceFileSystem& ifs = sim->master().ifs();
    for (const auto& l : ifs.layout()) {
        if (l.name < sysfile::kFirstApplicationFile)
            continue;
        for (int r = 0; r < l.records; ++r) {
            if (!sim->master().mirrors(l.name, static_cast<std::uint8_t>(r)))
                continue;
            const RsValue v = sim->master().rs_value(l.name, static_cast<std::uint8_t>(r));
            char buf[96];
            std::snprintf(buf, sizeof buf, "rs %d:%d = 0x%08X", l.name, r, record_to_u32(v.value));
            std::cout << buf << (v.cycle ? ", cycle " + std::to_string(*v.cycle) : ", never received") << "\n";
        }
    }
    write_trace(*sim, trace);
    return status;
}

int cmd_dm(const std::string& cfg, const std::string& addr, const std::optional<std::string>& value, int after,
           const std::string& deadline)
{
    const ClusterSpec spec = load_spec(cfg);
    auto sim = build(spec, BehaviorLibrary::standard());
    sim->run_cycles(after);
    Gateway gw(*sim);
    ViewRequest req;
    req.address = parse_address(addr);
    if (value) {
        req.op = ViewOp::Write;
        req.payload = u32_to_record(static_cast<std::uint32_t>(std::stoul(*value, nullptr, 0)));
    }
    if (!deadline.empty())
        req.deadline = sim->now() + parse_duration(deadline);
    const DmResult r = gw.dm_request(req);
    std::cout << format_dm_result(r) << "\n";
    return kOk;
}

int cmd_cp_download(const std::string& cfg, int alias, int round, const std::vector<std::string>& entries, bool first_baptize)
{
    const ClusterSpec spec = load_spec(cfg);
    auto sim = build(spec, BehaviorLibrary::standard());
    Gateway gw(*sim);
    if (first_baptize)
        gw.pnp().baptize();
    std::vector<RodlEntry> list;
    for (const auto& text : entries) {
        std::istringstream in(text);
        std::string kind, fr, actor;
        int slot = 0, len = 1;
        if (!(in >> slot >> kind >> fr))
            throw Error(ErrorCode::Parse, "entry must be 'SLOT KIND FILE:RECORD [LEN] [ACTOR]': " + text);
        in >> len >> actor;
        const auto colon = fr.find(':');
        if (colon == std::string::npos)
            throw Error(ErrorCode::Parse, "expected FILE:RECORD in '" + text + "'");
        RodlEntry e;
        e.slot_index = slot;
        e.actor = actor.empty() ? static_cast<Alias>(alias) : actor == "M" ? kMasterAlias : static_cast<Alias>(std::stoi(actor));
        e.action = {parse_slot_kind(kind), static_cast<std::uint8_t>(std::stoi(fr.substr(0, colon))),
                    static_cast<std::uint8_t>(std::stoi(fr.substr(colon + 1))), len};
        list.push_back(e);
    }
    const auto& rodls = sim->master().rodls();
    auto it = rodls.find(static_cast<RoundId>(round));
    if (it == rodls.end())
        throw Error(ErrorCode::Validation, "round " + std::to_string(round) + " is not scheduled");
    const Rodl rodl = build_rodl(static_cast<RoundId>(round), list, it->second.round_length_slots);
    const int before = sim->completed_cycles();
    gw.cp_download_rodl(static_cast<Alias>(alias), rodl);
    std::cout << "ack: alias=" << alias << ", round=" << round << ", entries=" << list.size()
              << ", cycles=" << sim->completed_cycles() - before << "\n";
    return kOk;
}

int cmd_demo_robot(int cycles, bool overlap, std::string config, const std::string& trace)
{
    if (config.empty())
        config = std::string(TTSTN_CONFIG_DIR) + (overlap ? "/robot_overlap.cfg" : "/robot.cfg");
    const ClusterSpec spec = load_spec(config);
    auto sim = build(spec, BehaviorLibrary::standard());
    sim->run_cycles(cycles);
    const RobotReport report = check_robot(spec, *sim);
    std::cout << report.to_text();
    std::cout << "collisions: " << sim->stats().collisions << ", slot boundary violations: "
              << sim->stats().slot_boundary_violations << "\n";
    write_trace(*sim, trace);
    if (!report.ok()) {
        if (!report.windows_disjoint)
            std::cout << "FAILED: (a) ultrasonic windows overlap\n";
        if (!report.ir_paired)
            std::cout << "FAILED: (b) IR reading without matching servo position\n";
        if (!report.speed_constant)
            std::cout << "FAILED: (c) speed loop delay jitter\n";
        return kRuntime;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Smart transducer network simulator"};
    app.require_subcommand(1);

    std::string cfg;
    auto* validate = app.add_subcommand("validate", "Check a cluster configuration");
    validate->add_option("config", cfg, "Cluster configuration file")->required();

    RunOptions ro;
    auto* run = app.add_subcommand("run", "Simulate a cluster and write the bus trace");
    run->add_option("config", cfg, "Cluster configuration file")->required();
    auto* cycles_opt = run->add_option("--cycles", ro.cycles, "Number of cluster cycles")->check(CLI::PositiveNumber);
    run->add_option("--duration", ro.duration, "Simulated time, e.g. 300ms")->excludes(cycles_opt);
    run->add_option("--trace", ro.trace, "Trace output path ('-' for stdout, default <config>.trace)");
    run->add_flag("--summary", ro.summary, "Print slot occupancy, collisions and DM latencies");
    run->add_option("--plot", ro.plot, "Write a slot-occupancy timeline as SVG");
    run->add_option("--saturate", ro.saturate, "Keep one DM read of ALIAS:FILE:RECORD always queued");

    std::string trace;
    auto* bap = app.add_subcommand("baptize", "Discover and name unbaptized nodes");
    bap->add_option("config", cfg, "Cluster configuration file")->required();
    bap->add_option("--trace", trace, "Trace output path");

    int conf_cycles = 3;
    auto* conf = app.add_subcommand("configure", "Baptize, then download each node's datasheet configuration");
    conf->add_option("config", cfg, "Cluster configuration file")->required();
    conf->add_option("--cycles", conf_cycles, "Cycles to run after configuration")->check(CLI::NonNegativeNumber);
    conf->add_option("--trace", trace, "Trace output path");

    std::string addr, value, deadline;
    int after = 1;
    auto* dmr = app.add_subcommand("dm-read", "Read one IFS record through the diagnostic view");
    dmr->add_option("config", cfg, "Cluster configuration file")->required();
    dmr->add_option("address", addr, "ALIAS:FILE:RECORD or packed address")->required();
    dmr->add_option("--after", after, "Cycles to run before the request")->check(CLI::NonNegativeNumber);
    dmr->add_option("--deadline", deadline, "Relative deadline, e.g. 50ms");

    auto* dmw = app.add_subcommand("dm-write", "Write one IFS record through the diagnostic view");
    dmw->add_option("config", cfg, "Cluster configuration file")->required();
    dmw->add_option("address", addr, "ALIAS:FILE:RECORD or packed address")->required();
    dmw->add_option("value", value, "32-bit value")->required();
    dmw->add_option("--after", after, "Cycles to run before the request")->check(CLI::NonNegativeNumber);
    dmw->add_option("--deadline", deadline, "Relative deadline, e.g. 50ms");

    int alias = 0, round = 0;
    bool first_baptize = false;
    std::vector<std::string> entries;
    auto* cp = app.add_subcommand("cp-download", "Download RODL entries to a node");
    cp->add_option("config", cfg, "Cluster configuration file")->required();
    cp->add_option("alias", alias, "Target alias")->required();
    cp->add_option("--round", round, "Round id");
    cp->add_option("--entry", entries, "'SLOT KIND FILE:RECORD [LEN] [ACTOR]'")->required();
    cp->add_flag("--baptize", first_baptize, "Baptize new nodes first");

    int demo_cycles = 1000;
    bool overlap = false;
    std::string demo_config;
    auto* demo = app.add_subcommand("demo", "Shipped demonstrations");
    demo->require_subcommand(1);
    auto* robot = demo->add_subcommand("robot", "Robot cluster coordination checks");
    robot->add_option("--cycles", demo_cycles, "Cycles to simulate")->check(CLI::PositiveNumber);
    robot->add_flag("--overlap", overlap, "Use the variant with overlapping ultrasonic windows");
    robot->add_option("--config", demo_config, "Robot configuration file");
    robot->add_option("--trace", trace, "Trace output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate)
            return cmd_validate(cfg);
        if (*run)
            return cmd_run(cfg, ro);
        if (*bap)
            return cmd_baptize(cfg, trace);
        if (*conf)
            return cmd_configure(cfg, conf_cycles, trace);
        if (*dmr)
            return cmd_dm(cfg, addr, std::nullopt, after, deadline);
        if (*dmw)
            return cmd_dm(cfg, addr, value, after, deadline);
        if (*cp)
            return cmd_cp_download(cfg, alias, round, entries, first_baptize);
        if (*robot)
            return cmd_demo_robot(demo_cycles, overlap, demo_config, trace);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kOk;
}
