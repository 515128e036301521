#include "ttstn/config.hpp"

#include "ttstn/error.hpp"
#include "ttstn/node_config.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace ttstn {

std::filesystem::path ClusterSpec::registry_path() const
{
    if (registry.empty())
        return {};
    std::filesystem::path p(registry);
    return p.is_absolute() ? p : base_dir / p;
}

const NodeSpec* ClusterSpec::find_node(const std::string& n) const
{
    for (const auto& node : nodes)
        if (node.name == n)
            return &node;
    return nullptr;
}

namespace {

ValidationIssue err(std::string code, std::string message, std::optional<int> round = std::nullopt,
                    std::optional<int> slot = std::nullopt)
{
    return {Severity::Error, std::move(code), std::move(message), round, slot};
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(std::string_view s)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w)
        out.push_back(w);
    return out;
}

class Parser {
public:
    Parser(std::string origin, int line) : origin_(std::move(origin)), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error(ErrorCode::Parse, origin_ + ":" + std::to_string(line_) + ": " + msg);
    }

    long long integer(const std::string& text, long long lo, long long hi, const std::string& what) const
    {
        long long v = 0;
        try {
            std::size_t used = 0;
            v = std::stoll(text, &used, 0);
            if (used != text.size())
                fail(what + " is not an integer: '" + text + "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail(what + " is not an integer: '" + text + "'");
        }
        if (v < lo || v > hi)
            fail(what + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]: " + text);
        return v;
    }

    double real(const std::string& text, const std::string& what) const
    {
        try {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            if (used == text.size())
                return v;
        } catch (const std::exception&) {
        }
        fail(what + " is not a number: '" + text + "'");
    }

    SimTime duration(const std::string& text, const std::string& what) const
    {
        try {
            return parse_duration(text);
        } catch (const Error& e) {
            fail(what + ": " + e.what());
        }
    }

    std::pair<std::uint8_t, int> file_record(const std::string& text) const
    {
        const auto colon = text.find(':');
        if (colon == std::string::npos)
            fail("expected FILE:RECORD, got '" + text + "'");
        const auto f = integer(text.substr(0, colon), 0, kMaxFiles - 1, "file");
        const auto r = integer(text.substr(colon + 1), 0, kMaxRecords - 1, "record");
        return {static_cast<std::uint8_t>(f), static_cast<int>(r)};
    }

    FileLayout file_layout(const std::string& text) const
    {
        // name:records[:section]
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : text) {
            if (ch == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        parts.push_back(cur);
        if (parts.size() < 2 || parts.size() > 3)
            fail("expected FILE:RECORDS[:SECTION], got '" + text + "'");
        FileLayout l;
        l.name = static_cast<std::uint8_t>(integer(parts[0], 0, kMaxFiles - 1, "file"));
        l.records = static_cast<int>(integer(parts[1], 1, kMaxRecords, "record count"));
        if (parts.size() == 3) {
            try {
                l.section = parse_section(parts[2]);
            } catch (const Error& e) {
                fail(e.what());
            }
        }
        return l;
    }

    Record record_value(const std::string& text) const
    {
        const auto v = integer(text, 0, 0xFFFFFFFFll, "record value");
        return u32_to_record(static_cast<std::uint32_t>(v));
    }

    int line() const { return line_; }

private:
    std::string origin_;
    int line_;
};

// "action k=v ..." -> (action, params)
std::pair<std::string, ActionParams> action_of(const Parser& p, const std::string& value)
{
    const auto ws = words(value);
    if (ws.empty())
        p.fail("missing action name");
    std::string rest;
    for (std::size_t i = 1; i < ws.size(); ++i)
        rest += ws[i] + " ";
    try {
        return {ws[0], ActionParams::parse(rest)};
    } catch (const Error& e) {
        p.fail(e.what());
    }
}

bool node_key(const Parser& p, NodeSpec& node, const std::vector<std::string>& key, const std::string& value,
              bool is_master)
{
    const std::string& k = key[0];
    if (k == "files" && key.size() == 1) {
        for (const auto& w : words(value))
            node.files.push_back(p.file_layout(w));
    } else if (k == "series" && key.size() == 1) {
        node.physical.series = static_cast<std::uint32_t>(p.integer(value, 0, 0xFFFFFFFFll, "series"));
    } else if (k == "serial" && key.size() == 1) {
        node.physical.serial = static_cast<std::uint32_t>(p.integer(value, 0, 0xFFFFFFFFll, "serial"));
    } else if (k == "execute" && key.size() == 2) {
        auto [f, r] = p.file_record(key[1]);
        auto [action, params] = action_of(p, value);
        node.executes.push_back({f, r, action, params, p.line()});
    } else if (k == "record" && key.size() == 2) {
        auto [f, r] = p.file_record(key[1]);
        node.records.push_back({f, r, p.record_value(value), p.line()});
    } else if (k == "task" && key.size() >= 2) {
        TaskSpec t;
        t.line = p.line();
        if (key[1] == "every") {
            if (key.size() != 3 && key.size() != 5)
                p.fail("expected 'task every PERIOD [phase OFFSET] = action'");
            PeriodTrigger pt;
            pt.period = p.duration(key[2], "period");
            if (pt.period <= 0)
                p.fail("task period must be positive");
            if (key.size() == 5) {
                if (key[3] != "phase")
                    p.fail("expected 'phase' after the period");
                pt.phase = p.duration(key[4], "phase");
            }
            t.trigger = pt;
        } else {
            if (key.size() != 2)
                p.fail("expected 'task ROUND:SLOT = action'");
            const auto colon = key[1].find(':');
            if (colon == std::string::npos)
                p.fail("expected ROUND:SLOT, got '" + key[1] + "'");
            SlotTrigger st;
            st.round = static_cast<RoundId>(p.integer(key[1].substr(0, colon), 0, kRoundIdCount - 1, "round"));
            st.slot = static_cast<int>(p.integer(key[1].substr(colon + 1), 0, kMaxRoundSlots, "slot"));
            t.trigger = st;
        }
        auto [action, params] = action_of(p, value);
        t.action = action;
        t.params = params;
        node.tasks.push_back(std::move(t));
    } else if (!is_master && k == "alias" && key.size() == 1) {
        node.alias = static_cast<Alias>(p.integer(value, 0, 255, "alias"));
    } else if (!is_master && k == "unbaptized" && key.size() == 1) {
        if (value == "true")
            node.alias.reset();
        else if (value != "false")
            p.fail("unbaptized must be true or false");
    } else if (!is_master && k == "drift" && key.size() == 1) {
        if (value == "random")
            node.random_drift = true;
        else
            node.drift = p.real(value, "drift");
    } else {
        return false;
    }
    return true;
}

FaultSpec parse_fault(const Parser& p, const std::string& value)
{
    const auto ws = words(value);
    if (ws.empty())
        p.fail("empty fault");
    FaultSpec f;
    std::size_t i = 1;
    if (ws[0] == "bitflip") {
        f.effect = FaultSpec::Effect::BitFlip;
        if (ws.size() < 2)
            p.fail("bitflip needs a bit index");
        f.bit = static_cast<int>(p.integer(ws[1], 0, 7, "bit"));
        i = 2;
    } else if (ws[0] == "drop") {
        f.effect = FaultSpec::Effect::Drop;
    } else if (ws[0] == "spurious") {
        f.effect = FaultSpec::Effect::Spurious;
        if (ws.size() < 2)
            p.fail("spurious needs a byte value");
        f.octet = static_cast<std::uint8_t>(p.integer(ws[1], 0, 255, "octet"));
        i = 2;
    } else {
        p.fail("unknown fault effect '" + ws[0] + "'");
    }
    if (ws.size() != i + 2)
        p.fail("expected 'at TIME' or 'slot CYCLE:ROUND:SLOT'");
    if (ws[i] == "at") {
        f.at = p.duration(ws[i + 1], "fault time");
    } else if (ws[i] == "slot") {
        const auto& s = ws[i + 1];
        const auto a = s.find(':');
        const auto b = a == std::string::npos ? a : s.find(':', a + 1);
        if (b == std::string::npos)
            p.fail("expected CYCLE:ROUND:SLOT, got '" + s + "'");
        SlotRef ref;
        ref.cycle = static_cast<int>(p.integer(s.substr(0, a), 1, 1 << 30, "cycle"));
        ref.round = static_cast<int>(p.integer(s.substr(a + 1, b - a - 1), 0, kRoundIdCount - 1, "round"));
        ref.slot = static_cast<int>(p.integer(s.substr(b + 1), 0, kMaxRoundSlots, "slot"));
        f.slot = ref;
    } else {
        p.fail("expected 'at' or 'slot', got '" + ws[i] + "'");
    }
    return f;
}

}  // namespace

ClusterSpec parse_spec(std::string_view text, const std::string& origin, const std::filesystem::path& base_dir)
{
    ClusterSpec spec;
    spec.origin = origin;
    spec.base_dir = base_dir;
    spec.master.name = "M";
    spec.master.physical = SimOptions{}.master_name;

    enum class Section { None, Cluster, Master, Node, Rodl, Faults } section = Section::None;
    NodeSpec* node = nullptr;
    RodlSpec* rodl = nullptr;
    bool have_cycle = false;
    std::set<std::string> names{"M"};
    std::set<int> rodl_ids;

    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        Parser p(origin, lineno);
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                p.fail("unterminated section header");
            const auto head = words(line.substr(1, line.size() - 2));
            if (head.empty())
                p.fail("empty section header");
            node = nullptr;
            rodl = nullptr;
            if (head[0] == "cluster" && head.size() == 1) {
                section = Section::Cluster;
            } else if (head[0] == "master" && head.size() == 1) {
                section = Section::Master;
                spec.master.line = lineno;
            } else if (head[0] == "node" && head.size() == 2) {
                if (!names.insert(head[1]).second)
                    p.fail("duplicate node name '" + head[1] + "'");
                section = Section::Node;
                spec.nodes.push_back({});
                node = &spec.nodes.back();
                node->name = head[1];
                node->line = lineno;
                node->physical.serial = static_cast<std::uint32_t>(spec.nodes.size());
            } else if (head[0] == "rodl" && head.size() == 2) {
                section = Section::Rodl;
                const int id = static_cast<int>(p.integer(head[1], 0, kRoundIdCount - 1, "round id"));
                if (!is_mp_round(id))
                    p.fail("round ids 6 and 7 are reserved for master/slave rounds");
                if (!rodl_ids.insert(id).second)
                    p.fail("round " + head[1] + " defined twice");
                spec.rodls.push_back({});
                rodl = &spec.rodls.back();
                rodl->id = static_cast<RoundId>(id);
                rodl->line = lineno;
            } else if (head[0] == "faults" && head.size() == 1) {
                section = Section::Faults;
            } else {
                p.fail("unknown section '" + line + "'");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            p.fail("expected 'key = value'");
        const auto key = words(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            p.fail("missing key");

        switch (section) {
        case Section::None:
            p.fail("key outside of a section");
        case Section::Cluster: {
            const std::string& k = key[0];
            if (key.size() != 1)
                p.fail("unknown cluster key '" + trim(line.substr(0, eq)) + "'");
            if (k == "name") spec.name = value;
            else if (k == "baud") spec.baud = p.integer(value, 1, 10'000'000, "baud");
            else if (k == "cycle") { spec.cycle = p.duration(value, "cycle"); have_cycle = true; }
            else if (k == "ms_interleave") spec.ms_interleave = static_cast<int>(p.integer(value, 1, 64, "ms_interleave"));
            else if (k == "rho_max") spec.rho_max = p.real(value, "rho_max");
            else if (k == "seed") spec.seed = static_cast<std::uint64_t>(p.integer(value, 0, std::numeric_limits<long long>::max(), "seed"));
            else if (k == "registry") spec.registry = value;
            else if (k == "drift") {
                if (value != "random" && value != "0")
                    p.fail("cluster drift must be 'random' or 0");
                spec.random_drift = value == "random";
            } else if (k == "rounds") {
                for (const auto& w : words(value)) {
                    const int id = static_cast<int>(p.integer(w, 0, kMaxMpRoundId, "round id"));
                    spec.round_order.push_back(static_cast<RoundId>(id));
                }
            } else {
                p.fail("unknown cluster key '" + k + "'");
            }
            break;
        }
        case Section::Master:
            if (!node_key(p, spec.master, key, value, true))
                p.fail("unknown master key '" + trim(line.substr(0, eq)) + "'");
            break;
        case Section::Node:
            if (!node_key(p, *node, key, value, false))
                p.fail("unknown node key '" + trim(line.substr(0, eq)) + "'");
            break;
        case Section::Rodl:
            if (key.size() == 1 && key[0] == "length") {
                rodl->length = static_cast<int>(p.integer(value, 1, kMaxRoundSlots, "round length"));
            } else if (key.size() == 1 && key[0] == "entry") {
                const auto ws = words(value);
                if (ws.size() < 3 || ws.size() > 5)
                    p.fail("expected 'entry = SLOT ACTOR ACTION [FILE:RECORD] [LENGTH]'");
                RodlEntrySpec e;
                e.line = lineno;
                e.slot = static_cast<int>(p.integer(ws[0], 0, kMaxRoundSlots, "slot"));
                e.actor = ws[1];
                try {
                    e.kind = parse_slot_kind(ws[2]);
                } catch (const Error& err) {
                    p.fail(err.what());
                }
                if (e.kind != SlotKind::Idle) {
                    if (ws.size() < 4)
                        p.fail("missing FILE:RECORD");
                    auto [f, r] = p.file_record(ws[3]);
                    e.file = f;
                    e.record = r;
                }
                if (ws.size() == 5)
                    e.length = static_cast<int>(p.integer(ws[4], 1, kMaxRoundSlots, "length"));
                rodl->entries.push_back(e);
            } else {
                p.fail("unknown rodl key '" + trim(line.substr(0, eq)) + "'");
            }
            break;
        case Section::Faults:
            if (key.size() != 1 || key[0] != "fault")
                p.fail("expected 'fault = ...'");
            spec.faults.push_back(parse_fault(p, value));
            break;
        }
    }
    if (!have_cycle)
        throw Error(ErrorCode::Parse, origin + ": [cluster] needs a cycle duration");
    if (spec.rodls.empty())
        throw Error(ErrorCode::Parse, origin + ": at least one [rodl N] section is required");
    return spec;
}

ClusterSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str(), path.string(), path.parent_path());
}

double drawn_drift(std::uint64_t seed, std::size_t node_index, double rho_max)
{
    std::mt19937_64 gen(seed * 0x9E3779B97F4A7C15ull + node_index);
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * rho_max;
}

namespace {

NodeView view_of(const NodeSpec& n, std::optional<Alias> alias, ValidationReport& report, const std::string& origin)
{
    NodeView v;
    v.name = n.name;
    v.alias = alias;
    InterfaceFileSystem ifs;
    for (const auto& f : n.files) {
        try {
            ifs.add_file(f);
        } catch (const Error& e) {
            report.issues.push_back(err("duplicate-file",
                                     origin + ":" + std::to_string(n.line) + ": " + n.name + ": " + e.what()));
        }
    }
    v.files = ifs.layout();
    for (const auto& x : n.executes) {
        v.executable.push_back({x.file, static_cast<std::uint8_t>(x.record)});
        if (!ifs.has_record(x.file, x.record))
            report.issues.push_back(err("dangling-reference",
                                     origin + ":" + std::to_string(x.line) + ": " + n.name + " binds execute to missing record " +
                                         std::to_string(x.file) + ":" + std::to_string(x.record)));
        if (x.params.has("group") && x.params.has("window")) {
            try {
                v.windows.push_back({x.file, static_cast<std::uint8_t>(x.record), x.params.get("group"),
                                     parse_duration(x.params.get("window"))});
            } catch (const Error& e) {
                report.issues.push_back(err("window",
                                         origin + ":" + std::to_string(x.line) + ": " + e.what()));
            }
        }
    }
    for (const auto& r : n.records)
        if (!ifs.has_record(r.file, r.record))
            report.issues.push_back(err("dangling-reference",
                                     origin + ":" + std::to_string(r.line) + ": " + n.name + " initialises missing record " +
                                         std::to_string(r.file) + ":" + std::to_string(r.record)));
    return v;
}

}  // namespace

ResolvedCluster resolve_spec(const ClusterSpec& spec)
{
    ResolvedCluster rc;
    auto& report = rc.report;
    const std::string& origin = spec.origin;
    auto at = [&](int line) { return origin + ":" + std::to_string(line) + ": "; };

    try {
        rc.timing = BusTiming::for_baud(spec.baud);
    } catch (const Error& e) {
        report.issues.push_back(err("baud", e.what()));
        return rc;
    }

    for (const auto& n : spec.nodes)
        if (n.alias)
            rc.aliases[n.name] = *n.alias;

    auto actor_alias = [&](const RodlEntrySpec& e) -> std::optional<int> {
        if (e.actor == "M" || e.actor == "master")
            return kMasterAlias;
        auto it = rc.aliases.find(e.actor);
        if (it != rc.aliases.end())
            return it->second;
        if (const NodeSpec* n = spec.find_node(e.actor); n && !n->alias) {
            report.issues.push_back(err("unbaptized-actor",
                                     at(e.line) + "node " + e.actor + " is unbaptized and cannot act in a round"));
            return std::nullopt;
        }
        try {
            std::size_t used = 0;
            const int v = std::stoi(e.actor, &used, 0);
            if (used == e.actor.size() && v >= 0 && v <= 255)
                return v;
        } catch (const std::exception&) {
        }
        report.issues.push_back(err("unknown-actor", at(e.line) + "unknown actor '" + e.actor + "'"));
        return std::nullopt;
    };

    std::vector<Rodl> rodls;
    for (const auto& rs : spec.rodls) {
        std::vector<RodlEntry> entries;
        int needed = 1;
        for (const auto& e : rs.entries) {
            auto a = actor_alias(e);
            if (!a)
                continue;
            if (e.slot < 1)
                report.issues.push_back(err("slot-index", at(e.line) + "slot 0 carries the fireworks byte",
                                         rs.id, e.slot));
            if (e.kind == SlotKind::Execute && e.length != 1)
                report.issues.push_back(err("execute-length", at(e.line) + "execute occupies one slot",
                                         rs.id, e.slot));
            RodlEntry re{e.slot, static_cast<Alias>(*a), {e.kind, e.file, static_cast<std::uint8_t>(e.record), e.length}};
            needed = std::max(needed, re.last_slot() + 1);
            entries.push_back(re);
        }
        Rodl r;
        r.round_id = rs.id;
        r.round_length_slots = rs.length.value_or(needed);
        std::stable_sort(entries.begin(), entries.end(),
                         [](const RodlEntry& x, const RodlEntry& y) { return x.slot_index < y.slot_index; });
        r.entries = std::move(entries);
        rodls.push_back(r);
        rc.rodls[r.round_id] = r;
    }

    std::vector<Rodl> ordered;
    if (spec.round_order.empty()) {
        for (const auto& [_, r] : rc.rodls)
            ordered.push_back(r);
    } else {
        for (RoundId id : spec.round_order) {
            auto it = rc.rodls.find(id);
            if (it == rc.rodls.end())
                report.issues.push_back(err("schedule", "rounds lists undefined round " + std::to_string(id)));
            else
                ordered.push_back(it->second);
        }
    }

    rc.view.timing = rc.timing;
    for (const auto& n : spec.nodes)
        rc.view.nodes.push_back(view_of(n, n.alias, report, origin));
    rc.view.nodes.push_back(view_of(spec.master, kMasterAlias, report, origin));

    if (!ordered.empty()) {
        try {
            rc.schedule = recommended_schedule(ordered, spec.ms_interleave, spec.cycle, rc.timing);
            rc.view.schedule = rc.schedule;
        } catch (const Error& e) {
            report.issues.push_back(err(e.code() == ErrorCode::Overflow ? "cycle-overflow" : "schedule",
                                     e.what()));
            rc.schedule.cycle_duration = spec.cycle;
        }
    }

    ValidationReport sched = validate_schedule(rodls, rc.view);
    // Anchor slot-level findings to the entry that produced them.
    for (auto& issue : sched.issues) {
        if (issue.round && issue.slot) {
            for (const auto& rs : spec.rodls) {
                if (rs.id != *issue.round)
                    continue;
                const RodlEntrySpec* hit = nullptr;
                for (const auto& e : rs.entries)
                    if (*issue.slot >= e.slot && *issue.slot < e.slot + e.length)
                        hit = &e;  // the later entry is the one that conflicts
                if (hit) {
                    issue.message = at(hit->line) + issue.message;
                    break;
                }
            }
        }
        report.issues.push_back(issue);
    }

    // Tasks must name a scheduled round and a slot inside it.
    auto check_tasks = [&](const NodeSpec& n) {
        for (const auto& t : n.tasks) {
            const auto* st = std::get_if<SlotTrigger>(&t.trigger);
            if (!st)
                continue;
            const auto& seq = rc.schedule.sequence;
            if (std::find(seq.begin(), seq.end(), st->round) == seq.end()) {
                report.issues.push_back(err("task-trigger",
                                         at(t.line) + "task on " + n.name + " references unscheduled round " +
                                             std::to_string(st->round)));
                continue;
            }
            const int len = is_ms_round(st->round) ? kMsRoundSlots : rc.rodls.at(st->round).round_length_slots;
            if (st->slot >= len)
                report.issues.push_back(err("task-trigger",
                                         at(t.line) + "task on " + n.name + " references slot " +
                                             std::to_string(st->slot) + " beyond round length " + std::to_string(len)));
        }
    };
    check_tasks(spec.master);
    for (const auto& n : spec.nodes)
        check_tasks(n);

    if (spec.rho_max < 0 || spec.rho_max >= 1)
        report.issues.push_back(err("rho-max", "rho_max must be in [0, 1)"));
    for (const auto& n : spec.nodes)
        if (n.drift && std::abs(*n.drift) > spec.rho_max)
            report.issues.push_back(err("drift",
                                     at(n.line) + "drift of " + n.name + " exceeds rho_max"));
    return rc;
}

ValidationReport validate_spec(const ClusterSpec& spec) { return resolve_spec(spec).report; }

namespace {

void populate(Node& node, const NodeSpec& spec, const BehaviorLibrary& behaviors)
{
    for (const auto& f : spec.files)
        node.ifs().add_file(f);
    for (const auto& r : spec.records)
        node.ifs().push(r.file, r.record, r.value);
    for (const auto& x : spec.executes) {
        BehaviorContext ctx{spec.name, x.file, x.record, x.params, nullptr};
        node.bind_execute(x.file, x.record, x.action, behaviors.make_execute(x.action, ctx));
    }
}

}  // namespace

std::unique_ptr<Simulator> build_simulator(const ClusterSpec& spec, const BehaviorLibrary& behaviors)
{
    ResolvedCluster rc = resolve_spec(spec);
    if (!rc.report.ok())
        throw Error(ErrorCode::Validation, rc.report.to_text());

    SimOptions options;
    options.rho_max = spec.rho_max;
    options.master_name = spec.master.physical;
    auto sim = std::make_unique<Simulator>(rc.timing, rc.schedule, rc.rodls, options);

    populate(sim->master(), spec.master, behaviors);
    std::vector<Rodl> rodl_list;
    for (const auto& [_, r] : rc.rodls)
        rodl_list.push_back(r);

    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const NodeSpec& n = spec.nodes[i];
        SlaveMachine& s = sim->add_slave(n.name, n.physical, n.alias);
        populate(s, n, behaviors);
        if (n.alias)
            s.install_configuration(configuration_for(*n.alias, rodl_list, rc.schedule));
        double rho = n.drift.value_or(0.0);
        if (n.random_drift || (!n.drift && spec.random_drift))
            rho = drawn_drift(spec.seed, i, spec.rho_max);
        s.clock().set_rho(rho, spec.rho_max);
    }

    auto bind = [&](const NodeSpec& n) {
        for (const auto& t : n.tasks) {
            BehaviorContext ctx{n.name, 0, 0, t.params, nullptr};
            sim->bind_task(n.name, {t.action, t.trigger, behaviors.make_task(t.action, ctx)});
        }
    };
    bind(spec.master);
    for (const auto& n : spec.nodes)
        bind(n);

    for (const auto& f : spec.faults)
        sim->inject_fault(f);
    return sim;
}

}  // namespace ttstn
