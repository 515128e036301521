#include "ttstn/pnp.hpp"

#include "ttstn/error.hpp"
#include "ttstn/master.hpp"
#include "ttstn/node_config.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cstdio>
#include <fstream>

namespace ttstn {

namespace pt = boost::property_tree;

namespace {

long long number(const pt::ptree& node, const std::string& attr, const std::string& where)
{
    const auto text = node.get_optional<std::string>("<xmlattr>." + attr);
    if (!text)
        throw Error(ErrorCode::Validation, where + ": missing attribute '" + attr + "'");
    try {
        std::size_t used = 0;
        const long long v = std::stoll(*text, &used, 0);
        if (used == text->size())
            return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::Validation, where + ": attribute '" + attr + "' is not a number: '" + *text + "'");
}

}  // namespace

Datasheet parse_datasheet(std::istream& in, const std::string& origin)
{
    pt::ptree tree;
    try {
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw Error(ErrorCode::Parse, origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    const auto root = tree.get_child_optional("datasheet");
    if (!root)
        throw Error(ErrorCode::Parse, origin + ": root element must be <datasheet>");

    Datasheet ds;
    const long long series = number(*root, "series", origin);
    if (series < 0 || series > 0xFFFFFFFFll)
        throw Error(ErrorCode::Validation, origin + ": series out of range");
    ds.series = static_cast<std::uint32_t>(series);
    ds.description = root->get("description", "");

    std::set<std::uint8_t> declared{sysfile::kConfiguration, sysfile::kDocumentation, sysfile::kMembership};
    if (const auto files = root->get_child_optional("files")) {
        int i = 0;
        for (const auto& [tag, f] : *files) {
            if (tag != "file")
                continue;
            const std::string where = origin + ": files/file[" + std::to_string(++i) + "]";
            FileLayout l;
            const long long name = number(f, "name", where);
            const long long records = number(f, "records", where);
            if (name < sysfile::kFirstApplicationFile || name >= kMaxFiles)
                throw Error(ErrorCode::Validation, where + ": file " + std::to_string(name) + " outside 3..63");
            if (records < 1 || records > kMaxRecords)
                throw Error(ErrorCode::Validation, where + ": record count out of range");
            l.name = static_cast<std::uint8_t>(name);
            l.records = static_cast<int>(records);
            try {
                l.section = parse_section(f.get("<xmlattr>.section", "RS"));
            } catch (const Error& e) {
                throw Error(ErrorCode::Validation, where + ": " + e.what());
            }
            if (!declared.insert(l.name).second)
                throw Error(ErrorCode::Validation, where + ": file declared twice");
            ds.transducer_description_part.push_back(l);
        }
    }

    if (const auto cfg = root->get_child_optional("clusterConfig")) {
        int i = 0;
        for (const auto& [tag, r] : *cfg) {
            if (tag != "rodl")
                continue;
            const std::string where = origin + ": clusterConfig/rodl[" + std::to_string(++i) + "]";
            DatasheetEntry e;
            const long long round = number(r, "round", where);
            if (!is_mp_round(static_cast<int>(round)))
                throw Error(ErrorCode::Validation, where + ": round must be 0..5");
            e.round = static_cast<RoundId>(round);
            const long long slot = number(r, "slot", where);
            if (slot < 1 || slot > kMaxRoundSlots)
                throw Error(ErrorCode::Validation, where + ": slot out of range");
            e.slot = static_cast<int>(slot);
            e.actor = r.get("<xmlattr>.actor", "self");
            try {
                e.action.kind = parse_slot_kind(r.get("<xmlattr>.action", ""));
            } catch (const Error& err) {
                throw Error(ErrorCode::Validation, where + ": " + err.what());
            }
            const long long file = number(r, "file", where);
            if (file < 0 || file >= kMaxFiles)
                throw Error(ErrorCode::Validation, where + ": file " + std::to_string(file) + " out of range");
            const long long record = r.get_optional<std::string>("<xmlattr>.record") ? number(r, "record", where) : 0;
            if (record < 0 || record >= kMaxRecords)
                throw Error(ErrorCode::Validation, where + ": record out of range");
            const long long len = r.get_optional<std::string>("<xmlattr>.len") ? number(r, "len", where) : 1;
            if (len < 1 || len > 4)
                throw Error(ErrorCode::Validation, where + ": len must be 1..4");
            if (e.actor == "self" && !declared.count(static_cast<std::uint8_t>(file)))
                throw Error(ErrorCode::Validation, where + ": file " + std::to_string(file) + " is not declared");
            e.action.file = static_cast<std::uint8_t>(file);
            e.action.record = static_cast<std::uint8_t>(record);
            e.action.length_slots = static_cast<int>(len);
            ds.cluster_config_part.push_back(e);
        }
    }
    return ds;
}

std::filesystem::path datasheet_path(const std::filesystem::path& registry, std::uint32_t series)
{
    char name[16];
    std::snprintf(name, sizeof name, "%08X.xml", series);
    return registry / name;
}

Datasheet fetch_datasheet(const std::filesystem::path& registry, std::uint32_t series)
{
    const auto path = datasheet_path(registry, series);
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::UnknownSeries, "no datasheet for series " + path.stem().string() + " in " + registry.string());
    Datasheet ds = parse_datasheet(in, path.string());
    if (ds.series != series)
        throw Error(ErrorCode::Validation, path.string() + ": document declares a different series");
    return ds;
}

std::vector<std::pair<PhysicalName, Alias>> BaptizeReport::assigned() const
{
    std::vector<std::pair<PhysicalName, Alias>> out;
    for (const auto& n : nodes)
        if (n.alias)
            out.emplace_back(n.name, *n.alias);
    return out;
}

PlugAndPlay::PlugAndPlay(Simulator& sim) : sim_(sim)
{
    for (const auto& [_, rodl] : sim.master().rodls())
        for (const auto& e : rodl.entries)
            if (is_node_alias(e.actor))
                in_use_.insert(e.actor);
}

PlugAndPlay::PlugAndPlay(Simulator& sim, std::set<Alias> in_use) : sim_(sim), in_use_(std::move(in_use)) {}

std::optional<Alias> PlugAndPlay::lowest_free() const
{
    for (int a = kFirstNodeAlias; a <= kLastNodeAlias; ++a)
        if (!in_use_.count(static_cast<Alias>(a)))
            return static_cast<Alias>(a);
    return std::nullopt;
}

MsCompletion PlugAndPlay::transact(const MsRequest& request)
{
    return sim_.await(sim_.enqueue(request), timeout_cycles_);
}

void PlugAndPlay::set_register(std::uint64_t value, int* writes)
{
    const auto hi = static_cast<std::uint32_t>(value >> 32);
    const auto lo = static_cast<std::uint32_t>(value);
    const bool first = !register_;
    if (first || static_cast<std::uint32_t>(*register_ >> 32) != hi) {
        transact({MsAction::Write, kBroadcastAlias, sysfile::kMembership, sysfile::kSearchHighRecord, u32_to_record(hi)});
        if (writes)
            ++*writes;
    }
    if (first || static_cast<std::uint32_t>(*register_) != lo) {
        transact({MsAction::Write, kBroadcastAlias, sysfile::kMembership, sysfile::kSearchLowRecord, u32_to_record(lo)});
        if (writes)
            ++*writes;
    }
    register_ = value;
}

bool PlugAndPlay::probe(int k, std::uint64_t prefix)
{
    if (k < 0 || k > 64)
        throw Error(ErrorCode::Validation, "probe prefix length must be 0..64");
    if (k > 0)
        set_register(k == 64 ? prefix : prefix << (64 - k));
    ++probes_;
    const MsCompletion c = transact({MsAction::Probe, kBroadcastAlias, sysfile::kMembership,
                                     static_cast<std::uint8_t>(k), Record{}});
    return c.response;
}

BaptizeReport PlugAndPlay::baptize()
{
    BaptizeReport report;
    std::set<std::uint64_t> abandoned;
    for (;;) {
        ++report.presence_probes;
        if (!probe(0, 0))
            break;
        Identification id;
        std::uint64_t prefix = 0;
        for (int level = 0; level < 64; ++level) {
            const std::uint64_t child = prefix << 1;
            set_register(level == 63 ? child : child << (63 - level), &report.register_writes);
            ++probes_;
            ++id.bit_probes;
            const MsCompletion c = transact({MsAction::Probe, kBroadcastAlias, sysfile::kMembership,
                                             static_cast<std::uint8_t>(level + 1), Record{}});
            prefix = c.response ? child : child | 1;
        }
        report.bit_probes += id.bit_probes;
        id.name = PhysicalName::from_value(prefix);
        if (abandoned.count(prefix)) {
            // The same dead end again: whatever answers the presence probe never
            // completes an assignment, so stop rather than loop.
            id.failure = "search ended at an already abandoned name";
            report.nodes.push_back(id);
            break;
        }
        const auto alias = lowest_free();
        if (!alias)
            throw Error(ErrorCode::Capacity, "alias pool exhausted after identifying " + to_string(id.name));
        try {
            assign_alias(id.name, *alias);
            id.alias = alias;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Assignment)
                throw;
            id.failure = e.what();
            abandoned.insert(prefix);
        }
        report.nodes.push_back(id);
    }
    return report;
}

void PlugAndPlay::assign_alias(const PhysicalName& name, Alias alias)
{
    if (!is_node_alias(alias))
        throw Error(ErrorCode::Validation, "alias " + std::to_string(alias) + " is not assignable (1..250)");
    if (in_use_.count(alias))
        throw Error(ErrorCode::Assignment, "alias " + std::to_string(alias) + " is already in use");
    set_register(name.value());
    transact({MsAction::Write, kBroadcastAlias, sysfile::kMembership, sysfile::kAssignRecord, Record{alias, 0, 0, 0}});
    in_use_.insert(alias);
    try {
        verify(name, alias);
    } catch (const Error&) {
        in_use_.erase(alias);
        throw;
    }
}

void PlugAndPlay::verify(const PhysicalName& name, Alias alias)
{
    const MsCompletion c = transact({MsAction::Read, alias, sysfile::kDocumentation, sysfile::kSeriesRecord, Record{}});
    if (c.status != MsStatus::Ok)
        throw Error(ErrorCode::Assignment, "node " + to_string(name) + " did not answer as alias " + std::to_string(alias) +
                                               " (" + std::string(to_string(c.status)) + ")");
    if (record_to_u32(c.data) != name.series)
        throw Error(ErrorCode::Assignment, "alias " + std::to_string(alias) + " answered with a different series");
}

void PlugAndPlay::apply_configuration(const Datasheet& sheet, Alias alias)
{
    std::map<RoundId, std::vector<RodlEntry>> entries;
    for (const auto& e : sheet.cluster_config_part) {
        RodlEntry r;
        r.slot_index = e.slot;
        r.action = e.action;
        if (e.actor == "self") {
            r.actor = alias;
        } else if (e.actor == "M" || e.actor == "master") {
            r.actor = kMasterAlias;
        } else {
            try {
                r.actor = static_cast<Alias>(std::stoi(e.actor));
            } catch (const std::exception&) {
                throw Error(ErrorCode::Validation, "datasheet actor '" + e.actor + "' is not self, M or an alias");
            }
        }
        entries[e.round].push_back(r);
    }
    download(alias, entries);
}

void PlugAndPlay::download(Alias alias, const std::map<RoundId, std::vector<RodlEntry>>& entries)
{
    if (!is_node_alias(alias) || !in_use_.count(alias))
        throw Error(ErrorCode::Configuration, "alias " + std::to_string(alias) + " is not baptized");

    MasterMachine& m = sim_.master();
    std::map<RoundId, Rodl> merged = m.rodls();
    for (const auto& [round, list] : entries) {
        auto it = merged.find(round);
        if (it == merged.end())
            throw Error(ErrorCode::Validation, "round " + std::to_string(round) + " is not scheduled");
        std::vector<RodlEntry> all = it->second.entries;
        for (const auto& e : list)
            if (std::find(all.begin(), all.end(), e) == all.end())
                all.push_back(e);
        try {
            it->second = build_rodl(round, std::move(all), it->second.round_length_slots);
        } catch (const Error& e) {
            // The round length is fixed by the running schedule; a RODL that needs more is oversize.
            if (e.code() != ErrorCode::Overflow)
                throw;
            throw Error(ErrorCode::Validation, std::string("RODL does not fit the scheduled round: ") + e.what());
        }
    }
    std::vector<Rodl> list;
    for (const auto& [_, r] : merged)
        list.push_back(r);
    const auto records = serialize_configuration(configuration_for(alias, list, m.schedule()));

    configured_.erase(alias);
    for (const auto& [record, value] : records) {
        const MsCompletion c = transact({MsAction::Write, alias, sysfile::kConfiguration, record, value});
        if (c.status != MsStatus::Ok)
            throw Error(ErrorCode::PartialConfig, "configuration download to alias " + std::to_string(alias) +
                                                      " stopped at record " + std::to_string(record));
    }
    // Writes are unacknowledged; the status record tells whether the node accepted the commit.
    const MsCompletion c = transact({MsAction::Read, alias, sysfile::kMembership, sysfile::kStatusRecord, Record{}});
    if (c.status != MsStatus::Ok || !(c.data[0] & sysfile::kStatusConfigured))
        throw Error(ErrorCode::PartialConfig, "alias " + std::to_string(alias) + " did not accept the configuration");
    for (const auto& [round, list] : entries)
        m.add_entries(round, list);
    configured_.insert(alias);
}

std::vector<std::pair<PhysicalName, Alias>> baptize(Simulator& sim)
{
    PlugAndPlay pnp(sim);
    return pnp.baptize().assigned();
}

}  // namespace ttstn
