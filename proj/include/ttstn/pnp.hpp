#pragma once

#include "ttstn/ifs.hpp"
#include "ttstn/schedule.hpp"
#include "ttstn/simulator.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ttstn {

// Datasheet entry; actor is "self", "M" or a decimal alias.
struct DatasheetEntry {
    RoundId round = 0;
    int slot = 1;
    std::string actor = "self";
    SlotAction action;
};

struct Datasheet {
    std::uint32_t series = 0;
    std::string description;
    std::vector<DatasheetEntry> cluster_config_part;
    std::vector<FileLayout> transducer_description_part;
};

// Parses and validates one datasheet document. `origin` names it in errors.
Datasheet parse_datasheet(std::istream& in, const std::string& origin);
std::filesystem::path datasheet_path(const std::filesystem::path& registry, std::uint32_t series);
// Throws UnknownSeries if the registry has no document for `series`.
Datasheet fetch_datasheet(const std::filesystem::path& registry, std::uint32_t series);

struct Identification {
    PhysicalName name;
    std::optional<Alias> alias;  // nullopt when the search was abandoned
    int bit_probes = 0;
    std::string failure;
};

struct BaptizeReport {
    std::vector<Identification> nodes;
    int presence_probes = 0;
    int bit_probes = 0;
    int register_writes = 0;

    std::vector<std::pair<PhysicalName, Alias>> assigned() const;
};

// Master-side integration of new nodes. Every bus access is an MS transaction
// queued at the simulator's master and run to completion.
class PlugAndPlay {
public:
    // Aliases named in the master's RODLs count as taken.
    explicit PlugAndPlay(Simulator& sim);
    PlugAndPlay(Simulator& sim, std::set<Alias> in_use);

    // prefix holds the k leading name bits, right-aligned.
    bool probe(int k, std::uint64_t prefix);
    BaptizeReport baptize();
    void assign_alias(const PhysicalName& name, Alias alias);

    void apply_configuration(const Datasheet& sheet, Alias alias);
    // Entries given with concrete actors; shares the download path.
    void download(Alias alias, const std::map<RoundId, std::vector<RodlEntry>>& entries);

    const std::set<Alias>& in_use() const { return in_use_; }
    std::optional<Alias> lowest_free() const;
    bool configured(Alias alias) const { return configured_.count(alias) != 0; }
    int probe_count() const { return probes_; }
    int ms_timeout_cycles() const { return timeout_cycles_; }
    void set_ms_timeout_cycles(int cycles) { timeout_cycles_ = cycles; }

private:
    MsCompletion transact(const MsRequest& request);
    void set_register(std::uint64_t value, int* writes = nullptr);
    void verify(const PhysicalName& name, Alias alias);

    Simulator& sim_;
    std::set<Alias> in_use_;
    std::set<Alias> configured_;
    std::optional<std::uint64_t> register_;
    int probes_ = 0;
    int timeout_cycles_ = 8;
};

// Convenience wrapper: baptize every unbaptized node.
std::vector<std::pair<PhysicalName, Alias>> baptize(Simulator& sim);

}  // namespace ttstn
