#pragma once

#include "ttstn/behaviors.hpp"
#include "ttstn/schedule.hpp"
#include "ttstn/simulator.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ttstn {

struct ExecuteSpec {
    std::uint8_t file = 0;
    int record = 0;
    std::string action;
    ActionParams params;
    int line = 0;
};

struct TaskSpec {
    TaskTrigger trigger;
    std::string action;
    ActionParams params;
    int line = 0;
};

struct RecordInit {
    std::uint8_t file = 0;
    int record = 0;
    Record value{};
    int line = 0;
};

struct NodeSpec {
    std::string name;
    int line = 0;
    std::optional<Alias> alias;  // nullopt: unbaptized
    PhysicalName physical;
    std::optional<double> drift;  // nullopt: cluster default
    bool random_drift = false;
    std::vector<FileLayout> files;
    std::vector<ExecuteSpec> executes;
    std::vector<TaskSpec> tasks;
    std::vector<RecordInit> records;
};

struct RodlEntrySpec {
    int slot = 1;
    std::string actor;
    SlotKind kind = SlotKind::Idle;
    std::uint8_t file = 0;
    int record = 0;
    int length = 1;
    int line = 0;
};

struct RodlSpec {
    RoundId id = 0;
    std::optional<int> length;
    std::vector<RodlEntrySpec> entries;
    int line = 0;
};

struct ClusterSpec {
    std::string origin;  // file name for diagnostics
    std::filesystem::path base_dir;
    std::string name = "cluster";
    std::int64_t baud = 9600;
    SimTime cycle = 0;
    int ms_interleave = 1;
    double rho_max = 1e-3;
    bool random_drift = false;  // default for nodes without a drift key
    std::uint64_t seed = 1;
    std::string registry;  // relative to base_dir
    std::vector<RoundId> round_order;  // MP rounds per cycle; empty = ascending ids
    NodeSpec master;
    std::vector<NodeSpec> nodes;
    std::vector<RodlSpec> rodls;
    std::vector<FaultSpec> faults;

    std::filesystem::path registry_path() const;
    const NodeSpec* find_node(const std::string& name) const;
};

// Parse errors carry "origin:line: message".
ClusterSpec parse_spec(std::string_view text, const std::string& origin = "<string>",
                       const std::filesystem::path& base_dir = ".");
ClusterSpec load_spec(const std::filesystem::path& path);

struct ResolvedCluster {
    BusTiming timing;
    std::map<RoundId, Rodl> rodls;
    ClusterSchedule schedule;
    ClusterView view;
    std::map<std::string, Alias> aliases;  // configured nodes
    ValidationReport report;
};

// Resolves actor names and lays out the recommended schedule. Structural
// problems are reported, not thrown, except syntax that prevents resolution.
ResolvedCluster resolve_spec(const ClusterSpec& spec);
ValidationReport validate_spec(const ClusterSpec& spec);

// Deterministic drift per node, uniform in [-rho_max, rho_max] from the seed.
double drawn_drift(std::uint64_t seed, std::size_t node_index, double rho_max);

// Throws Validation with the report text if the spec has errors.
std::unique_ptr<Simulator> build_simulator(const ClusterSpec& spec, const BehaviorLibrary& behaviors);

}  // namespace ttstn
