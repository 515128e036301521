#pragma once

#include "ttstn/config.hpp"
#include "ttstn/simulator.hpp"

#include <string>
#include <vector>

namespace ttstn {

struct RobotReport {
    int cycles = 0;
    // (a) exclusive measurement windows never overlap, including across a cycle wrap
    bool windows_disjoint = true;
    int windows_checked = 0;
    // (b) each IR reading carries the angle its servo reached in the same cycle
    bool ir_paired = true;
    int ir_checked = 0;
    // (c) measurement -> actuation delay of the speed loop
    bool speed_constant = true;
    int speed_checked = 0;
    SimTime speed_delay = 0;
    SimTime speed_jitter = 0;

    std::vector<std::string> violations;

    bool ok() const { return windows_disjoint && ir_paired && speed_constant; }
    std::string to_text() const;
};

// Checks the three coordination properties against the invocation log. Window
// lengths and IR/servo pairing come from the execute parameters in `spec`.
RobotReport check_robot(const ClusterSpec& spec, const Simulator& sim);

}  // namespace ttstn
