#include "ttstn/robot.hpp"

#include "ttstn/error.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace ttstn {

std::string RobotReport::to_text() const
{
    std::ostringstream out;
    out << "cycles: " << cycles << "\n";
    out << "(a) ultrasonic windows disjoint: " << (windows_disjoint ? "yes" : "NO") << " (" << windows_checked
        << " windows)\n";
    out << "(b) IR readings paired with servo position: " << (ir_paired ? "yes" : "NO") << " (" << ir_checked
        << " readings)\n";
    out << "(c) speed loop delay constant: " << (speed_constant ? "yes" : "NO") << " (delay " << format_duration(speed_delay)
        << ", jitter " << speed_jitter << " ns, " << speed_checked << " cycles)\n";
    for (const auto& v : violations)
        out << "violation: " << v << "\n";
    return out.str();
}

namespace {

void note(RobotReport& r, std::string msg)
{
    if (r.violations.size() < 20)
        r.violations.push_back(std::move(msg));
}

}  // namespace

RobotReport check_robot(const ClusterSpec& spec, const Simulator& sim)
{
    RobotReport r;
    r.cycles = sim.completed_cycles();

    // Which (node, action) pairs matter.
    struct WindowSource {
        std::string group;
        SimTime length = 0;
    };
    std::map<std::pair<std::string, std::string>, WindowSource> windowed;
    std::map<std::string, std::string> ir_servo;  // IR node -> servo node
    std::string pos_action = "pos_measure", speed_action = "speed_actuate";
    for (const auto& n : spec.nodes) {
        for (const auto& x : n.executes) {
            if (x.params.has("group") && x.params.has("window"))
                windowed[{n.name, x.action}] = {x.params.get("group"), parse_duration(x.params.get("window"))};
            if (x.action == "ir_measure")
                ir_servo[n.name] = x.params.get("servo");
        }
    }

    struct Window {
        SimTime begin, end;
        std::string node, group;
        int cycle;
    };
    std::vector<Window> windows;
    std::map<int, std::map<std::string, std::uint32_t>> servo_at;  // cycle -> servo -> angle
    std::map<int, SimTime> pos_time, speed_time;
    std::vector<const InvocationRecord*> irs;

    for (const auto& inv : sim.invocations()) {
        if (auto it = windowed.find({inv.node, inv.action}); it != windowed.end())
            windows.push_back({inv.time, inv.time + it->second.length, inv.node, it->second.group, inv.tag.cycle});
        if (inv.action == "servo_step")
            servo_at[inv.tag.cycle][inv.node] = inv.value;
        if (inv.action == "ir_measure")
            irs.push_back(&inv);
        if (inv.action == pos_action)
            pos_time.emplace(inv.tag.cycle, inv.time);
        if (inv.action == speed_action)
            speed_time.emplace(inv.tag.cycle, inv.time);
    }

    std::stable_sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) { return a.begin < b.begin; });
    r.windows_checked = static_cast<int>(windows.size());
    std::map<std::string, const Window*> last_in_group;
    for (const auto& w : windows) {
        const Window*& prev = last_in_group[w.group];
        if (prev && prev->end > w.begin) {
            r.windows_disjoint = false;
            note(r, "cycle " + std::to_string(w.cycle) + ": " + w.node + " window starts at " + format_duration(w.begin) +
                        " while " + prev->node + " is active until " + format_duration(prev->end));
        }
        if (!prev || w.end > prev->end)
            prev = &w;
    }

    r.ir_checked = static_cast<int>(irs.size());
    for (const auto* ir : irs) {
        const std::string& servo = ir_servo[ir->node];
        const auto cyc = servo_at.find(ir->tag.cycle);
        const bool have = cyc != servo_at.end() && cyc->second.count(servo);
        if (!have || cyc->second.at(servo) != (ir->value >> 16)) {
            r.ir_paired = false;
            note(r, "cycle " + std::to_string(ir->tag.cycle) + ": " + ir->node + " reading not paired with " + servo);
        }
    }

    std::optional<SimTime> lo, hi;
    for (const auto& [cycle, tp] : pos_time) {
        auto it = speed_time.find(cycle);
        if (it == speed_time.end()) {
            r.speed_constant = false;
            note(r, "cycle " + std::to_string(cycle) + ": measurement without actuation");
            continue;
        }
        const SimTime d = it->second - tp;
        lo = lo ? std::min(*lo, d) : d;
        hi = hi ? std::max(*hi, d) : d;
        ++r.speed_checked;
    }
    if (lo) {
        r.speed_delay = *lo;
        r.speed_jitter = *hi - *lo;
        if (r.speed_jitter != 0) {
            r.speed_constant = false;
            note(r, "speed loop delay varies by " + std::to_string(r.speed_jitter) + " ns");
        }
    }
    if (r.speed_checked == 0 && r.cycles > 0) {
        r.speed_constant = false;
        note(r, "no speed loop activity recorded");
    }
    return r;
}

}  // namespace ttstn
