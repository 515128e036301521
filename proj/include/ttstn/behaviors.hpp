#pragma once

#include "ttstn/ifs.hpp"
#include "ttstn/node.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>

namespace ttstn {

// key=value arguments attached to an action in a config file.
class ActionParams {
public:
    ActionParams() = default;
    explicit ActionParams(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    static ActionParams parse(std::string_view words);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    long long get_int(const std::string& key, long long fallback) const;
    // "F:R"
    std::pair<std::uint8_t, int> get_record(const std::string& key, std::pair<std::uint8_t, int> fallback) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Scripted environment the robot stubs read and write. Not visible to the
// protocol; nodes only ever see their own IFS.
struct RobotWorld {
    std::map<std::string, int> servo_angle;
    int position = 0;
    int velocity = 3;
    int speed_command = 0;
    int steering = 0;
};

struct BehaviorContext {
    std::string node;
    std::uint8_t file = 0;  // record the action is bound to (execute) or 0
    int record = 0;
    ActionParams params;
    std::shared_ptr<RobotWorld> world;
};

class BehaviorLibrary {
public:
    using ExecuteFactory = std::function<ExecuteAction(const BehaviorContext&)>;
    using TaskFactory = std::function<TaskAction(const BehaviorContext&)>;

    void add_execute(const std::string& name, ExecuteFactory factory) { executes_[name] = std::move(factory); }
    void add_task(const std::string& name, TaskFactory factory) { tasks_[name] = std::move(factory); }

    bool has_execute(const std::string& name) const { return executes_.count(name) != 0; }
    bool has_task(const std::string& name) const { return tasks_.count(name) != 0; }

    // Throw Configuration for unknown names.
    ExecuteAction make_execute(const std::string& name, const BehaviorContext& ctx) const;
    TaskAction make_task(const std::string& name, const BehaviorContext& ctx) const;

    std::shared_ptr<RobotWorld> world() const { return world_; }

    // Counters, scripted sensors and the robot stubs.
    static BehaviorLibrary standard();

private:
    std::map<std::string, ExecuteFactory> executes_;
    std::map<std::string, TaskFactory> tasks_;
    std::shared_ptr<RobotWorld> world_ = std::make_shared<RobotWorld>();
};

}  // namespace ttstn
