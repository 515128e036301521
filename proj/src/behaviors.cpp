#include "ttstn/behaviors.hpp"

#include "ttstn/error.hpp"

#include <charconv>
#include <sstream>

namespace ttstn {

ActionParams ActionParams::parse(std::string_view words)
{
    std::map<std::string, std::string> values;
    std::istringstream in{std::string(words)};
    std::string w;
    while (in >> w) {
        const auto eq = w.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(ErrorCode::Parse, "expected key=value, got '" + w + "'");
        values[w.substr(0, eq)] = w.substr(eq + 1);
    }
    return ActionParams(std::move(values));
}

std::string ActionParams::get(const std::string& key, const std::string& fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long long ActionParams::get_int(const std::string& key, long long fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        std::size_t used = 0;
        long long v = std::stoll(it->second, &used, 0);
        if (used != it->second.size())
            throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, "parameter " + key + " is not an integer: '" + it->second + "'");
    }
}

std::pair<std::uint8_t, int> ActionParams::get_record(const std::string& key, std::pair<std::uint8_t, int> fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    const auto colon = it->second.find(':');
    try {
        if (colon == std::string::npos)
            throw std::invalid_argument(key);
        const int f = std::stoi(it->second.substr(0, colon));
        const int r = std::stoi(it->second.substr(colon + 1));
        if (f < 0 || f >= kMaxFiles || r < 0 || r >= kMaxRecords)
            throw std::out_of_range(key);
        return {static_cast<std::uint8_t>(f), r};
    } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, "parameter " + key + " must be FILE:RECORD, got '" + it->second + "'");
    }
}

ExecuteAction BehaviorLibrary::make_execute(const std::string& name, const BehaviorContext& ctx) const
{
    auto it = executes_.find(name);
    if (it == executes_.end())
        throw Error(ErrorCode::Configuration, "unknown execute action '" + name + "'");
    BehaviorContext c = ctx;
    if (!c.world)
        c.world = world_;
    return it->second(c);
}

TaskAction BehaviorLibrary::make_task(const std::string& name, const BehaviorContext& ctx) const
{
    auto it = tasks_.find(name);
    if (it == tasks_.end())
        throw Error(ErrorCode::Configuration, "unknown task action '" + name + "'");
    BehaviorContext c = ctx;
    if (!c.world)
        c.world = world_;
    return it->second(c);
}

namespace {

std::uint8_t lo8(long long v) { return static_cast<std::uint8_t>(v & 0xFF); }

}  // namespace

BehaviorLibrary BehaviorLibrary::standard()
{
    BehaviorLibrary lib;

    // Increments a 32-bit counter in `target` (default: the bound record).
    lib.add_execute("counter", [](const BehaviorContext& c) -> ExecuteAction {
        const auto target = c.params.get_record("target", {c.file, c.record});
        return [target](InterfaceFileSystem& ifs) {
            const std::uint32_t n = record_to_u32(ifs.pull(target.first, target.second)) + 1;
            ifs.push(target.first, target.second, u32_to_record(n));
            return n;
        };
    });

    // Scripted sensor: base, base+step, ... wrapped to `modulo`, MSB first in `target`.
    auto scripted = [](const BehaviorContext& c) -> ExecuteAction {
        const auto target = c.params.get_record("target", {8, 0});
        const long long base = c.params.get_int("base", 10);
        const long long step = c.params.get_int("step", 1);
        const long long modulo = c.params.get_int("modulo", 200);
        auto n = std::make_shared<long long>(0);
        return [=](InterfaceFileSystem& ifs) {
            const long long v = base + (step * (*n)++) % (modulo > 0 ? modulo : 1);
            ifs.push(target.first, target.second, Record{lo8(v), lo8(*n), 0, 0});
            return static_cast<std::uint32_t>(v & 0xFF);
        };
    };
    lib.add_execute("measure", scripted);
    lib.add_execute("us_ping", scripted);

    lib.add_execute("servo_step", [](const BehaviorContext& c) -> ExecuteAction {
        const auto target = c.params.get_record("target", {8, 0});
        const long long step = c.params.get_int("step", 15);
        auto world = c.world;
        const std::string node = c.node;
        return [=](InterfaceFileSystem& ifs) {
            int& angle = world->servo_angle[node];
            angle = static_cast<int>((angle + step) % 180);
            ifs.push(target.first, target.second, Record{lo8(angle), 0, 0, 0});
            return static_cast<std::uint32_t>(angle);
        };
    });

    // Distance depends on where the paired servo points right now.
    lib.add_execute("ir_measure", [](const BehaviorContext& c) -> ExecuteAction {
        const auto target = c.params.get_record("target", {8, 0});
        const std::string servo = c.params.get("servo");
        if (servo.empty())
            throw Error(ErrorCode::Configuration, "ir_measure on " + c.node + " needs servo=<node>");
        auto world = c.world;
        auto n = std::make_shared<int>(0);
        return [=](InterfaceFileSystem& ifs) {
            const int angle = world->servo_angle[servo];
            const int dist = 40 + (angle * 7 + (*n)++ * 3) % 150;
            ifs.push(target.first, target.second, Record{lo8(dist), lo8(angle), lo8(*n), 0});
            return static_cast<std::uint32_t>((angle << 16) | dist);
        };
    });

    lib.add_execute("pos_measure", [](const BehaviorContext& c) -> ExecuteAction {
        const auto target = c.params.get_record("target", {8, 0});
        auto world = c.world;
        return [=](InterfaceFileSystem& ifs) {
            world->position = (world->position + world->velocity) & 0xFF;
            ifs.push(target.first, target.second, Record{lo8(world->position), 0, 0, 0});
            return static_cast<std::uint32_t>(world->position);
        };
    });

    lib.add_execute("speed_actuate", [](const BehaviorContext& c) -> ExecuteAction {
        const auto source = c.params.get_record("source", {9, 0});
        auto world = c.world;
        return [=](InterfaceFileSystem& ifs) {
            world->speed_command = ifs.pull(source.first, source.second)[0];
            return static_cast<std::uint32_t>(world->speed_command);
        };
    });

    lib.add_execute("steer_apply", [](const BehaviorContext& c) -> ExecuteAction {
        const auto source = c.params.get_record("source", {9, 0});
        auto world = c.world;
        return [=](InterfaceFileSystem& ifs) {
            world->steering = ifs.pull(source.first, source.second)[0];
            return static_cast<std::uint32_t>(world->steering);
        };
    });

    // Tasks.
    lib.add_task("log", [](const BehaviorContext&) -> TaskAction { return [](TaskContext&) {}; });

    lib.add_task("tick", [](const BehaviorContext& c) -> TaskAction {
        const auto target = c.params.get_record("target", {8, 0});
        return [target](TaskContext& ctx) {
            ctx.push(target.first, target.second, u32_to_record(record_to_u32(ctx.pull(target.first, target.second)) + 1));
        };
    });

    // Steering setpoint from the last received position.
    lib.add_task("nav_plan", [](const BehaviorContext& c) -> TaskAction {
        const auto source = c.params.get_record("source", {9, 0});
        const auto target = c.params.get_record("target", {8, 0});
        return [=](TaskContext& ctx) {
            const int pos = ctx.pull(source.first, source.second)[0];
            ctx.push(target.first, target.second, Record{lo8(128 - pos / 2), 0, 0, 0});
        };
    });

    return lib;
}

}  // namespace ttstn
