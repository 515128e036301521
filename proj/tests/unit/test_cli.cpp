#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef TTSTN_CLI
#define TTSTN_CLI "ttstn"
#endif

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with stderr folded into stdout.
Result run(const std::string& args) {
    const std::string cmd = std::string("\"") + TTSTN_CLI + "\" " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string cfg(const char* name) { return "\"" + test::config_path(name).string() + "\""; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("validate") {
    const auto ok = run("validate " + cfg("table1.cfg"));
    CHECK(ok.code == 0);
    const auto warn = run("validate " + cfg("robot_overlap.cfg"));
    CHECK(warn.code == 0);
    CHECK(contains(warn.out, "window-overlap"));
    CHECK(run("validate /nonexistent/x.cfg").code == 3);

    const auto bad = std::filesystem::temp_directory_path() / "ttstn_cli_bad.cfg";
    {
        std::ofstream out(bad);
        out << "[cluster]\ncycle = 40ms\n[node A]\nalias = 1\nfiles = 8:1\n[node B]\nalias = 2\nfiles = 8:1\n"
               "[rodl 0]\nentry = 1 A send 8:0\nentry = 1 B send 8:0\n";
    }
    const auto conflict = run("validate \"" + bad.string() + "\"");
    CHECK(conflict.code == 1);
    CHECK(contains(conflict.out, "slot 1"));
    std::filesystem::remove(bad);
}

TEST_CASE("run reproduces the golden trace and is repeatable") {
    const auto a = std::filesystem::temp_directory_path() / "ttstn_cli_a.trace";
    const auto b = std::filesystem::temp_directory_path() / "ttstn_cli_b.trace";
    CHECK(run("run " + cfg("table1.cfg") + " --cycles 3 --trace \"" + a.string() + "\"").code == 0);
    CHECK(run("run " + cfg("table1.cfg") + " --cycles 3 --trace \"" + b.string() + "\"").code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) == slurp(test::source_path("tests/golden/table1_3cycles.trace")));

    const auto stdout_run = run("run " + cfg("table1.cfg") + " --duration 80ms --trace -");
    CHECK(stdout_run.code == 0);
    CHECK(contains(stdout_run.out, "40000000,2,0,0,M,1d,fireworks"));
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST_CASE("run summary") {
    const auto r = run("run " + cfg("robot.cfg") + " --cycles 20 --trace - --summary --saturate 6:1:0");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "collisions: 0"));
    CHECK(contains(r.out, "30ms"));
}

TEST_CASE("plug and play commands") {
    const auto b = run("baptize " + cfg("plugnplay.cfg"));
    CHECK(b.code == 0);
    CHECK(contains(b.out, "alias=2, bit_probes=64"));
    CHECK(contains(b.out, "alias=3, bit_probes=64"));

    const auto c = run("configure " + cfg("plugnplay.cfg"));
    CHECK(c.code == 0);
    CHECK(contains(c.out, "rs 10:1"));
    CHECK(contains(c.out, "rs 10:2"));
}

TEST_CASE("diagnostic commands and exit codes") {
    const auto r = run("dm-read " + cfg("robot.cfg") + " 10:1:0");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "latency_cycles=1"));
    CHECK(contains(r.out, "value=0x0000002"));

    CHECK(run("dm-read " + cfg("robot.cfg") + " 77:1:0").code == 2);
    CHECK(run("dm-read " + cfg("robot.cfg") + " 10:1:0 --deadline 0ns").code == 2);
    CHECK(run("dm-write " + cfg("robot.cfg") + " 10:12:0 0x42").code == 0);

    const auto cp = run("cp-download " + cfg("plugnplay.cfg") + " 2 --baptize --round 0 --entry \"3 send 8:0\"");
    CHECK(cp.code == 0);
    CHECK(contains(cp.out, "ack"));
    CHECK(run("cp-download " + cfg("plugnplay.cfg") + " 2 --round 0 --entry \"3 send 8:0\"").code == 1);
}

TEST_CASE("robot demo") {
    const auto ok = run("demo robot --cycles 300");
    CHECK(ok.code == 0);
    const auto bad = run("demo robot --cycles 100 --overlap");
    CHECK(bad.code == 2);
    CHECK(contains(bad.out, "FAILED: (a)"));
}
