#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "srps/commands.hpp"
#include "srps/scenario.hpp"
#include "srps/validation.hpp"

using namespace srps;
namespace fs = std::filesystem;

namespace {

sim::ScenarioConfig small() {
    sim::ScenarioConfig c;
    c.n = 40;
    c.nb = 8;
    c.m = 2;
    c.runs = 2;
    c.horizon = 120;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("every generated packet is delivered, dropped or still in flight") {
    for (bool on : {true, false}) {
        auto c = small();
        c.srps = on;
        for (std::uint32_t i = 0; i < 3; ++i) {
            auto m = sim::run_scenario(c, i).metrics;
            CHECK(m.packets_generated > 0);
            CHECK(m.packets_generated == m.packets_delivered + m.packets_dropped + m.in_flight);
            std::uint64_t by_reason = 0;
            for (const auto& [reason, n] : m.drops_by_reason) by_reason += n;
            CHECK(by_reason == m.packets_dropped);
            CHECK(m.wormhole_drops <= m.packets_dropped);
            if (!m.drops_timeline.empty()) CHECK(m.drops_timeline.back().second == m.wormhole_drops);
        }
    }
}

TEST_CASE("fewer than two compromised nodes cannot form a wormhole") {
    auto c = small();
    c.srps = false;
    c.m = 1;
    auto m = sim::run_scenario(c, 0).metrics;
    CHECK(m.wormhole_drops == 0);
    CHECK(m.routes_malicious == 0);
}

TEST_CASE("honest network raises no isolations") {
    auto c = small();
    c.m = 0;
    auto m = sim::run_scenario(c, 0).metrics;
    CHECK(m.false_isolations == 0);
    CHECK(m.packets_delivered > 0);
}

TEST_CASE("same seed, same bytes") {
    auto c = small();
    c.trace = true;
    const fs::path root = fs::temp_directory_path() / "srps_test_determinism";
    fs::remove_all(root);
    app::simulate(c, root / "a", 1);
    app::simulate(c, root / "b", 2);
    int files = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        ++files;
        CHECK_MESSAGE(slurp(e.path()) == slurp(root / "b" / e.path().filename()), e.path().filename().string());
    }
    CHECK(files == 6);
    c.seed = 2;
    app::simulate(c, root / "c", 1);
    CHECK(slurp(root / "a" / "runs.csv") != slurp(root / "c" / "runs.csv"));
    fs::remove_all(root);
}

TEST_CASE("summary schema is stable") {
    auto c = small();
    c.runs = 1;
    auto runs = std::vector<sim::RunMetrics>{sim::run_scenario(c, 0).metrics};
    auto csv = app::summary_csv(sim::aggregate(runs, c), c);
    auto head = csv.substr(0, csv.find('\n'));
    CHECK(head.rfind("srps,runs,packets_generated_mean,packets_generated_std", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("sweep emits one row per value and mode") {
    auto c = small();
    c.runs = 1;
    c.horizon = 30;
    auto csv = app::sweep_csv(c, "m", {"0", "1"}, 1);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.find("\nm,0,on,") != std::string::npos);
    CHECK(csv.find("\nm,1,off,") != std::string::npos);
}

TEST_CASE("determinism check") { CHECK(app::check_determinism({}).status == app::Status::Pass); }
