#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srps/commands.hpp"
#include "srps/config.hpp"

using namespace srps;
using namespace srps::app;

TEST_CASE("config text sets nested keys") {
    auto c = parse_config("# scenario\nn = 50\nnb=12 # dense\nsrps = off\nadversary.behaviors = wormhole,rush\n"
                          "medium.pc_mode = fixed\nmedium.pc = 0.1\nproto.chain_length = 300\n");
    CHECK(c.n == 50);
    CHECK(c.nb == 12);
    CHECK_FALSE(c.srps);
    CHECK(c.adversary.behaviors.size() == 2);
    CHECK(c.medium.mode == sim::PcMode::Fixed);
    CHECK(c.medium.fixed_pc == doctest::Approx(0.1));
    CHECK(c.proto.chain_length == 300);
    CHECK(get_setting(c, "adversary.behaviors") == "wormhole,rush");
}

TEST_CASE("unknown key reports line and column") {
    try {
        parse_config("n = 50\n  gamm = 3\n", {}, "scenario.cfg");
        FAIL("expected a parse error");
    } catch (const ConfigParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
        CHECK(std::string(e.what()) == "scenario.cfg:2:3: unknown key 'gamm'");
    }
}

TEST_CASE("bad values, duplicates and missing '=' are located") {
    try {
        parse_config("gamma = three\n");
        FAIL("expected a parse error");
    } catch (const ConfigParseError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() == 9);
    }
    CHECK_THROWS_AS(parse_config("n = 1\nn = 2\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_config("horizon\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_config("= 4\n"), ConfigParseError);
}

TEST_CASE("every documented key round-trips through get/apply") {
    sim::ScenarioConfig c;
    for (const auto& k : config_keys()) {
        const std::string v = get_setting(c, k.name);
        sim::ScenarioConfig d;
        apply_setting(d, k.name, v);
        CHECK_MESSAGE(get_setting(d, k.name) == v, k.name);
    }
}

TEST_CASE("override parsing") {
    CHECK(split_assignment("gamma=4") == std::pair<std::string, std::string>{"gamma", "4"});
    CHECK_THROWS_AS(split_assignment("gamma"), UsageError);
    sim::ScenarioConfig c;
    CHECK_THROWS_WITH_AS(apply_setting(c, "gama", "3"), "unknown key 'gama'", UsageError);
    CHECK_THROWS_AS(apply_setting(c, "n", "-3"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "srps", "maybe"), UsageError);
}

TEST_CASE("value lists") {
    CHECK(expand_values("0..4") == std::vector<std::string>{"0", "1", "2", "3", "4"});
    CHECK(expand_values("2,5,8") == std::vector<std::string>{"2", "5", "8"});
    CHECK_THROWS_AS(expand_values(""), UsageError);
    CHECK_THROWS_AS(expand_values("4..1"), UsageError);
    CHECK_THROWS_AS(expand_values("1,,2"), UsageError);
}

TEST_CASE("sweep rejects bad input before running") {
    sim::ScenarioConfig c;
    CHECK_THROWS_AS(sweep_csv(c, "gamma", {"3", "x"}), UsageError);
    CHECK_THROWS_AS(sweep_csv(c, "gamma", {}), UsageError);
    CHECK_THROWS_AS(sweep_csv(c, "nope", {"1"}), UsageError);
    CHECK_THROWS_AS(sweep_csv(c, "srps", {"on"}), UsageError);
}

TEST_CASE("analyze overrides") {
    CHECK_THROWS_WITH_AS(analyze_csv("fig9a", {{"mue", "3"}}), "unknown key 'mue'", UsageError);
    CHECK_THROWS_AS(analyze_csv("fig10", {}), UsageError);
    CHECK_THROWS_AS(analyze_csv("fig9a", {{"mu", "x"}}), UsageError);
    CHECK(analyze_csv("costs", {}).find("1420") != std::string::npos);
    CHECK(analyze_csv("costs", {{"nn", "21"}}).find("1432") != std::string::npos);
    CHECK(analyze_csv("fig9a", {{"mu", "9"}}) != analyze_csv("fig9a", {}));
}
