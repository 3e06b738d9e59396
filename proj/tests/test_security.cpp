#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "srps/security.hpp"
#include "srps/validation.hpp"

using namespace srps;
using namespace srps::app;

TEST_CASE("honest discovery on a line") {
    Bench b({{0, 0}, {25, 0}, {50, 0}, {75, 0}}, {}, {}, true, 1);
    b.discover(0, 3, 1, 5);
    auto r = b.node(0).route_to(3, b.now());
    REQUIRE(r.has_value());
    CHECK(r->next_hop == 1);
    CHECK(route_view(b.node(1)).count(3) == 1);
}

TEST_CASE("replayed requests never change routing tables") {
    auto o = replay_check(1);
    CHECK(o.replays > 0);
    CHECK(o.oldest_round >= 10);
    CHECK(o.tables_changed == 0);
}

TEST_CASE("wormhole truth branch is rejected as not-neighbor") {
    auto o = wormhole_truth_check(1);
    CHECK(o.request_receivers > 0);
    CHECK(o.request_rejected == o.request_receivers);
    CHECK(o.reply_rejected);
    CHECK_FALSE(o.source_route_via_wormhole);
}

TEST_CASE("wormhole lie branch is accused by every guard") {
    auto o = wormhole_lie_check(2, 5);
    CHECK(o.events > 0);
    CHECK(o.guard_slots > 0);
    CHECK(o.guard_accusations == o.guard_slots);
}

TEST_CASE("spoofed and Sybil injections are rejected") {
    for (auto o : {spoof_check(1), sybil_check(1)}) {
        CHECK(o.injections > 0);
        CHECK(o.accepted == 0);
        CHECK(o.rejected == o.receivers);
    }
}

TEST_CASE("rushing against random and first-heard forwarding") {
    auto srps_mode = rushing_check(true, 400, 3);
    const double sigma = std::sqrt(0.25 * 0.75 / 400);
    CHECK(std::abs(srps_mode.rate() - 0.25) <= 3 * sigma);
    CHECK(rushing_check(false, 100, 3).rate() >= 0.99);
}

TEST_CASE("full security suite") { CHECK(check_security(Level::Fast).status == Status::Pass); }

TEST_CASE("crypto suite at fast level") { CHECK(check_crypto(Level::Fast).status == Status::Pass); }
