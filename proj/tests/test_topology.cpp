#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "srps/simulator.hpp"
#include "srps/topology.hpp"

using namespace srps::sim;
using doctest::Approx;

TEST_CASE("unit-disk links and common neighbours") {
    auto t = make_topology({{0, 0}, {20, 0}, {40, 0}, {10, 10}}, 30, 100);
    CHECK(t.linked(0, 1));
    CHECK_FALSE(t.linked(0, 2));
    CHECK(t.linked(1, 2));
    CHECK(t.linked(0, 3));
    CHECK(t.common_neighbors(0, 1) == std::vector<NodeId>{3});
    CHECK(t.hops_from(0) == std::vector<int>{0, 1, 2, 1});
    CHECK(t.connected());
    CHECK(t.mean_degree() == Approx(2.0));  // links 0-1, 1-2, 0-3, 1-3
}

TEST_CASE("field side gives the requested neighbour density") {
    const double side = field_side_for(100, 8, 30);
    CHECK(100 / (side * side) * std::acos(-1.0) * 900 == Approx(8));
}

TEST_CASE("generated topologies are connected and keep malicious nodes apart") {
    std::mt19937_64 rng(5);
    TopologyRequest req;
    req.n = 60;
    req.target_nb = 10;
    req.malicious = 4;
    for (int i = 0; i < 5; ++i) {
        auto p = generate_topology(req, rng);
        CHECK(p.topology.size() == 60);
        CHECK(p.topology.connected());
        REQUIRE(p.malicious.size() == 4);
        for (auto a : p.malicious) {
            auto hops = p.topology.hops_from(a);
            for (auto b : p.malicious)
                if (a != b) CHECK(hops[b] >= req.min_malicious_hops);
        }
    }
}

TEST_CASE("impossible placement is a configuration error") {
    std::mt19937_64 rng(1);
    TopologyRequest req;
    req.n = 6;
    req.target_nb = 5;
    req.malicious = 4;
    req.max_attempts = 20;
    CHECK_THROWS_AS(generate_topology(req, rng), ConfigError);
}

TEST_CASE("guard count tracks sqrt(3)/pi of the degree") {
    std::mt19937_64 rng(2);
    TopologyRequest req;
    req.target_nb = 15;
    double sum = 0;
    for (int i = 0; i < 10; ++i) sum += generate_topology(req, rng).topology.mean_guards_per_link();
    CHECK(sum / 10 == Approx(std::sqrt(3.0) / std::acos(-1.0) * 15).epsilon(0.1));
}

TEST_CASE("collision probability models") {
    MediumModel m;
    CHECK(m.pc(3) == Approx(0.05));
    CHECK(m.pc(15) == Approx(0.25));
    CHECK(m.pc(90) == Approx(0.95));
    m.mode = PcMode::Fixed;
    m.fixed_pc = 0.1;
    CHECK(m.pc(50) == Approx(0.1));
    MediumModel b;
    CHECK(b.tx_time(50) == Approx(0.01));
}
