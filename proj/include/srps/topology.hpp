#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "srps/messages.hpp"

namespace srps::sim {

using proto::NodeId;

struct Vec2 {
    double x = 0;
    double y = 0;
};

struct Topology {
    std::vector<Vec2> positions;
    double range_r = 30;
    double field_side = 0;
    std::vector<std::vector<NodeId>> adj;  // sorted

    std::size_t size() const { return positions.size(); }
    double density() const { return field_side > 0 ? size() / (field_side * field_side) : 0; }
    bool linked(NodeId a, NodeId b) const;
    // Nodes in range of both endpoints, endpoints excluded.
    std::vector<NodeId> common_neighbors(NodeId a, NodeId b) const;
    std::vector<int> hops_from(NodeId s) const;  // -1 when unreachable
    bool connected() const;
    double mean_degree() const;
    // Mean number of common neighbours over every link.
    double mean_guards_per_link() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Links every pair within range.
Topology make_topology(std::vector<Vec2> positions, double range_r, double field_side);

// Square side that gives `nb` expected neighbours for `n` nodes: d = nb / (pi r^2), side = sqrt(n / d).
double field_side_for(std::uint32_t n, double nb, double r);

struct TopologyRequest {
    std::uint32_t n = 100;
    double target_nb = 8;
    double range_r = 30;
    std::uint32_t malicious = 0;
    int min_malicious_hops = 3;  // pairwise, i.e. more than two hops apart
    std::uint32_t max_attempts = 2000;
    bool require_connected = true;
};

struct PlacedTopology {
    Topology topology;
    std::vector<NodeId> malicious;
    std::uint32_t attempts = 0;
};

// Uniform placement, regenerated until the constraints hold; throws ConfigError when the budget runs out.
PlacedTopology generate_topology(const TopologyRequest& req, std::mt19937_64& rng);

}  // namespace srps::sim
