#include "srps/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace srps::sim {

bool Topology::linked(NodeId a, NodeId b) const {
    const auto& n = adj.at(a);
    return std::binary_search(n.begin(), n.end(), b);
}

std::vector<NodeId> Topology::common_neighbors(NodeId a, NodeId b) const {
    std::vector<NodeId> out;
    std::set_intersection(adj.at(a).begin(), adj.at(a).end(), adj.at(b).begin(), adj.at(b).end(),
                          std::back_inserter(out));
    return out;
}

std::vector<int> Topology::hops_from(NodeId s) const {
    std::vector<int> dist(size(), -1);
    std::deque<NodeId> q{s};
    dist[s] = 0;
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop_front();
        for (NodeId v : adj[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
    }
    return dist;
}

bool Topology::connected() const {
    if (size() == 0) return true;
    auto d = hops_from(0);
    return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

double Topology::mean_degree() const {
    if (size() == 0) return 0;
    double s = 0;
    for (const auto& n : adj) s += n.size();
    return s / size();
}

double Topology::mean_guards_per_link() const {
    double total = 0;
    std::uint64_t links = 0;
    for (NodeId a = 0; a < size(); ++a)
        for (NodeId b : adj[a]) {
            if (b <= a) continue;
            total += common_neighbors(a, b).size();
            ++links;
        }
    return links ? total / links : 0;
}

Topology make_topology(std::vector<Vec2> positions, double range_r, double field_side) {
    Topology t;
    t.positions = std::move(positions);
    t.range_r = range_r;
    t.field_side = field_side;
    t.adj.assign(t.size(), {});
    const double r2 = range_r * range_r;
    for (NodeId a = 0; a < t.size(); ++a)
        for (NodeId b = a + 1; b < t.size(); ++b) {
            double dx = t.positions[a].x - t.positions[b].x;
            double dy = t.positions[a].y - t.positions[b].y;
            if (dx * dx + dy * dy <= r2) {
                t.adj[a].push_back(b);
                t.adj[b].push_back(a);
            }
        }
    for (auto& n : t.adj) std::sort(n.begin(), n.end());
    return t;
}

double field_side_for(std::uint32_t n, double nb, double r) {
    return r * std::sqrt(std::numbers::pi * n / nb);
}

namespace {

// Picks `m` nodes pairwise at least `min_hops` apart, scanning a random order greedily.
bool place_malicious(const Topology& t, std::uint32_t m, int min_hops, std::mt19937_64& rng,
                     std::vector<NodeId>& out) {
    out.clear();
    if (m == 0) return true;
    std::vector<NodeId> order(t.size());
    for (NodeId i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> dists;
    for (NodeId cand : order) {
        if (t.adj[cand].empty()) continue;
        bool ok = true;
        for (const auto& d : dists)
            if (d[cand] >= 0 && d[cand] < min_hops) ok = false;
        if (!ok) continue;
        out.push_back(cand);
        dists.push_back(t.hops_from(cand));
        if (out.size() == m) break;
    }
    if (out.size() != m) return false;
    std::sort(out.begin(), out.end());
    return true;
}

}  // namespace

PlacedTopology generate_topology(const TopologyRequest& req, std::mt19937_64& rng) {
    if (req.n < 2) throw ConfigError("topology needs at least two nodes");
    if (req.target_nb <= 0 || req.range_r <= 0) throw ConfigError("topology needs positive nb and range");
    if (req.malicious > req.n) throw ConfigError("more malicious nodes than nodes");
    const double side = field_side_for(req.n, req.target_nb, req.range_r);
    std::uniform_real_distribution<double> u(0.0, side);
    for (std::uint32_t attempt = 1; attempt <= req.max_attempts; ++attempt) {
        std::vector<Vec2> pos(req.n);
        for (auto& p : pos) {
            p.x = u(rng);
            p.y = u(rng);
        }
        Topology t = make_topology(std::move(pos), req.range_r, side);
        if (req.require_connected && !t.connected()) continue;
        std::vector<NodeId> mal;
        if (!place_malicious(t, req.malicious, req.min_malicious_hops, rng, mal)) continue;
        return {std::move(t), std::move(mal), attempt};
    }
    throw ConfigError("no topology satisfied the connectivity and placement constraints within " +
                      std::to_string(req.max_attempts) + " attempts");
}

}  // namespace srps::sim
