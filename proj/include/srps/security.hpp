#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "srps/simulator.hpp"

namespace srps::app {

// Protocol defaults with a key chain sized for short scripted runs.
proto::ProtocolParams bench_params();

// Small hand-placed network on a collision-free medium, no background traffic.
class Bench {
public:
    Bench(std::vector<sim::Vec2> positions, std::vector<proto::NodeId> malicious, adversary::AdversaryProfile profile,
          bool srps, std::uint64_t seed, double range = 30, proto::ProtocolParams base = bench_params());
    // Explicit adjacency, for graphs a unit-disk layout cannot produce.
    Bench(sim::Topology topo, std::vector<proto::NodeId> malicious, adversary::AdversaryProfile profile, bool srps,
          std::uint64_t seed, proto::ProtocolParams base = bench_params());

    sim::Simulator& sim() { return *sim_; }
    proto::Node& node(proto::NodeId id) { return sim_->node(id); }
    adversary::MaliciousNode* mal(proto::NodeId id) { return sim_->malicious_node(id); }
    // Starts a discovery at time `at` and runs to `until`.
    void discover(proto::NodeId src, proto::NodeId dst, double at, double until);
    void run_until(double t) { sim_->run_until(t); }
    double now() const { return sim_->now(); }

private:
    std::unique_ptr<sim::Simulator> sim_;
};

// dst -> (next hop, sn); the part of a routing table an attacker would want to change.
using RouteView = std::map<proto::NodeId, std::pair<proto::NodeId, std::uint32_t>>;
RouteView route_view(const proto::Node& n);

struct ReplayOutcome {
    std::uint32_t rounds = 0;
    std::uint32_t replays = 0;         // frames re-injected (verbatim and re-signed)
    std::uint32_t oldest_round = 0;    // age in rounds of the oldest replayed request
    std::uint32_t tables_changed = 0;  // nodes whose routing view differs afterwards
};
ReplayOutcome replay_check(std::uint64_t seed);

struct InclusionOutcome {
    std::uint32_t schedules = 0;        // adversary action sequences tried
    std::uint32_t setups_skipped = 0;   // seeds whose honest route already ran through M
    std::uint32_t altered = 0;          // schedules that changed routes at X or A
    std::uint32_t adversary_on_route = 0;
};
// Path A-X-Y-B with a compromised M next to A and X; every single action and every request/reply pair.
InclusionOutcome inclusion_check(std::uint64_t seed);

struct TruthOutcome {
    std::uint32_t request_receivers = 0;  // honest nodes that heard the far end's truthful request
    std::uint32_t request_rejected = 0;   // ... and dropped it as not-neighbour
    bool reply_rejected = false;          // the source dropped the truthful reply as not-neighbour
    bool source_route_via_wormhole = false;
};
TruthOutcome wormhole_truth_check(std::uint64_t seed);

struct LieOutcome {
    std::uint32_t events = 0;             // forged transmissions naming a false previous hop
    std::uint32_t guard_slots = 0;        // (event, honest guard of the claimed link) pairs
    std::uint32_t guard_accusations = 0;  // ... where the guard raised a fabrication accusation
};
LieOutcome wormhole_lie_check(std::uint64_t seed, std::uint32_t topologies);

struct InjectionOutcome {
    std::uint32_t injections = 0;
    std::uint32_t receivers = 0;
    std::uint32_t accepted = 0;  // receivers that created request state for an injected request
    std::uint32_t rejected = 0;  // receivers that logged an explicit rejection
};
InjectionOutcome spoof_check(std::uint64_t seed);
InjectionOutcome sybil_check(std::uint64_t seed);

struct RushOutcome {
    std::uint32_t trials = 0;
    std::uint32_t captured = 0;  // the victim forwarded the rusher's copy
    double rate() const { return trials ? double(captured) / trials : 0; }
};
// Rusher plus three honest relays, so the victim buffers k = 4 candidates.
RushOutcome rushing_check(bool srps, std::uint32_t trials, std::uint64_t seed);

}  // namespace srps::app
