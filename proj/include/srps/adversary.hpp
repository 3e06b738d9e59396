#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srps/node.hpp"

namespace srps::adversary {

using proto::Context;
using proto::Frame;
using proto::NodeId;
using proto::Time;

enum class Behavior : std::uint8_t { Wormhole, Rush, Replay, Spoof, Sybil, Include, DropData, Selective };
enum class TunnelMode : std::uint8_t { OutOfBand, Encapsulation };
// Which previous hop a wormhole endpoint names when it re-emits tunnelled traffic.
enum class Claim : std::uint8_t { Lie, Truth };
enum class LieTarget : std::uint8_t { Random, FixedPerWindow };

std::string to_string(Behavior b);
std::optional<Behavior> behavior_from_string(const std::string& s);

struct AdversaryProfile {
    std::set<Behavior> behaviors;
    std::vector<NodeId> colluders;  // every compromised node, this one included
    TunnelMode tunnel_mode = TunnelMode::OutOfBand;
    double hop_latency = 0.005;  // per colluder-route hop in encapsulation mode
    Claim claim = Claim::Lie;
    LieTarget lie_target = LieTarget::Random;
    std::uint32_t events_per_window = 0;  // fabricated transmissions per window; 0 = unlimited
    double window = 200;
    double start_s = 0;
    double selective_fraction = 0.5;

    bool has(Behavior b) const { return behaviors.count(b) != 0; }
};

// Throws std::invalid_argument on an inconsistent profile.
void validate(const AdversaryProfile& p);

struct WormholeLink {
    NodeId endpoint_a = proto::kNoNode;
    NodeId endpoint_b = proto::kNoNode;
    double latency = 0;
    bool established = false;
};

// Delay a tunnelled frame takes between two colluders.
double tunnel_latency(const AdversaryProfile& p, std::uint32_t hops_between);

struct AdversaryStats {
    std::uint64_t tunnelled = 0;
    std::uint64_t fabricated = 0;
    std::uint64_t data_dropped = 0;
    std::uint64_t data_tunnelled = 0;
};

// Compromised insider: owns legitimate keys, runs the honest engine, and deviates where the profile says.
class MaliciousNode : public proto::Node {
public:
    MaliciousNode(NodeId id, proto::ProtocolParams params, const crypto::SymKey& chain_seed, AdversaryProfile profile);

    const AdversaryProfile& profile() const { return profile_; }
    AdversaryProfile& mutable_profile() { return profile_; }
    const AdversaryStats& stats() const { return stats_; }
    // Colluder-route hop counts for encapsulation latency.
    void set_colluder_hops(std::map<NodeId, std::uint32_t> hops) { colluder_hops_ = std::move(hops); }
    // Route requests and replies overheard, for replay and inclusion attempts.
    const std::vector<Frame>& recorded_frames() const { return recorded_; }
    bool tunnel_route(NodeId dst, Time now) const;

    // Scripted injections: transmit a frame verbatim, or signed with this node's own chain.
    void inject(Frame f, Context& ctx, Time delay = 0);
    void inject_signed(Frame f, Context& ctx);
    void tunnel(const Frame& f, Context& ctx);

    void on_frame(const Frame& f, Context& ctx) override;
    void on_tunnel(const Frame& f, Context& ctx) override;

protected:
    Time request_wait(Context& ctx) override;
    void after_request_accepted(const proto::RdpCore& c, NodeId heard_from, Context& ctx) override;
    bool intercept_data(const Frame& f, const proto::Data& d, Context& ctx) override;
    void on_rrp(const Frame& f, const proto::Rrp& r, Time received, Context& ctx) override;
    void forward_reply(proto::RequestState& st, const proto::Rrp& r, NodeId from, bool tainted,
                       Context& ctx) override;

private:
    bool active(Time now) const;
    bool take_event(Time now);
    NodeId lie_target(Time now, NodeId avoid_a, NodeId avoid_b, Context& ctx);
    void tunnelled_request(const Frame& f, const proto::Rdp& r, Context& ctx);
    void tunnelled_reply(const Frame& f, const proto::Rrp& r, Context& ctx);
    void tunnelled_data(const Frame& f, const proto::Data& d, Context& ctx);

    AdversaryProfile profile_;
    AdversaryStats stats_;
    std::map<NodeId, std::uint32_t> colluder_hops_;
    std::vector<Frame> recorded_;
    std::map<NodeId, std::pair<NodeId, Time>> tunnel_routes_;  // dst -> (colluder, expiry)
    long window_index_ = -1;
    std::uint32_t window_events_ = 0;
    NodeId fixed_target_ = proto::kNoNode;
};

}  // namespace srps::adversary
