#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <variant>
#include <vector>

#include "srps/crypto.hpp"

namespace srps::proto {

using NodeId = std::uint32_t;
using Time = double;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr NodeId kBroadcast = kNoNode - 1;

using crypto::HashValue;
using crypto::MacTag;
using crypto::SymKey;

struct Hello {
    NodeId src = kNoNode;
    HashValue commitment{};
    std::uint32_t position = 0;  // chain position of the commitment
};

struct HelloReply {
    NodeId src = kNoNode;
    NodeId to = kNoNode;
    HashValue commitment{};
    std::uint32_t position = 0;
};

struct NeighborList {
    NodeId src = kNoNode;
    std::vector<NodeId> neighbors;
};

struct KeyDisclosure {
    NodeId src = kNoNode;
    SymKey key{};
};

// Fields of an RDP that no forwarder may alter.
struct RdpCore {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    std::uint32_t sn = 0;
    HashValue snv_value{};
    std::uint32_t snv_index = 0;
    MacTag e2e_mac{};
};

struct Rdp {
    RdpCore core;
    NodeId prev_hop = kNoNode;  // node the forwarder heard it from; kNoNode at the source
    std::uint32_t key_index = 0;
    MacTag nbr_mac{};
};

struct RrpCore {
    NodeId src = kNoNode;  // route request initiator
    NodeId dst = kNoNode;  // replying destination
    std::uint32_t sn = 0;
    HashValue snv_value{};
    std::uint32_t snv_index = 0;
    MacTag e2e_mac{};
};

struct Rrp {
    RrpCore core;
    NodeId prev_hop = kNoNode;  // node the forwarder received the reply from; kNoNode at the destination
    NodeId echo = kNoNode;      // receiver's own previous hop on the request path
    std::uint32_t key_index = 0;
    MacTag nbr_mac{};
};

// Routed hop by hop along request-state pointers.
struct Challenge {
    NodeId from = kNoNode;  // challenger B
    NodeId to = kNoNode;    // source S
    std::uint32_t sn = 0;   // request the challenge rides on
    crypto::Bytes ct;
    bool on_demand = false;
};

struct ChallengeResponse {
    NodeId from = kNoNode;  // S
    NodeId to = kNoNode;    // B
    std::uint32_t sn = 0;
    crypto::Bytes ct;
};

// Reports the neighbourhood of a conflicting route so the source can trace it.
struct FakeRouteReport {
    NodeId reporter = kNoNode;
    NodeId to = kNoNode;
    std::uint32_t sn = 0;
    NodeId victim_dst = kNoNode;
    NodeId fake_prev_hop = kNoNode;
    NodeId fake_second_hop = kNoNode;
    NodeId fake_next_hop = kNoNode;
};

struct RenewalCommit {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    std::uint32_t sn = 0;  // seeds the new chain: u0 = E_KSD[sn]
    crypto::Bytes ct;      // E_{v_key}[u_n]
};

struct RenewalValue {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    HashValue u_n{};
};

struct RenewalProof {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    HashValue v_key{};
};

struct RouteError {
    NodeId src = kNoNode;  // traffic source the error travels back to
    NodeId dst = kNoNode;
    NodeId broken_from = kNoNode;
    NodeId broken_to = kNoNode;
    std::uint32_t seq = 0;
    bool has_seq = false;
    bool final = false;  // local repair already failed; the source must rediscover
};

enum class AccusationKind : std::uint8_t { Drop, Change, Fabricate, DuplicateReply };
std::string_view to_string(AccusationKind k);

struct Alert {
    NodeId guard = kNoNode;
    NodeId accused = kNoNode;
    AccusationKind kind = AccusationKind::Drop;
    NodeId target = kNoNode;  // neighbour of the accused being informed
    MacTag mac{};             // pairwise key of (guard, target)
    std::uint8_t ttl = 3;     // relay budget; not covered by the MAC
};

struct Data {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    std::uint32_t seq = 0;
    std::uint32_t payload_size = 0;
    NodeId prev_hop = kNoNode;
};

// Local repair: the node before the faulty hop looks for a bypass to the node after it.
struct RepairRequest {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    NodeId faulty = kNoNode;
    NodeId bypass_to = kNoNode;
    NodeId target = kNoNode;
};

struct RepairUpdate {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    NodeId origin = kNoNode;  // repairing node
    NodeId target = kNoNode;  // node after the faulty hop
};

using Message = std::variant<Hello, HelloReply, NeighborList, KeyDisclosure, Rdp, Rrp, Challenge, ChallengeResponse,
                             FakeRouteReport, RenewalCommit, RenewalValue, RenewalProof, RouteError, Alert, Data,
                             RepairRequest, RepairUpdate>;

std::string_view message_name(const Message& m);

struct Frame {
    NodeId phys_tx = kNoNode;  // radio that emits the signal (simulator only)
    NodeId from = kNoNode;     // sender named in the header
    NodeId to = kBroadcast;    // addressed neighbour or broadcast
    Message body;
    bool garbled = false;  // only the header survived a collision
    bool tainted = false;  // simulator-only marker: content crossed a tunnel
    std::uint32_t size = 0;
};

std::uint32_t wire_size(const Message& m, std::uint32_t data_size);

// Bytes covered by MACs and digests.
crypto::Bytes encode_core(const RdpCore& c);
crypto::Bytes encode_core(const RrpCore& c);
crypto::Bytes encode_e2e(const RdpCore& c);  // fields under MAC_KSD, excluding the MAC itself
crypto::Bytes encode_e2e(const RrpCore& c);
crypto::Bytes encode_nbr(NodeId from, NodeId to, const Rdp& r);
crypto::Bytes encode_nbr(NodeId from, NodeId to, const Rrp& r);
crypto::Bytes encode_alert(const Alert& a);
crypto::Bytes encode_data(const Data& d);

// Timers a node asks the driver to fire back at it.
struct TDisclose {};
struct TFlush {
    NodeId src;
    std::uint32_t sn;
};
struct TWatchDeadline {
    std::uint64_t entry;
};
struct TReplyWindow {
    NodeId dst;
    std::uint32_t sn;
};
struct TDiscoveryTimeout {
    NodeId dst;
    std::uint32_t sn;
};
struct TChallengeTimeout {
    NodeId src;
    std::uint32_t sn;
};
struct TLinkFailure {
    Frame frame;
};
struct TPurgeHeld {};

using Timer = std::variant<TDisclose, TFlush, TWatchDeadline, TReplyWindow, TDiscoveryTimeout, TChallengeTimeout,
                           TLinkFailure, TPurgeHeld>;

}  // namespace srps::proto
