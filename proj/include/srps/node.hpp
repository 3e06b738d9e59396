#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "srps/crypto.hpp"
#include "srps/messages.hpp"

namespace srps::proto {

struct ProtocolParams {
    bool srps = true;  // false: unprotected first-heard flooding
    std::uint32_t chain_length = 4096;
    std::uint32_t snv_length = 256;
    std::uint32_t nbr_max_gap = 64;
    std::uint32_t snv_max_gap = 4;
    double t_r_min = 0.05;
    double t_r_max = 0.25;
    double baseline_jitter = 0.01;  // broadcast jitter of first-heard flooding
    std::uint32_t n_r = 5;
    double tau = 0.5;
    double disclose_delay = 0.005;
    double hold_timeout = 2.0;
    double forward_threshold = 0.024;
    double proc_delay = 0.001;
    std::uint32_t beta = 5;
    std::uint32_t gamma = 3;
    double t_window = 200;
    double route_timeout = 50;
    double discovery_timeout = 2.0;
    std::uint32_t discovery_retries = 3;
    std::uint32_t max_replies = 3;
    std::uint32_t watch_capacity = 512;
    std::uint32_t data_queue = 32;
    std::uint32_t data_size = 36;
    bool monitor_data = true;
    bool collision_aware = true;
    bool version2 = false;
    bool ondemand_challenge = true;
    double challenge_timeout = 2.0;
    int maintenance_policy = 1;  // 1 alternate route, 2 rediscover, 3 local repair
};

struct Commitment {
    HashValue value{};
    std::uint32_t position = 0;
};

struct NeighborTable {
    std::set<NodeId> one_hop;
    std::map<NodeId, std::set<NodeId>> two_hop;
    std::map<NodeId, Commitment> commitments;

    bool is_neighbor(NodeId n) const { return one_hop.count(n) != 0; }
    bool neighbor_of(NodeId a, NodeId b) const;  // b listed among a's neighbours
};

struct RouteEntry {
    NodeId next_hop = kNoNode;
    std::uint32_t sn = 0;
    Time installed = 0;
    Time expires = 0;
    bool tainted = false;
    bool pending = false;          // awaiting a challenge answer
    NodeId second_next = kNoNode;  // hop after next_hop, learned from the reply
};

struct RoutingTable {
    std::map<NodeId, RouteEntry> entries;
    std::map<NodeId, std::vector<RouteEntry>> alternates;
};

struct PairChainRecord {
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    std::uint32_t sn = 0;
    HashValue stored_v{};
    std::uint32_t stored_index = 0;
    bool pending = false;
    bool verified = false;  // confirmed by a reply, challenge or renewal
    bool first_contact = false;
    NodeId first_heard_from = kNoNode;
    NodeId first_second_hop = kNoNode;
    // Renewal progress.
    std::optional<crypto::Bytes> renewal_ct;
    std::optional<HashValue> renewal_un;
    std::uint32_t renewal_sn = 0;
};

struct RequestBufferEntry {
    RdpCore rdp_core;
    NodeId heard_from = kNoNode;
    NodeId second_hop = kNoNode;
    bool suppressed = false;
    bool tainted = false;
};

struct RequestState {
    RdpCore core;
    std::vector<RequestBufferEntry> buffer;
    std::set<NodeId> suppressed_origins;
    bool collecting = false;
    bool flushed = false;
    bool forwarded = false;
    NodeId heard_from = kNoNode;
    NodeId second_hop = kNoNode;
    bool reply_forwarded = false;
    bool via_tunnel = false;
    bool tainted = false;
    Time created = 0;
};

enum class WatchKind : std::uint8_t { Rdp, Rrp, Data };

struct WatchKey {
    NodeId sender;
    WatchKind kind;
    NodeId src;
    NodeId dst;
    std::uint32_t num;  // SN or data sequence
    auto operator<=>(const WatchKey&) const = default;
};

struct WatchEntry {
    std::uint64_t id = 0;
    WatchKey key{};
    HashValue packet_digest{};
    NodeId expected_forwarder = kNoNode;  // link receiver
    NodeId origin_hop = kNoNode;          // prev hop named in the frame
    Time recorded_at = 0;
    Time deadline = 0;                    // only meaningful for forwarding obligations
    bool garbled = false;
    bool obligation = false;
    bool satisfied = false;
    bool judged = false;  // the sender's behaviour for this key has been assessed
};

struct AccusationLedger {
    std::map<NodeId, std::deque<Time>> mal_c;
    std::map<NodeId, std::set<NodeId>> alerts_received;
    std::set<NodeId> alerted;  // accused this node has raised an alert about
    std::set<NodeId> isolated;
    std::map<NodeId, std::uint32_t> auth_failures;
};

enum class Role : std::uint8_t { Source, Intermediate, Destination };
enum class CostItem : std::uint8_t {
    MacE2eSign,
    MacNbrSign,
    MacRsn,
    HashSnv,
    HashNextKey,
    HashKeyVerify,
    MacNbrVerify,
    HashPairVerify,
    MacE2eVerify,
    MacReplySign,
    Count
};
std::string_view to_string(CostItem c);

// Per-role operation accounting for one discovery plus raw primitive counts.
struct CostMeter {
    std::array<std::array<std::uint64_t, std::size_t(CostItem::Count)>, 3> items{};
    std::uint64_t raw_mac = 0;
    std::uint64_t raw_hash = 0;

    void add(Role r, CostItem c) { ++items[std::size_t(r)][std::size_t(c)]; }
    std::uint64_t get(Role r, CostItem c) const { return items[std::size_t(r)][std::size_t(c)]; }
    // Counts restricted to the operations the cost model lists for the role.
    std::pair<std::uint64_t, std::uint64_t> model_counts(Role r) const;
};

enum class ReportKind : std::uint8_t {
    RouteInstalled,
    DataGenerated,
    DataDelivered,
    DataDropped,
    Accusation,
    AlertSent,
    Isolated,
    DiscoveryStarted,
    DiscoveryFailed,
    MaliciousEvent,
    AuthFailure,
    ChallengeAccepted,
    ChallengeRejected,
    RenewalAdopted,
    FakeRouteTraced,
};

struct Report {
    ReportKind kind;
    NodeId node = kNoNode;  // reporter
    NodeId a = kNoNode;     // primary subject (destination, accused, source)
    NodeId b = kNoNode;
    std::uint32_t seq = 0;
    bool flag = false;  // tainted route / malicious drop
    AccusationKind akind = AccusationKind::Drop;
    std::string_view reason{};
};

class Context {
public:
    virtual ~Context() = default;
    virtual Time now() const = 0;
    // Starts transmitting after `delay`; returns the time the transmission ends.
    virtual Time transmit(Frame f, Time delay) = 0;
    virtual void set_timer(NodeId self, Timer t, Time delay) = 0;
    virtual std::mt19937_64& rng(NodeId self) = 0;
    virtual const crypto::KeyOracle& keys() const = 0;
    // Delivers a rekeyed chain anchor to the neighbours through the trusted oracle.
    virtual void announce_rekey(NodeId /*self*/, const Commitment& /*c*/) {}
    // Out-of-radio delivery between colluding nodes.
    virtual void tunnel(NodeId /*self*/, NodeId /*to*/, Frame /*f*/, Time /*delay*/) {}
    virtual bool tracing() const { return false; }
    virtual void trace(NodeId, std::string_view, std::string_view, std::string_view) {}
    virtual void report(const Report&) {}
};

class Node {
public:
    Node(NodeId id, ProtocolParams params, const crypto::SymKey& chain_seed);
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    NodeId id() const { return id_; }
    const ProtocolParams& params() const { return params_; }
    ProtocolParams& mutable_params() { return params_; }

    // Setup, run before any adversary is active.
    void begin_setup(Context& ctx);
    void announce_neighbors(Context& ctx);
    // Builds one-hop and commitment tables directly from collected replies.
    void setup_round(const std::vector<HelloReply>& replies);
    void set_two_hop(NodeId neighbor, std::set<NodeId> their_neighbors);
    void finish_setup() { setup_open_ = false; }

    virtual void on_frame(const Frame& f, Context& ctx);
    virtual void on_timer(const Timer& t, Context& ctx);
    // Frame handed over by a colluder through a tunnel.
    virtual void on_tunnel(const Frame&, Context&) {}

    // Application traffic.
    void send_data(NodeId dst, std::uint32_t seq, Context& ctx);
    // Returns the SN used, or nullopt if no discovery could start.
    std::optional<std::uint32_t> initiate_discovery(NodeId dst, Context& ctx);

    const NeighborTable& neighbors() const { return nbrs_; }
    const RoutingTable& routes() const { return routes_; }
    const AccusationLedger& ledger() const { return ledger_; }
    const CostMeter& costs() const { return costs_; }
    void reset_costs() { costs_ = {}; }
    const crypto::ChainState& chain() const { return chain_; }
    const std::map<std::pair<NodeId, NodeId>, PairChainRecord>& pair_records() const { return pairs_; }
    const std::deque<WatchEntry>& watch_buffer() const { return watch_; }
    const RequestState* request_state(NodeId src, std::uint32_t sn) const;
    std::optional<RouteEntry> route_to(NodeId dst, Time now) const;
    // Alternates ranked by reply arrival, primary first.
    std::vector<RouteEntry> ranked_routes(NodeId dst) const;
    bool is_isolated(NodeId n) const { return ledger_.isolated.count(n) != 0; }
    std::uint32_t sequence_number() const { return sn_counter_; }
    std::uint32_t next_request_index(NodeId dst) const;
    const std::vector<FakeRouteReport>& fake_route_reports() const { return fake_reports_; }
    // Drop reasons this node has logged, for tests.
    const std::map<std::string, std::uint64_t>& drop_counts() const { return drops_; }
    std::size_t queued_data() const {
        std::size_t n = 0;
        for (const auto& [dst, q] : data_queue_) n += q.size();
        return n;
    }

    // Rekeys the neighbourhood chain; neighbours receive the new anchor through the trusted oracle.
    void rekey(const crypto::SymKey& seed);
    void install_commitment(NodeId neighbor, const Commitment& c);

    // Feeds a reply window / request buffer directly; used by unit tests.
    struct ReplyArrival {
        NodeId next_hop;
        Time arrival;
        bool tainted = false;
    };
    static std::vector<ReplyArrival> reply_priority(std::vector<ReplyArrival> replies, double tau);

protected:
    struct Held {
        Frame frame;
        Time received = 0;
        std::uint32_t key_index = 0;
    };

    struct Discovery {
        std::uint32_t sn = 0;
        std::uint32_t req_idx = 0;
        Time started = 0;
        std::optional<Time> first_reply;
        std::vector<ReplyArrival> replies;
        std::uint32_t attempts = 0;
        bool active = false;
        bool window_closed = false;
    };

    struct SourceChain {
        crypto::SnvChain chain;
        std::uint32_t next_req_idx = 0;
        std::uint32_t last_rep_idx = 0;
        bool renewing = false;
        std::optional<crypto::SnvChain> next_chain;
        bool value_seen = false;
    };

    struct DestChain {
        crypto::SnvChain chain;
        std::uint32_t last_req_idx = 0;
        std::uint32_t last_sn = 0;
        std::set<NodeId> replied_to;
        std::map<std::uint32_t, std::set<NodeId>> replied_by_sn;  // recent requests only
        std::uint32_t last_rep_idx = 0;
        std::optional<crypto::SnvChain> next_chain;
    };

    struct PendingChallenge {
        NodeId src = kNoNode;
        std::uint32_t sn = 0;
        std::uint64_t nonce = 0;
        bool on_demand = false;
        std::optional<Frame> held_rdp;
        NodeId dst = kNoNode;
    };

    // --- helpers shared by handlers
    void trace(Context& ctx, std::string_view event, std::string_view action, std::string_view reason = "") const;
    void drop(Context& ctx, std::string_view event, std::string_view reason);
    Time send(Context& ctx, Frame f, Time extra_delay = 0);
    // Signs with the next neighbourhood key and schedules its disclosure.
    Time send_authenticated(Context& ctx, Frame f, Role role, bool counted, Time extra_delay = 0);
    void install_route(Context& ctx, NodeId dst, NodeId next_hop, std::uint32_t sn, bool tainted, bool pending = false);
    void purge_routes_via(NodeId n);
    bool auth_stale(NodeId sender, std::uint32_t key_index) const;

    // --- frame handlers
    void handle_hello(const Frame& f, const Hello& h, Context& ctx);
    void handle_hello_reply(const Frame& f, const HelloReply& h, Context& ctx);
    void handle_neighbor_list(const Frame& f, const NeighborList& n, Context& ctx);
    void handle_key(const Frame& f, const KeyDisclosure& k, Context& ctx);
    void handle_authenticated(const Frame& f, Context& ctx);
    // Runs once the neighbour MAC has verified (or directly in baseline mode).
    void process_authenticated(const Frame& f, Time received, Context& ctx);
    virtual void on_rdp(const Frame& f, const Rdp& r, Time received, Context& ctx);
    virtual void on_rrp(const Frame& f, const Rrp& r, Time received, Context& ctx);
    void on_rdp_at_destination(const Frame& f, const Rdp& r, Context& ctx);
    void on_rrp_at_source(const Frame& f, const Rrp& r, Context& ctx);
    void handle_data(const Frame& f, const Data& d, Context& ctx);
    void handle_route_error(const Frame& f, const RouteError& e, Context& ctx);
    void handle_alert(const Frame& f, const Alert& a, Context& ctx);
    void handle_challenge(const Frame& f, const Challenge& c, Context& ctx);
    void handle_challenge_response(const Frame& f, const ChallengeResponse& c, Context& ctx);
    void handle_fake_report(const Frame& f, const FakeRouteReport& r, Context& ctx);
    void handle_renewal_commit(const Frame& f, const RenewalCommit& m, Context& ctx);
    void handle_renewal_value(const Frame& f, const RenewalValue& m, Context& ctx);
    void handle_renewal_proof(const Frame& f, const RenewalProof& m, Context& ctx);
    void handle_repair_request(const Frame& f, const RepairRequest& m, Context& ctx);
    void handle_repair_update(const Frame& f, const RepairUpdate& m, Context& ctx);
    void handle_link_failure(const Frame& f, Context& ctx);

    // --- discovery internals
    enum class SnvVerdict { Accept, Replay, Duplicate, BadSnv, Resync };
    SnvVerdict check_request_snv(const RdpCore& c, NodeId heard_from);
    void accept_request(const RdpCore& c, NodeId heard_from, NodeId second_hop, bool tainted, Context& ctx);
    void buffer_request(const RdpCore& c, NodeId heard_from, NodeId second_hop, bool tainted, Context& ctx);
    void flush_request_buffer(NodeId src, std::uint32_t sn, Context& ctx);
    void forward_request(RequestState& st, const RequestBufferEntry& e, Context& ctx);
    virtual void forward_reply(RequestState& st, const Rrp& r, NodeId from, bool tainted, Context& ctx);
    void close_reply_window(NodeId dst, std::uint32_t sn, Context& ctx);
    void discovery_timeout(NodeId dst, std::uint32_t sn, Context& ctx);
    void flush_data_queue(NodeId dst, Context& ctx);
    void start_renewal(NodeId dst, Context& ctx);
    void start_challenge(NodeId src, std::uint32_t sn, NodeId via, bool on_demand, std::optional<Frame> held,
                         NodeId dst, Context& ctx);
    void route_maintenance(NodeId dst, NodeId broken_next, Context& ctx);
    // Routes a control message one hop toward `target` using routes or request state.
    bool relay_toward(Context& ctx, NodeId target, Message body, NodeId src_for_state, std::uint32_t sn_for_state,
                      bool use_request_state);

    // --- adversary decision points
    virtual Time request_wait(Context& ctx);
    virtual void after_request_accepted(const RdpCore&, NodeId /*heard_from*/, Context&) {}
    // Returns true if the data frame was consumed without forwarding.
    virtual bool intercept_data(const Frame&, const Data&, Context&) { return false; }

    // --- monitoring
    // Watch entries for control frames are taken on reception, before authentication.
    void monitor_record(const Frame& f, Time now);
    // Returns true if this frame draws an accusation from this node.
    bool monitor_observe(const Frame& f, Time received, Context& ctx);
    void watch_data_link(NodeId sender, NodeId receiver, const Data& d, Time now, Context& ctx, Time settle = 0);
    bool already_judged(const WatchKey& key);
    void forward_data(const Data& d, NodeId next_hop, NodeId prev_hop, bool tainted, Context& ctx);
    void complete_renewal(PairChainRecord& rec, Context& ctx);
    void repair_done(NodeId target, bool ok, Context& ctx);
    void monitor_garbled(const Frame& f, Context& ctx);
    WatchEntry& watch_record(const WatchKey& key, const HashValue& digest, NodeId receiver, NodeId origin,
                             Time now, bool garbled);
    const WatchEntry* find_watch(const WatchKey& key, Time before, NodeId receiver, bool any_receiver) const;
    void watch_deadline(std::uint64_t entry, Context& ctx);
    void accuse(NodeId accused, AccusationKind kind, Context& ctx);
    void send_alert(NodeId accused, AccusationKind kind, NodeId target, Context& ctx);
    // Moves an alert one step toward its target: direct, via a known two-hop relay, by route, or
    // as a bounded spread through the accused node's other neighbours.
    void forward_alert(const Alert& a, NodeId came_from, Context& ctx);
    void note_alert(NodeId guard, NodeId accused, Context& ctx);
    bool guards_link(NodeId from, NodeId to) const;

    NodeId id_;
    ProtocolParams params_;
    crypto::ChainState chain_;
    std::uint32_t chain_epoch_ = 0;
    std::deque<std::uint32_t> pending_disclosures_;
    NeighborTable nbrs_;
    RoutingTable routes_;
    std::map<std::pair<NodeId, NodeId>, PairChainRecord> pairs_;  // (src, dst)
    std::map<std::pair<NodeId, std::uint32_t>, RequestState> requests_;  // (src, sn)
    std::map<NodeId, std::vector<Held>> held_;
    std::deque<WatchEntry> watch_;
    std::map<WatchKey, std::vector<std::uint64_t>> watch_index_;
    std::uint64_t next_watch_id_ = 1;
    std::map<std::tuple<NodeId, NodeId, NodeId, std::uint32_t>, std::pair<Time, HashValue>> reply_watch_;
    AccusationLedger ledger_;
    CostMeter costs_;
    std::uint32_t sn_counter_ = 0;
    std::map<NodeId, Discovery> discoveries_;
    std::map<NodeId, SourceChain> src_chains_;
    std::map<NodeId, DestChain> dst_chains_;
    std::map<NodeId, std::deque<Data>> data_queue_;
    std::map<std::pair<NodeId, std::uint32_t>, PendingChallenge> challenges_;  // (src, sn)
    std::map<std::pair<NodeId, std::uint32_t>, NodeId> challenge_back_;      // (challenger, sn) -> hop toward it
    std::vector<FakeRouteReport> fake_reports_;
    std::map<std::string, std::uint64_t> drops_;
    std::deque<std::pair<Time, std::pair<NodeId, std::uint32_t>>> request_order_;
    std::deque<std::pair<Time, std::tuple<NodeId, NodeId, NodeId, std::uint32_t>>> reply_watch_order_;
    std::map<std::tuple<NodeId, NodeId, std::uint32_t>, std::uint64_t> obligations_;  // (forwarder, src, seq)
    std::map<NodeId, std::pair<NodeId, NodeId>> repairs_;  // bypass target -> (src, dst)
    std::set<std::uint32_t> issued_sns_;
    std::map<NodeId, NodeId> bypass_hint_;  // destination -> hop after a broken next hop
    std::map<std::pair<NodeId, NodeId>, HashValue> renewal_proofs_;  // proof waiting for its value
    std::set<std::tuple<NodeId, NodeId, NodeId>> relayed_alerts_;  // (guard, accused, target)
    std::map<NodeId, std::set<NodeId>> isolated_nbrs_;  // neighbour lists of isolated nodes
    bool setup_open_ = true;
};

}  // namespace srps::proto
