#include "srps/security.hpp"

#include <algorithm>
#include <random>

namespace srps::app {

using adversary::AdversaryProfile;
using adversary::Behavior;
using proto::Frame;
using proto::kBroadcast;
using proto::kNoNode;
using proto::NodeId;
using proto::Rdp;
using proto::Rrp;
using sim::Vec2;

proto::ProtocolParams bench_params() {
    proto::ProtocolParams p;
    p.chain_length = 256;
    return p;
}

Bench::Bench(std::vector<Vec2> positions, std::vector<NodeId> malicious, AdversaryProfile profile, bool srps,
             std::uint64_t seed, double range, proto::ProtocolParams base)
    : Bench(sim::make_topology(std::move(positions), range, 0), std::move(malicious), std::move(profile), srps, seed,
            base) {}

Bench::Bench(sim::Topology topo, std::vector<NodeId> malicious, AdversaryProfile profile, bool srps,
             std::uint64_t seed, proto::ProtocolParams base) {
    sim::SimParams p;
    p.proto = base;
    p.proto.srps = srps;
    p.proto.route_timeout = 1000;
    p.medium.mode = sim::PcMode::Fixed;
    p.medium.fixed_pc = 0;
    p.traffic = sim::TrafficMode::None;
    p.horizon = 1e9;
    sim_ = std::make_unique<sim::Simulator>(std::move(topo), std::move(malicious), p, std::move(profile), seed);
    sim_->keep_reports(true);
    sim_->setup();
}

void Bench::discover(NodeId src, NodeId dst, double at, double until) {
    sim_->schedule(at, [this, src, dst] { sim_->node(src).initiate_discovery(dst, *sim_); });
    sim_->run_until(until);
}

RouteView route_view(const proto::Node& n) {
    RouteView v;
    for (const auto& [dst, e] : n.routes().entries) v[dst] = {e.next_hop, e.sn};
    return v;
}

namespace {

std::uint64_t total_drops(const proto::Node& n) {
    std::uint64_t s = 0;
    for (const auto& [k, v] : n.drop_counts()) s += v;
    return s;
}

std::uint64_t drops_of(const proto::Node& n, const std::string& reason) {
    auto it = n.drop_counts().find(reason);
    return it == n.drop_counts().end() ? 0 : it->second;
}

crypto::HashValue random_hash(std::mt19937_64& rng) {
    crypto::HashValue h;
    for (auto& b : h) b = static_cast<std::uint8_t>(rng());
    return h;
}

proto::MacTag random_mac(std::mt19937_64& rng) {
    proto::MacTag m;
    for (auto& b : m) b = static_cast<std::uint8_t>(rng());
    return m;
}

}  // namespace

// ---------------------------------------------------------------- replay

ReplayOutcome replay_check(std::uint64_t seed) {
    // S - A - B - D on a line, M overhears A and B.
    enum : NodeId { S, A, B, D, M };
    std::vector<Vec2> pos = {{0, 0}, {25, 0}, {50, 0}, {75, 0}, {37, 20}};
    AdversaryProfile prof;
    prof.behaviors = {Behavior::Replay};
    Bench b(pos, {M}, prof, true, seed);
    ReplayOutcome out;
    out.rounds = 11;
    for (std::uint32_t r = 0; r < out.rounds; ++r) b.discover(S, D, 1 + 3.0 * r, 3.0 * (r + 1));
    b.run_until(3.0 * out.rounds + 5);

    std::vector<RouteView> before;
    for (NodeId n = 0; n < M; ++n) before.push_back(route_view(b.node(n)));
    auto* m = b.mal(M);
    std::vector<Frame> recorded = m->recorded_frames();
    std::uint32_t last_sn = 0;
    for (const auto& f : recorded)
        if (auto* r = std::get_if<Rdp>(&f.body)) last_sn = std::max(last_sn, r->core.sn);
    double t = b.now() + 1;
    for (const auto& f : recorded) {
        const auto* r = std::get_if<Rdp>(&f.body);
        if (!r) continue;
        out.oldest_round = std::max(out.oldest_round, last_sn - r->core.sn);
        // Verbatim, then re-signed by the insider as if it had just heard it.
        b.sim().schedule(t, [&b, m, f] { m->inject(f, b.sim()); });
        Frame resigned = f;
        std::get<Rdp>(resigned.body).prev_hop = f.from;
        resigned.to = kBroadcast;
        b.sim().schedule(t + 0.3, [&b, m, resigned] { m->inject_signed(resigned, b.sim()); });
        out.replays += 2;
        t += 0.6;
    }
    b.run_until(t + 5);
    for (NodeId n = 0; n < M; ++n)
        if (route_view(b.node(n)) != before[n]) ++out.tables_changed;
    return out;
}

// ---------------------------------------------------------------- inclusion

namespace {

enum : NodeId { kA, kX, kY, kB, kM, kG };

struct Observed {
    proto::RdpCore rdp;
    proto::RrpCore rrp;
    bool have_rdp = false;
    bool have_rrp = false;
    std::vector<Frame> frames;
};

struct Action {
    Frame frame;
    bool verbatim = false;
};

Bench make_inclusion_bench(std::uint64_t seed) {
    // A - X - Y - B path; M next to A and X; G guards the A-X link from the other side.
    std::vector<Vec2> pos = {{0, 0}, {25, 0}, {50, 0}, {75, 0}, {12, -20}, {12, 20}};
    AdversaryProfile prof;
    prof.behaviors = {Behavior::Include};
    return Bench(pos, {kM}, prof, true, seed);
}

bool route_avoids_m(Bench& b) {
    for (NodeId n : {kA, kX, kY, kB, kG})
        for (const auto& [dst, hop] : route_view(b.node(n)))
            if (hop.first == kM) return false;
    auto ra = b.node(kA).route_to(kB, b.now());
    return ra && ra->next_hop == kX;
}

Observed observe(Bench& b) {
    Observed o;
    for (const auto& f : b.mal(kM)->recorded_frames()) {
        o.frames.push_back(f);
        if (auto* r = std::get_if<Rdp>(&f.body); r && r->core.src == kA && r->core.dst == kB) {
            o.rdp = r->core;
            o.have_rdp = true;
        }
        if (auto* p = std::get_if<Rrp>(&f.body); p && p->core.src == kA && p->core.dst == kB) {
            o.rrp = p->core;
            o.have_rrp = true;
        }
    }
    return o;
}

std::vector<Action> rdp_actions(const Observed& o, std::uint32_t sn, std::mt19937_64& rng) {
    std::vector<Action> out;
    const std::uint32_t i = o.rdp.snv_index;
    std::vector<std::pair<crypto::HashValue, std::uint32_t>> snvs = {
        {o.rdp.snv_value, i},
        {o.rdp.snv_value, i - 2},
        {crypto::hash_f(o.rdp.snv_value), i + 1},
        {random_hash(rng), i - 2},
        {o.rrp.snv_value, o.rrp.snv_index},
        {o.rrp.snv_value, i - 2},
    };
    for (const auto& [v, idx] : snvs)
        for (bool real_mac : {true, false})
            for (NodeId prev : {kNoNode, NodeId(kA), NodeId(kX)}) {
                Rdp r;
                r.core = o.rdp;
                r.core.sn = sn;
                r.core.snv_value = v;
                r.core.snv_index = idx;
                if (!real_mac) r.core.e2e_mac = random_mac(rng);
                r.prev_hop = prev;
                Action a;
                a.frame.to = kBroadcast;
                a.frame.body = r;
                out.push_back(a);
            }
    return out;
}

std::vector<Action> rrp_actions(const Observed& o, std::uint32_t sn, std::mt19937_64& rng) {
    std::vector<Action> out;
    const std::uint32_t i = o.rrp.snv_index;
    std::vector<std::pair<crypto::HashValue, std::uint32_t>> snvs = {
        {o.rrp.snv_value, i},
        {o.rrp.snv_value, i - 2},
        {crypto::hash_f(o.rrp.snv_value), i + 1},
        {random_hash(rng), i - 2},
        {o.rdp.snv_value, o.rdp.snv_index},
    };
    for (const auto& [v, idx] : snvs)
        for (bool real_mac : {true, false})
            for (NodeId prev : {kNoNode, NodeId(kY), NodeId(kB)})
                for (NodeId echo : {kNoNode, NodeId(kA)})
                    for (NodeId to : {kA, kX}) {
                        Rrp r;
                        r.core = o.rrp;
                        r.core.sn = sn;
                        r.core.snv_value = v;
                        r.core.snv_index = idx;
                        if (!real_mac) r.core.e2e_mac = random_mac(rng);
                        r.prev_hop = prev;
                        r.echo = echo;
                        Action a;
                        a.frame.to = to;
                        a.frame.body = r;
                        out.push_back(a);
                    }
    return out;
}

}  // namespace

InclusionOutcome inclusion_check(std::uint64_t seed) {
    InclusionOutcome out;
    // Find a seed whose honest discovery leaves M off the A-B route.
    std::uint64_t base = seed;
    Observed obs;
    for (;; ++base) {
        Bench b = make_inclusion_bench(base);
        b.discover(kA, kB, 1, 4);
        obs = observe(b);
        if (route_avoids_m(b) && obs.have_rdp && obs.have_rrp) break;
        ++out.setups_skipped;
        if (out.setups_skipped > 200) return out;
    }

    std::mt19937_64 rng(seed);
    std::vector<std::vector<Action>> schedules;
    for (const auto& f : obs.frames) schedules.push_back({Action{f, true}});
    for (std::uint32_t sn : {obs.rdp.sn, obs.rdp.sn + 1}) {
        auto rdps = rdp_actions(obs, sn, rng);
        auto rrps = rrp_actions(obs, sn, rng);
        for (const auto& a : rdps) schedules.push_back({a});
        for (const auto& a : rrps) schedules.push_back({a});
        for (const auto& a : rdps)
            for (const auto& r : rrps) schedules.push_back({a, r});
    }

    for (const auto& sched : schedules) {
        Bench b = make_inclusion_bench(base);
        b.discover(kA, kB, 1, 4);
        RouteView at_a = route_view(b.node(kA));
        RouteView at_x = route_view(b.node(kX));
        auto* m = b.mal(kM);
        double t = 5;
        for (const auto& act : sched) {
            Frame f = act.frame;
            if (act.verbatim)
                b.sim().schedule(t, [&b, m, f] { m->inject(f, b.sim()); });
            else
                b.sim().schedule(t, [&b, m, f] { m->inject_signed(f, b.sim()); });
            t += 0.3;
        }
        b.run_until(t + 4);
        ++out.schedules;
        if (route_view(b.node(kA)) != at_a || route_view(b.node(kX)) != at_x) ++out.altered;
        if (!route_avoids_m(b)) ++out.adversary_on_route;
    }
    return out;
}

// ---------------------------------------------------------------- wormhole branches

namespace {

// Two islands joined only by the tunnel: S - M1 on the left; Z - M2 - W - D on the right, Z and W out of each
// other's range so only Z can judge a claim naming Z.
enum : NodeId { tS, tM1, tZ, tM2, tW, tD };

Bench make_tunnel_bench(std::uint64_t seed, adversary::Claim near_claim, adversary::Claim far_claim) {
    std::vector<Vec2> pos = {{0, 0}, {25, 0}, {150, 0}, {175, 0}, {200, 0}, {225, 0}};
    AdversaryProfile prof;
    prof.behaviors = {Behavior::Wormhole, Behavior::Rush};
    Bench b(pos, {tM1, tM2}, prof, true, seed);
    b.mal(tM1)->mutable_profile().claim = near_claim;
    b.mal(tM2)->mutable_profile().claim = far_claim;
    return b;
}

}  // namespace

TruthOutcome wormhole_truth_check(std::uint64_t seed) {
    TruthOutcome out;
    {
        Bench b = make_tunnel_bench(seed, adversary::Claim::Truth, adversary::Claim::Truth);
        std::map<NodeId, std::uint64_t> before;
        for (NodeId n : {tZ, tW}) before[n] = drops_of(b.node(n), "not-neighbor");
        b.discover(tS, tD, 1, 4);
        for (NodeId n : {tZ, tW}) {
            ++out.request_receivers;
            if (drops_of(b.node(n), "not-neighbor") > before[n]) ++out.request_rejected;
        }
    }
    // The far end lies so the request reaches D; the near end tells the truth on the way back.
    for (std::uint64_t s = seed; s < seed + 20 && !out.reply_rejected; ++s) {
        Bench b = make_tunnel_bench(s, adversary::Claim::Truth, adversary::Claim::Lie);
        for (int k = 0; k < 10 && !out.reply_rejected; ++k) {
            const auto& reports = b.sim().reports();
            std::size_t seen = reports.size();
            std::uint64_t before = drops_of(b.node(tS), "not-neighbor");
            b.discover(tS, tD, b.now() + 1, b.now() + 5);
            bool truthful_reply = false;
            for (std::size_t i = seen; i < reports.size(); ++i)
                if (reports[i].kind == proto::ReportKind::MaliciousEvent && reports[i].node == tM1 &&
                    reports[i].reason == "rrp" && reports[i].b == tM2)
                    truthful_reply = true;
            if (truthful_reply && drops_of(b.node(tS), "not-neighbor") > before) out.reply_rejected = true;
            if (auto r = b.node(tS).route_to(tD, b.now()); r && r->next_hop == tM1)
                out.source_route_via_wormhole = true;
        }
    }
    return out;
}

LieOutcome wormhole_lie_check(std::uint64_t seed, std::uint32_t trials) {
    // Both islands carry guards around the compromised endpoint.
    std::vector<Vec2> pos = {
        {0, 0},    {25, 0},    {12, 14},   {12, -14},  {50, 0},    // S, M1, L1, L2, L3
        {175, 0},  {150, 0},   {162, 14},  {162, -14}, {200, 0},   // M2, Z, G1, G2, D
    };
    const NodeId S = 0, M1 = 1, M2 = 5, D = 9;
    LieOutcome out;
    for (std::uint32_t k = 0; k < trials; ++k) {
        AdversaryProfile prof;
        prof.behaviors = {Behavior::Wormhole, Behavior::Rush};
        prof.claim = adversary::Claim::Lie;
        Bench b(pos, {M1, M2}, prof, true, seed + k);
        b.discover(S, D, 1, 6);
        const auto& topo = b.sim().topology();
        const auto& reports = b.sim().reports();
        const auto& times = b.sim().report_times();
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& r = reports[i];
            if (r.kind != proto::ReportKind::MaliciousEvent || r.b == kNoNode) continue;
            ++out.events;
            const NodeId mal = r.node;
            const NodeId claim = r.b;
            std::vector<NodeId> guards = topo.common_neighbors(claim, mal);
            guards.push_back(claim);
            for (NodeId g : guards) {
                if (g == M1 || g == M2) continue;
                // A guard that has already cut the node off no longer listens to it.
                bool isolated_before = false;
                bool accused = false;
                for (std::size_t j = 0; j < reports.size(); ++j) {
                    const auto& q = reports[j];
                    if (q.node != g || q.a != mal) continue;
                    if (q.kind == proto::ReportKind::Isolated && times[j] < times[i]) isolated_before = true;
                    if (q.kind == proto::ReportKind::Accusation && q.akind == proto::AccusationKind::Fabricate &&
                        times[j] >= times[i] && times[j] <= times[i] + 1.0)
                        accused = true;
                }
                if (isolated_before) continue;
                ++out.guard_slots;
                if (accused) ++out.guard_accusations;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- spoof and Sybil

namespace {

// S - A - M - B - V on a line, C above M; V is out of M's range.
enum : NodeId { jS, jA, jM, jB, jV, jC };

Bench make_injection_bench(std::uint64_t seed) {
    std::vector<Vec2> pos = {{0, 0}, {25, 0}, {50, 0}, {75, 0}, {100, 0}, {50, 25}};
    AdversaryProfile prof;
    prof.behaviors = {Behavior::Spoof, Behavior::Sybil};
    return Bench(pos, {jM}, prof, true, seed);
}

struct Injection {
    Frame frame;
    NodeId victim;                    // identity whose next key gets disclosed afterwards, if any
    std::vector<NodeId> receivers;    // honest nodes expected to reject
};

void run_injection(Bench& b, const Injection& inj, InjectionOutcome& out) {
    std::map<NodeId, std::uint64_t> before;
    std::map<NodeId, RouteView> routes_before;
    for (NodeId n : inj.receivers) {
        before[n] = total_drops(b.node(n));
        routes_before[n] = route_view(b.node(n));
    }
    auto* m = b.mal(jM);
    double t = b.now() + 0.5;
    Frame f = inj.frame;
    b.sim().schedule(t, [&b, m, f] { m->inject(f, b.sim()); });
    // The real owner of a spoofed identity transmits next, disclosing the key the forger guessed. The target does
    // not exist, so this request never installs a route anywhere.
    if (inj.victim != kNoNode)
        b.sim().schedule(t + 0.2, [&b, v = inj.victim] { b.node(v).initiate_discovery(4242, b.sim()); });
    b.run_until(t + 3);
    ++out.injections;
    std::uint32_t sn = 0;
    NodeId src = kNoNode;
    if (auto* r = std::get_if<Rdp>(&f.body)) {
        sn = r->core.sn;
        src = r->core.src;
    } else if (auto* p = std::get_if<Rrp>(&f.body)) {
        sn = p->core.sn;
        src = p->core.src;
    }
    for (NodeId n : inj.receivers) {
        ++out.receivers;
        bool took = route_view(b.node(n)) != routes_before[n];
        if (std::holds_alternative<Rdp>(f.body) && b.node(n).request_state(src, sn)) took = true;
        if (took) ++out.accepted;
        if (total_drops(b.node(n)) > before[n]) ++out.rejected;
    }
}

Frame forged_rdp(NodeId claimed_from, NodeId src, NodeId dst, std::uint32_t key_index, std::mt19937_64& rng) {
    Rdp r;
    r.core.src = src;
    r.core.dst = dst;
    r.core.sn = 777;
    r.core.snv_value = random_hash(rng);
    r.core.snv_index = 200;
    r.core.e2e_mac = random_mac(rng);
    r.prev_hop = src == claimed_from ? kNoNode : src;
    r.key_index = key_index;
    r.nbr_mac = random_mac(rng);
    Frame f;
    f.from = claimed_from;
    f.to = kBroadcast;
    f.body = r;
    return f;
}

Frame forged_rrp(NodeId claimed_from, NodeId to, NodeId src, NodeId dst, std::uint32_t key_index,
                 std::mt19937_64& rng) {
    Rrp p;
    p.core.src = src;
    p.core.dst = dst;
    p.core.sn = 1;
    p.core.snv_value = random_hash(rng);
    p.core.snv_index = 200;
    p.core.e2e_mac = random_mac(rng);
    p.prev_hop = dst == claimed_from ? kNoNode : dst;
    p.key_index = key_index;
    p.nbr_mac = random_mac(rng);
    Frame f;
    f.from = claimed_from;
    f.to = to;
    f.body = p;
    return f;
}

std::uint32_t next_key_position(Bench& b, NodeId observer, NodeId owner) {
    const auto& c = b.node(observer).neighbors().commitments;
    auto it = c.find(owner);
    return it == c.end() || it->second.position == 0 ? 0 : it->second.position - 1;
}

}  // namespace

InjectionOutcome spoof_check(std::uint64_t seed) {
    InjectionOutcome out;
    std::mt19937_64 rng(seed);
    // Neighbour victim B: A and C hear a request that claims to come from B.
    {
        Bench b = make_injection_bench(seed);
        std::uint32_t k = next_key_position(b, jA, jB);
        run_injection(b, {forged_rdp(jB, jB, jS, k, rng), jB, {jA, jC}}, out);
    }
    // Non-neighbour victim V: only B knows V, the others see a stranger.
    {
        Bench b = make_injection_bench(seed + 1);
        std::uint32_t k = next_key_position(b, jB, jV);
        run_injection(b, {forged_rdp(jV, jV, jS, k, rng), jV, {jA, jB, jC}}, out);
    }
    // Reply addressed to A in B's name for a discovery A really started.
    {
        Bench b = make_injection_bench(seed + 2);
        b.discover(jA, jV, 1, 4);
        std::uint32_t k = next_key_position(b, jA, jB);
        run_injection(b, {forged_rrp(jB, jA, jA, jV, k, rng), jB, {jA}}, out);
    }
    return out;
}

InjectionOutcome sybil_check(std::uint64_t seed) {
    InjectionOutcome out;
    std::mt19937_64 rng(seed);
    for (NodeId fake : {NodeId(9000), NodeId(9001), NodeId(9002)}) {
        Bench b = make_injection_bench(seed + fake);
        run_injection(b, {forged_rdp(fake, fake, jS, 100, rng), kNoNode, {jA, jB, jC}}, out);
        run_injection(b, {forged_rrp(fake, jA, jA, fake, 100, rng), kNoNode, {jA}}, out);
    }
    return out;
}

// ---------------------------------------------------------------- rushing

RushOutcome rushing_check(bool srps, std::uint32_t trials, std::uint64_t seed) {
    // S reaches V only through the rusher R or the honest relays H1..H3, which cannot hear one another, so no
    // relay's forward suppresses another's copy at V.
    enum : NodeId { S, R, H1, H2, H3, V, D };
    sim::Topology topo;
    topo.range_r = 30;
    topo.positions = {{0, 0}, {20, -12}, {20, -4}, {20, 4}, {20, 12}, {40, 0}, {65, 0}};
    topo.adj = {{R, H1, H2, H3}, {S, V}, {S, V}, {S, V}, {S, V}, {R, H1, H2, H3, D}, {V}};
    RushOutcome out;
    for (std::uint32_t k = 0; k < trials; ++k) {
        AdversaryProfile prof;
        prof.behaviors = {Behavior::Rush};
        Bench b(topo, {R}, prof, srps, seed + k);
        if (srps) {
            // V keeps collecting until every relay's copy is in its buffer.
            auto& p = b.node(V).mutable_params();
            p.t_r_min = p.t_r_max = 1.0;
        }
        auto sn = std::optional<std::uint32_t>{};
        b.sim().schedule(1, [&] { sn = b.node(S).initiate_discovery(D, b.sim()); });
        b.run_until(3);
        ++out.trials;
        const auto* st = sn ? b.node(V).request_state(S, *sn) : nullptr;
        if (st && st->forwarded && st->heard_from == R) ++out.captured;
    }
    return out;
}

}  // namespace srps::app
