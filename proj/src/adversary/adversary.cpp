#include "srps/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srps::adversary {

using namespace proto;

std::string to_string(Behavior b) {
    switch (b) {
        case Behavior::Wormhole: return "wormhole";
        case Behavior::Rush: return "rush";
        case Behavior::Replay: return "replay";
        case Behavior::Spoof: return "spoof";
        case Behavior::Sybil: return "sybil";
        case Behavior::Include: return "include";
        case Behavior::DropData: return "drop_data";
        case Behavior::Selective: return "selective";
    }
    return "?";
}

std::optional<Behavior> behavior_from_string(const std::string& s) {
    for (Behavior b : {Behavior::Wormhole, Behavior::Rush, Behavior::Replay, Behavior::Spoof, Behavior::Sybil,
                       Behavior::Include, Behavior::DropData, Behavior::Selective})
        if (to_string(b) == s) return b;
    return std::nullopt;
}

void validate(const AdversaryProfile& p) {
    if (p.has(Behavior::Wormhole) && p.colluders.size() < 2)
        throw std::invalid_argument("wormhole needs at least two colluders");
    if (p.selective_fraction < 0 || p.selective_fraction > 1)
        throw std::invalid_argument("selective fraction must lie in [0, 1]");
    if (p.window <= 0) throw std::invalid_argument("adversary window must be positive");
}

double tunnel_latency(const AdversaryProfile& p, std::uint32_t hops_between) {
    return p.tunnel_mode == TunnelMode::OutOfBand ? 0.0 : p.hop_latency * hops_between;
}

MaliciousNode::MaliciousNode(NodeId id, ProtocolParams params, const crypto::SymKey& chain_seed,
                             AdversaryProfile profile)
    : Node(id, params, chain_seed), profile_(std::move(profile)) {
    validate(profile_);
}

bool MaliciousNode::active(Time now) const { return now >= profile_.start_s; }

bool MaliciousNode::take_event(Time now) {
    long w = static_cast<long>(std::floor((now - profile_.start_s) / profile_.window));
    if (w != window_index_) {
        window_index_ = w;
        window_events_ = 0;
        fixed_target_ = kNoNode;
    }
    if (profile_.events_per_window && window_events_ >= profile_.events_per_window) return false;
    ++window_events_;
    return true;
}

NodeId MaliciousNode::lie_target(Time now, NodeId avoid_a, NodeId avoid_b, Context& ctx) {
    (void)now;
    std::vector<NodeId> pool;
    for (NodeId n : nbrs_.one_hop)
        if (n != avoid_a && n != avoid_b) pool.push_back(n);
    if (pool.empty()) return kNoNode;
    if (profile_.lie_target == LieTarget::FixedPerWindow) {
        if (fixed_target_ == kNoNode || !nbrs_.is_neighbor(fixed_target_)) {
            std::vector<NodeId> all(nbrs_.one_hop.begin(), nbrs_.one_hop.end());
            std::uniform_int_distribution<std::size_t> u(0, all.size() - 1);
            fixed_target_ = all[u(ctx.rng(id_))];
        }
        return fixed_target_;
    }
    // Prefer a claimed hop the receiver cannot overhear, so the receiver itself does not judge the lie.
    std::vector<NodeId> blind;
    if (avoid_b != kNoNode)
        for (NodeId n : pool)
            if (!nbrs_.neighbor_of(avoid_b, n)) blind.push_back(n);
    const auto& from = blind.empty() ? pool : blind;
    std::uniform_int_distribution<std::size_t> u(0, from.size() - 1);
    return from[u(ctx.rng(id_))];
}

bool MaliciousNode::tunnel_route(NodeId dst, Time now) const {
    auto it = tunnel_routes_.find(dst);
    return it != tunnel_routes_.end() && it->second.second > now;
}

void MaliciousNode::inject(Frame f, Context& ctx, Time delay) {
    f.phys_tx = id_;
    if (f.from == kNoNode) f.from = id_;
    f.size = wire_size(f.body, params_.data_size);
    ctx.transmit(std::move(f), delay);
}

void MaliciousNode::inject_signed(Frame f, Context& ctx) {
    send_authenticated(ctx, std::move(f), Role::Intermediate, false);
}

void MaliciousNode::tunnel(const Frame& f, Context& ctx) {
    if (!profile_.has(Behavior::Wormhole)) return;
    for (NodeId c : profile_.colluders) {
        if (c == id_) continue;
        auto h = colluder_hops_.find(c);
        Time delay = tunnel_latency(profile_, h == colluder_hops_.end() ? 1 : h->second);
        Frame copy = f;
        copy.from = id_;
        copy.tainted = true;
        ctx.tunnel(id_, c, std::move(copy), delay);
        ++stats_.tunnelled;
    }
}

void MaliciousNode::on_frame(const Frame& f, Context& ctx) {
    const bool keep = profile_.has(Behavior::Replay) || profile_.has(Behavior::Include);
    if (keep && !f.garbled && recorded_.size() < 4096 &&
        (std::holds_alternative<Rdp>(f.body) || std::holds_alternative<Rrp>(f.body)))
        recorded_.push_back(f);
    Node::on_frame(f, ctx);
}

Time MaliciousNode::request_wait(Context& ctx) {
    if (profile_.has(Behavior::Rush) && active(ctx.now())) return 0;
    return Node::request_wait(ctx);
}

void MaliciousNode::after_request_accepted(const RdpCore& c, NodeId heard_from, Context& ctx) {
    if (!profile_.has(Behavior::Wormhole) || !active(ctx.now())) return;
    auto st = requests_.find({c.src, c.sn});
    if (st != requests_.end() && st->second.via_tunnel) return;
    Frame f;
    f.body = Rdp{c, heard_from, 0, {}};
    tunnel(f, ctx);
}

void MaliciousNode::on_tunnel(const Frame& f, Context& ctx) {
    if (!profile_.has(Behavior::Wormhole) || !active(ctx.now())) return;
    if (auto* r = std::get_if<Rdp>(&f.body)) tunnelled_request(f, *r, ctx);
    else if (auto* p = std::get_if<Rrp>(&f.body)) tunnelled_reply(f, *p, ctx);
    else if (auto* d = std::get_if<Data>(&f.body)) tunnelled_data(f, *d, ctx);
}

void MaliciousNode::tunnelled_request(const Frame& f, const Rdp& r, Context& ctx) {
    const RdpCore& c = r.core;
    if (c.src == id_ || c.dst == id_) return;
    auto [it, created] = requests_.try_emplace({c.src, c.sn});
    RequestState& st = it->second;
    if (!created && st.forwarded) return;
    if (!take_event(ctx.now())) {
        if (created) requests_.erase(it);
        return;
    }
    st.core = c;
    st.collecting = false;
    st.forwarded = true;
    st.via_tunnel = true;
    st.tainted = true;
    st.heard_from = f.from;
    st.second_hop = r.prev_hop;
    st.created = ctx.now();
    request_order_.push_back({ctx.now(), {c.src, c.sn}});
    NodeId claim = profile_.claim == Claim::Truth ? f.from : lie_target(ctx.now(), f.from, kNoNode, ctx);
    if (claim == kNoNode) return;
    Frame out;
    out.tainted = true;
    out.body = Rdp{c, claim, 0, {}};
    send_authenticated(ctx, std::move(out), Role::Intermediate, false);
    ++stats_.fabricated;
    ctx.report({ReportKind::MaliciousEvent, id_, c.src, claim, c.sn, true, AccusationKind::Fabricate, "rdp"});
    trace(ctx, "tunnel", "rebroadcast", profile_.claim == Claim::Truth ? "truth" : "lie");
}

void MaliciousNode::on_rrp(const Frame& f, const Rrp& r, Time received, Context& ctx) {
    const RrpCore& c = r.core;
    auto st = requests_.find({c.src, c.sn});
    if (st == requests_.end() || !st->second.via_tunnel) {
        Node::on_rrp(f, r, received, ctx);
        return;
    }
    if (st->second.reply_forwarded) return;
    st->second.reply_forwarded = true;
    install_route(ctx, c.dst, f.from, c.sn, true);
    forward_reply(st->second, r, f.from, true, ctx);
}

void MaliciousNode::forward_reply(RequestState& st, const Rrp& r, NodeId from, bool tainted, Context& ctx) {
    if (!st.via_tunnel) {
        Node::forward_reply(st, r, from, tainted, ctx);
        return;
    }
    tunnel_routes_[r.core.src] = {st.heard_from, ctx.now() + params_.route_timeout};
    Frame f;
    f.to = st.heard_from;
    f.body = Rrp{r.core, from, kNoNode, 0, {}};
    Frame copy = f;
    copy.from = id_;
    copy.tainted = true;
    auto h = colluder_hops_.find(st.heard_from);
    ctx.tunnel(id_, st.heard_from, std::move(copy), tunnel_latency(profile_, h == colluder_hops_.end() ? 1 : h->second));
    ++stats_.tunnelled;
    trace(ctx, "tunnel", "reply");
}

void MaliciousNode::tunnelled_reply(const Frame& f, const Rrp& r, Context& ctx) {
    const RrpCore& c = r.core;
    auto it = requests_.find({c.src, c.sn});
    if (it == requests_.end() || !it->second.forwarded || it->second.reply_forwarded || it->second.via_tunnel) return;
    RequestState& st = it->second;
    if (!take_event(ctx.now())) return;
    st.reply_forwarded = true;
    tunnel_routes_[c.dst] = {f.from, ctx.now() + params_.route_timeout};
    install_route(ctx, c.src, st.heard_from, c.sn, true);
    NodeId claim = profile_.claim == Claim::Truth ? f.from : lie_target(ctx.now(), st.heard_from, st.heard_from, ctx);
    if (claim == kNoNode) return;
    Frame out;
    out.to = st.heard_from;
    out.tainted = true;
    out.body = Rrp{c, claim, st.second_hop, 0, {}};
    send_authenticated(ctx, std::move(out), Role::Intermediate, false);
    ++stats_.fabricated;
    ctx.report({ReportKind::MaliciousEvent, id_, c.src, claim, c.sn, true, AccusationKind::Fabricate, "rrp"});
    trace(ctx, "tunnel", "reply-forward", profile_.claim == Claim::Truth ? "truth" : "lie");
}

bool MaliciousNode::intercept_data(const Frame& f, const Data& d, Context& ctx) {
    if (!tunnel_route(d.dst, ctx.now())) return false;
    bool drop = profile_.has(Behavior::DropData);
    if (!drop && profile_.has(Behavior::Selective)) {
        std::bernoulli_distribution b(profile_.selective_fraction);
        drop = b(ctx.rng(id_));
    }
    if (drop) {
        ++stats_.data_dropped;
        ctx.report({ReportKind::DataDropped, id_, d.dst, d.src, d.seq, true, AccusationKind::Drop, "wormhole"});
        trace(ctx, "data", "drop", "wormhole");
        return true;
    }
    Frame copy = f;
    copy.from = id_;
    copy.tainted = true;
    NodeId peer = tunnel_routes_[d.dst].first;
    auto h = colluder_hops_.find(peer);
    ctx.tunnel(id_, peer, std::move(copy), tunnel_latency(profile_, h == colluder_hops_.end() ? 1 : h->second));
    ++stats_.data_tunnelled;
    return true;
}

void MaliciousNode::tunnelled_data(const Frame& f, const Data& d, Context& ctx) {
    auto r = route_to(d.dst, ctx.now());
    if (!r) {
        ctx.report({ReportKind::DataDropped, id_, d.dst, d.src, d.seq, true, AccusationKind::Drop, "wormhole"});
        return;
    }
    (void)f;
    Data out = d;
    out.prev_hop = kNoNode;
    Frame g;
    g.to = r->next_hop;
    g.tainted = true;
    g.body = out;
    send(ctx, std::move(g));
}

}  // namespace srps::adversary
