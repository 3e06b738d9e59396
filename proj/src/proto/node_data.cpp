#include <algorithm>

#include "srps/node.hpp"

namespace srps::proto {

void Node::send_data(NodeId dst, std::uint32_t seq, Context& ctx) {
    Data d{id_, dst, seq, params_.data_size, kNoNode};
    ctx.report({ReportKind::DataGenerated, id_, dst, id_, seq});
    if (auto r = route_to(dst, ctx.now())) {
        forward_data(d, r->next_hop, kNoNode, r->tainted, ctx);
        return;
    }
    auto& q = data_queue_[dst];
    if (q.size() >= params_.data_queue) {
        ctx.report({ReportKind::DataDropped, id_, dst, id_, seq, false, AccusationKind::Drop, "queue-full"});
    } else {
        q.push_back(d);
    }
    auto dit = discoveries_.find(dst);
    if (dit == discoveries_.end() || !dit->second.active) {
        discoveries_[dst].attempts = 0;
        initiate_discovery(dst, ctx);
    }
}

void Node::flush_data_queue(NodeId dst, Context& ctx) {
    auto it = data_queue_.find(dst);
    if (it == data_queue_.end()) return;
    auto r = route_to(dst, ctx.now());
    if (!r) return;
    std::deque<Data> q = std::move(it->second);
    data_queue_.erase(it);
    for (const Data& d : q) forward_data(d, r->next_hop, kNoNode, r->tainted, ctx);
}

void Node::forward_data(const Data& d, NodeId next_hop, NodeId prev_hop, bool tainted, Context& ctx) {
    Data out = d;
    out.prev_hop = prev_hop;
    Frame f;
    f.to = next_hop;
    f.tainted = tainted;
    f.body = out;
    Time end = send(ctx, std::move(f));
    // The clock starts once the last link-layer attempt is over.
    if (params_.srps && params_.monitor_data && next_hop != d.dst)
        watch_data_link(id_, next_hop, out, ctx.now(), ctx, end - ctx.now());
}

void Node::handle_data(const Frame& f, const Data& d, Context& ctx) {
    if (f.garbled) {
        if (params_.srps) monitor_garbled(f, ctx);
        return;
    }
    if (params_.srps) {
        if (is_isolated(f.from) || !nbrs_.is_neighbor(f.from)) {
            if (f.to == id_)
                ctx.report({ReportKind::DataDropped, id_, d.dst, d.src, d.seq, f.tainted, AccusationKind::Drop,
                            is_isolated(f.from) ? "isolated" : "not-neighbor"});
            return;
        }
        monitor_observe(f, ctx.now(), ctx);
    }
    if (f.to != id_) return;
    if (d.dst == id_) {
        ctx.report({ReportKind::DataDelivered, id_, d.dst, d.src, d.seq});
        return;
    }
    if (intercept_data(f, d, ctx)) return;
    auto r = route_to(d.dst, ctx.now());
    if (!r) {
        ctx.report({ReportKind::DataDropped, id_, d.dst, d.src, d.seq, f.tainted, AccusationKind::Drop, "no-route"});
        trace(ctx, "data", "drop", "no-route");
        RouteError e{d.src, d.dst, id_, kNoNode, d.seq, true};
        Frame out;
        out.to = f.from;
        out.body = e;
        send(ctx, std::move(out));
        return;
    }
    forward_data(d, r->next_hop, f.from, f.tainted || r->tainted, ctx);
}

void Node::handle_route_error(const Frame& f, const RouteError& e, Context& ctx) {
    if (f.garbled) {
        if (params_.srps) monitor_garbled(f, ctx);
        return;
    }
    if (params_.srps) {
        if (is_isolated(f.from) || !nbrs_.is_neighbor(f.from)) return;
        monitor_observe(f, ctx.now(), ctx);
    }
    if (f.to != id_) return;
    auto route = routes_.entries.find(e.dst);
    bool via_sender = route != routes_.entries.end() && route->second.next_hop == f.from;
    if (e.src != id_) {
        if (via_sender) routes_.entries.erase(route);
        auto back = route_to(e.src, ctx.now());
        if (!back) return;
        Frame out;
        out.to = back->next_hop;
        out.body = e;
        send(ctx, std::move(out));
        return;
    }
    trace(ctx, "route-error", "maintain");
    if (params_.maintenance_policy == 3 && !e.final && via_sender && e.broken_from != kNoNode &&
        e.broken_from != id_) {
        RepairRequest rq{id_, e.dst, e.broken_to, kNoNode, e.broken_from};
        Frame out;
        out.to = f.from;
        out.body = rq;
        send(ctx, std::move(out));
        return;
    }
    route_maintenance(e.dst, via_sender ? f.from : kNoNode, ctx);
}

void Node::handle_link_failure(const Frame& f, Context& ctx) {
    const NodeId lost = f.to;
    for (const auto& [dst, entry] : routes_.entries)
        if (entry.next_hop == lost && entry.second_next != kNoNode) bypass_hint_[dst] = entry.second_next;
    std::vector<NodeId> affected;
    for (const auto& [dst, entry] : routes_.entries)
        if (entry.next_hop == lost) affected.push_back(dst);
    for (NodeId dst : affected) routes_.entries.erase(dst);
    trace(ctx, message_name(f.body), "link-failure");
    const auto* d = std::get_if<Data>(&f.body);
    if (!d) return;
    ctx.report({ReportKind::DataDropped, id_, d->dst, d->src, d->seq, f.tainted, AccusationKind::Drop, "link-failure"});
    if (d->src == id_) {
        route_maintenance(d->dst, lost, ctx);
        return;
    }
    NodeId back = d->prev_hop;
    if (back == kNoNode) return;
    RouteError e{d->src, d->dst, id_, lost, d->seq, true};
    Frame out;
    out.to = back;
    out.body = e;
    send(ctx, std::move(out));
}

void Node::route_maintenance(NodeId dst, NodeId broken_next, Context& ctx) {
    Time now = ctx.now();
    auto primary = routes_.entries.find(dst);
    if (primary != routes_.entries.end() && (broken_next == kNoNode || primary->second.next_hop == broken_next))
        routes_.entries.erase(primary);
    auto& alts = routes_.alternates[dst];
    alts.erase(std::remove_if(alts.begin(), alts.end(),
                              [&](const RouteEntry& a) {
                                  return a.next_hop == broken_next || a.expires <= now || is_isolated(a.next_hop) ||
                                         (params_.srps && !nbrs_.is_neighbor(a.next_hop));
                              }),
               alts.end());
    if (params_.maintenance_policy == 1 && !alts.empty() && !routes_.entries.count(dst)) {
        routes_.entries[dst] = alts.front();
        alts.erase(alts.begin());
        trace(ctx, "maintenance", "alternate");
        flush_data_queue(dst, ctx);
        return;
    }
    if (routes_.entries.count(dst)) return;
    bool want = params_.maintenance_policy != 1 || data_queue_.count(dst);
    auto dit = discoveries_.find(dst);
    if (want && (dit == discoveries_.end() || !dit->second.active)) {
        discoveries_[dst].attempts = 0;
        initiate_discovery(dst, ctx);
        trace(ctx, "maintenance", "rediscover");
    }
}

void Node::handle_repair_request(const Frame& f, const RepairRequest& m, Context& ctx) {
    if (f.garbled || f.to != id_) return;
    if (m.target != id_) {
        auto it = routes_.entries.find(m.dst);
        if (it == routes_.entries.end()) return;
        Frame out;
        out.to = it->second.next_hop;
        out.body = m;
        send(ctx, std::move(out));
        return;
    }
    NodeId z = m.bypass_to;
    if (z == kNoNode) {
        auto h = bypass_hint_.find(m.dst);
        if (h != bypass_hint_.end()) z = h->second;
    }
    if (z == kNoNode || z == m.faulty) {
        repairs_[m.dst] = {m.src, m.dst};
        repair_done(m.dst, false, ctx);
        return;
    }
    repairs_[z] = {m.src, m.dst};
    trace(ctx, "repair", "discover");
    if (auto r = route_to(z, ctx.now()); r && r->next_hop != m.faulty) {
        repair_done(z, true, ctx);
        return;
    }
    if (!initiate_discovery(z, ctx)) repair_done(z, false, ctx);
}

void Node::repair_done(NodeId target, bool ok, Context& ctx) {
    auto it = repairs_.find(target);
    if (it == repairs_.end()) return;
    auto [src, dst] = it->second;
    repairs_.erase(it);
    auto hop = route_to(target, ctx.now());
    if (ok && hop) {
        install_route(ctx, dst, hop->next_hop, 0, hop->tainted);
        if (target != dst) {
            RepairUpdate u{src, dst, id_, target};
            Frame out;
            out.to = hop->next_hop;
            out.body = u;
            send(ctx, std::move(out));
        }
        trace(ctx, "repair", "bypass");
        return;
    }
    RouteError e{src, dst, id_, kNoNode, 0, false, true};
    auto back = route_to(src, ctx.now());
    if (!back) return;
    Frame out;
    out.to = back->next_hop;
    out.body = e;
    send(ctx, std::move(out));
    trace(ctx, "repair", "fail");
}

void Node::handle_repair_update(const Frame& f, const RepairUpdate& m, Context& ctx) {
    if (f.garbled || f.to != id_) return;
    install_route(ctx, m.src, f.from, 0, f.tainted);
    if (m.target == id_) return;
    auto hop = route_to(m.target, ctx.now());
    if (!hop) return;
    install_route(ctx, m.dst, hop->next_hop, 0, hop->tainted);
    Frame out;
    out.to = hop->next_hop;
    out.body = m;
    send(ctx, std::move(out));
}

}  // namespace srps::proto
