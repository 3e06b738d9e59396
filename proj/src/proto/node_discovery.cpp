#include <algorithm>

#include "srps/node.hpp"

namespace srps::proto {

namespace {

crypto::Bytes challenge_plain(NodeId b, NodeId s, std::uint64_t nonce) {
    crypto::ByteWriter w;
    w.u32(b).u32(s).u64(nonce);
    return w.bytes();
}

}  // namespace

// ---------------------------------------------------------------- source side

std::optional<std::uint32_t> Node::initiate_discovery(NodeId dst, Context& ctx) {
    if (dst == id_ || dst == kNoNode) return std::nullopt;
    const std::uint32_t n = params_.snv_length;
    const SymKey k_sd = ctx.keys().pair_key(id_, dst);
    std::uint32_t sn = ++sn_counter_;
    issued_sns_.insert(sn);

    auto [it, fresh] = src_chains_.try_emplace(dst);
    SourceChain& sc = it->second;
    if (!fresh && sc.next_req_idx < 2 && sc.next_chain && !sc.renewing) {
        sc.chain = *sc.next_chain;
        sc.next_chain.reset();
        sc.next_req_idx = n - 1;
    }
    if (fresh || sc.next_req_idx < 2) {
        sc.chain = crypto::build_snv_chain(k_sd, sn, n);
        sc.next_req_idx = n;
        sc.renewing = false;
        sc.next_chain.reset();
        costs_.add(Role::Source, CostItem::MacRsn);
        costs_.add(Role::Source, CostItem::HashSnv);
        costs_.raw_hash += n;
        ++costs_.raw_mac;
    }
    std::uint32_t req_idx = sc.next_req_idx;
    sc.next_req_idx -= 2;

    RdpCore c;
    c.src = id_;
    c.dst = dst;
    c.sn = sn;
    c.snv_value = sc.chain.at(req_idx);
    c.snv_index = req_idx;
    c.e2e_mac = crypto::mac(k_sd, encode_e2e(c));
    costs_.add(Role::Source, CostItem::MacE2eSign);
    ++costs_.raw_mac;

    RequestState& st = requests_[{id_, sn}];
    st.core = c;
    st.forwarded = true;
    st.created = ctx.now();
    request_order_.push_back({ctx.now(), {id_, sn}});

    Discovery& d = discoveries_[dst];
    d.sn = sn;
    d.req_idx = req_idx;
    d.started = ctx.now();
    d.first_reply.reset();
    d.replies.clear();
    d.active = true;
    d.window_closed = false;

    Frame f;
    f.body = Rdp{c, kNoNode, 0, {}};
    send_authenticated(ctx, std::move(f), Role::Source, true);
    ctx.set_timer(id_, TDiscoveryTimeout{dst, sn}, params_.discovery_timeout);
    ctx.report({ReportKind::DiscoveryStarted, id_, dst, kNoNode, sn});
    trace(ctx, "discovery", "start");
    return sn;
}

void Node::discovery_timeout(NodeId dst, std::uint32_t sn, Context& ctx) {
    auto it = discoveries_.find(dst);
    if (it == discoveries_.end()) return;
    Discovery& d = it->second;
    if (d.sn != sn || !d.active || d.first_reply) return;
    if (++d.attempts <= params_.discovery_retries) {
        initiate_discovery(dst, ctx);
        return;
    }
    d.active = false;
    d.attempts = 0;
    auto q = data_queue_.find(dst);
    if (q != data_queue_.end()) {
        for (const Data& x : q->second)
            ctx.report({ReportKind::DataDropped, id_, x.dst, x.src, x.seq, false, AccusationKind::Drop, "no-route"});
        data_queue_.erase(q);
    }
    ctx.report({ReportKind::DiscoveryFailed, id_, dst, kNoNode, sn});
    if (repairs_.count(dst)) repair_done(dst, false, ctx);
    trace(ctx, "discovery", "fail", "no-route");
}

void Node::on_rrp_at_source(const Frame& f, const Rrp& r, Context& ctx) {
    const RrpCore& c = r.core;
    auto dit = discoveries_.find(c.dst);
    if (dit == discoveries_.end() || dit->second.sn != c.sn) {
        drop(ctx, "rrp", "stale-reply");
        return;
    }
    Discovery& d = dit->second;
    const SymKey k_sd = ctx.keys().pair_key(id_, c.dst);
    ++costs_.raw_mac;
    if (!crypto::mac_verify(k_sd, encode_e2e(c), c.e2e_mac)) {
        drop(ctx, "rrp", "bad-mac");
        return;
    }
    SourceChain& sc = src_chains_[c.dst];
    if (params_.srps) {
        if (r.echo != kNoNode) {
            drop(ctx, "rrp", "bad-echo");
            return;
        }
        if (c.snv_index + 1 != d.req_idx || c.snv_value != sc.chain.at(d.req_idx - 1)) {
            drop(ctx, "rrp", "bad-snv");
            return;
        }
    }
    if (d.window_closed) {
        trace(ctx, "rrp", "ignore", "late-reply");
        return;
    }
    for (const auto& x : d.replies)
        if (x.next_hop == f.from) return;
    Time now = ctx.now();
    d.replies.push_back({f.from, now, f.tainted});
    if (!d.first_reply) {
        d.first_reply = now;
        d.attempts = 0;
        sc.last_rep_idx = c.snv_index;
        routes_.alternates.erase(c.dst);
        install_route(ctx, c.dst, f.from, c.sn, f.tainted);
        auto e = routes_.entries.find(c.dst);
        if (e != routes_.entries.end()) e->second.second_next = r.prev_hop;
        ctx.set_timer(id_, TReplyWindow{c.dst, c.sn}, params_.tau);
        ctx.report({ReportKind::RouteInstalled, id_, c.dst, f.from, c.sn, f.tainted});
        trace(ctx, "rrp", "route");
        flush_data_queue(c.dst, ctx);
        if (repairs_.count(c.dst)) repair_done(c.dst, true, ctx);
        return;
    }
    RouteEntry alt;
    alt.next_hop = f.from;
    alt.sn = c.sn;
    alt.installed = now;
    alt.expires = now + params_.route_timeout;
    alt.tainted = f.tainted;
    alt.second_next = r.prev_hop;
    routes_.alternates[c.dst].push_back(alt);
    ctx.report({ReportKind::RouteInstalled, id_, c.dst, f.from, c.sn, f.tainted});
    trace(ctx, "rrp", "alternate");
}

void Node::close_reply_window(NodeId dst, std::uint32_t sn, Context& ctx) {
    auto it = discoveries_.find(dst);
    if (it == discoveries_.end() || it->second.sn != sn) return;
    it->second.window_closed = true;
    it->second.active = false;
    auto sc = src_chains_.find(dst);
    if (params_.srps && sc != src_chains_.end() && sc->second.next_req_idx < 2 && !sc->second.renewing)
        start_renewal(dst, ctx);
}

// ---------------------------------------------------------------- intermediate side

Node::SnvVerdict Node::check_request_snv(const RdpCore& c, NodeId) {
    auto st = requests_.find({c.src, c.sn});
    if (!params_.srps) {
        if (st == requests_.end()) return SnvVerdict::Accept;
        return SnvVerdict::Duplicate;
    }
    auto it = pairs_.find({c.src, c.dst});
    if (it == pairs_.end()) return st == requests_.end() ? SnvVerdict::Accept : SnvVerdict::Duplicate;
    const PairChainRecord& rec = it->second;
    if (c.sn < rec.sn) return SnvVerdict::Replay;
    if (c.sn == rec.sn) {
        if (st == requests_.end()) return SnvVerdict::Replay;
        return crypto::digest(encode_core(st->second.core)) == crypto::digest(encode_core(c)) ? SnvVerdict::Duplicate
                                                                                              : SnvVerdict::BadSnv;
    }
    if (c.snv_index < rec.stored_index) {
        auto res = crypto::verify_and_advance(rec.stored_v, c.snv_value, params_.snv_max_gap);
        costs_.raw_hash += res.accepted ? res.gap : params_.snv_max_gap;
        if (res.accepted && res.gap == rec.stored_index - c.snv_index) return SnvVerdict::Accept;
    }
    return rec.verified ? SnvVerdict::BadSnv : SnvVerdict::Resync;
}

void Node::on_rdp(const Frame& f, const Rdp& r, Time, Context& ctx) {
    const RdpCore& c = r.core;
    if (c.src == id_) return;
    if (params_.srps && r.prev_hop != kNoNode) {
        auto st = requests_.find({c.src, c.sn});
        if (st != requests_.end() && st->second.collecting) {
            st->second.suppressed_origins.insert(r.prev_hop);
            for (auto& e : st->second.buffer)
                if (e.heard_from == r.prev_hop) e.suppressed = true;
        }
    }
    if (c.dst == id_) {
        on_rdp_at_destination(f, r, ctx);
        return;
    }
    switch (check_request_snv(c, f.from)) {
        case SnvVerdict::Replay:
            drop(ctx, "rdp", "replay");
            return;
        case SnvVerdict::Duplicate: {
            auto st = requests_.find({c.src, c.sn});
            if (st != requests_.end() && st->second.collecting)
                buffer_request(c, f.from, r.prev_hop, f.tainted, ctx);
            else
                trace(ctx, "rdp", "ignore", "duplicate");
            return;
        }
        case SnvVerdict::BadSnv:
            if (params_.ondemand_challenge && !challenges_.count({c.src, c.sn})) {
                start_challenge(c.src, c.sn, f.from, true, f, c.dst, ctx);
                trace(ctx, "rdp", "challenge", "bad-snv");
            } else {
                drop(ctx, "rdp", "bad-snv");
            }
            return;
        case SnvVerdict::Accept:
        case SnvVerdict::Resync:
            accept_request(c, f.from, r.prev_hop, f.tainted, ctx);
            return;
    }
}

void Node::accept_request(const RdpCore& c, NodeId heard_from, NodeId second_hop, bool tainted, Context& ctx) {
    if (params_.srps) {
        auto [it, created] = pairs_.try_emplace({c.src, c.dst});
        PairChainRecord& rec = it->second;
        rec.src = c.src;
        rec.dst = c.dst;
        rec.sn = c.sn;
        rec.stored_v = c.snv_value;
        rec.stored_index = c.snv_index;
        rec.pending = true;
        if (created) rec.first_contact = true;
        rec.first_heard_from = heard_from;
        rec.first_second_hop = second_hop;
        costs_.add(Role::Intermediate, CostItem::HashKeyVerify);
        costs_.add(Role::Intermediate, CostItem::MacNbrVerify);
    }
    buffer_request(c, heard_from, second_hop, tainted, ctx);
    after_request_accepted(c, heard_from, ctx);
}

void Node::buffer_request(const RdpCore& c, NodeId heard_from, NodeId second_hop, bool tainted, Context& ctx) {
    Time now = ctx.now();
    auto [it, created] = requests_.try_emplace({c.src, c.sn});
    RequestState& st = it->second;
    bool flush_now = false;
    if (created) {
        st.core = c;
        st.collecting = true;
        st.created = now;
        request_order_.push_back({now, {c.src, c.sn}});
        Time wait = request_wait(ctx);
        if (wait <= 0)
            flush_now = true;
        else
            ctx.set_timer(id_, TFlush{c.src, c.sn}, wait);
        // Housekeeping: forget request state long after any reply could arrive.
        while (!request_order_.empty() && now - request_order_.front().first > 2 * params_.route_timeout) {
            auto key = request_order_.front().second;
            auto old = requests_.find(key);
            if (old != requests_.end() && !old->second.collecting) requests_.erase(old);
            request_order_.pop_front();
        }
    }
    if (!st.collecting) return;
    for (const auto& e : st.buffer)
        if (e.heard_from == heard_from) return;
    RequestBufferEntry e;
    e.rdp_core = c;
    e.heard_from = heard_from;
    e.second_hop = second_hop;
    e.tainted = tainted;
    e.suppressed = params_.srps && st.suppressed_origins.count(heard_from) != 0;
    st.buffer.push_back(e);
    trace(ctx, "rdp", "buffer");
    if (flush_now || st.buffer.size() >= params_.n_r) flush_request_buffer(c.src, c.sn, ctx);
}

void Node::flush_request_buffer(NodeId src, std::uint32_t sn, Context& ctx) {
    auto it = requests_.find({src, sn});
    if (it == requests_.end()) return;
    RequestState& st = it->second;
    if (!st.collecting) return;
    st.collecting = false;
    st.flushed = true;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < st.buffer.size(); ++i)
        if (!st.buffer[i].suppressed) candidates.push_back(i);
    if (candidates.empty()) {
        trace(ctx, "rdp", "suppress", "all-suppressed");
        return;
    }
    std::size_t pick = candidates[0];  // first heard
    if (params_.srps && candidates.size() > 1) {
        std::uniform_int_distribution<std::size_t> u(0, candidates.size() - 1);
        pick = candidates[u(ctx.rng(id_))];
    }
    RequestBufferEntry e = st.buffer[pick];
    forward_request(st, e, ctx);
}

void Node::forward_request(RequestState& st, const RequestBufferEntry& e, Context& ctx) {
    st.forwarded = true;
    st.heard_from = e.heard_from;
    st.second_hop = e.second_hop;
    st.tainted = st.tainted || e.tainted;
    Frame f;
    f.tainted = st.tainted;
    f.body = Rdp{st.core, e.heard_from, 0, {}};
    send_authenticated(ctx, std::move(f), Role::Intermediate, true);
    trace(ctx, "rdp", "forward");
}

void Node::on_rrp(const Frame& f, const Rrp& r, Time, Context& ctx) {
    const RrpCore& c = r.core;
    if (c.src == id_) {
        on_rrp_at_source(f, r, ctx);
        return;
    }
    auto sit = requests_.find({c.src, c.sn});
    if (sit == requests_.end() || !sit->second.forwarded) {
        drop(ctx, "rrp", "no-request");
        return;
    }
    RequestState& st = sit->second;
    if (st.reply_forwarded) {
        drop(ctx, "rrp", "duplicate-reply");
        return;
    }
    bool pending_route = false;
    if (params_.srps) {
        if (r.echo != st.heard_from) {
            drop(ctx, "rrp", "bad-echo");
            return;
        }
        auto pit = pairs_.find({c.src, c.dst});
        costs_.add(Role::Intermediate, CostItem::HashPairVerify);
        ++costs_.raw_hash;
        bool ok = pit != pairs_.end() && pit->second.pending && pit->second.sn == c.sn &&
                  c.snv_index + 1 == pit->second.stored_index && crypto::hash_f(c.snv_value) == pit->second.stored_v;
        if (!ok) {
            drop(ctx, "rrp", "bad-snv");
            return;
        }
        PairChainRecord& rec = pit->second;
        rec.stored_v = c.snv_value;
        rec.stored_index = c.snv_index;
        rec.pending = false;
        rec.verified = true;
        if (params_.version2 && rec.first_contact) pending_route = true;
        else rec.first_contact = false;
    }
    bool tainted = f.tainted || st.tainted;
    install_route(ctx, c.dst, f.from, c.sn, tainted, pending_route);
    auto e = routes_.entries.find(c.dst);
    if (e != routes_.entries.end() && e->second.next_hop == f.from) e->second.second_next = r.prev_hop;
    install_route(ctx, c.src, st.heard_from, c.sn, tainted, pending_route);
    st.reply_forwarded = true;
    forward_reply(st, r, f.from, tainted, ctx);
    if (pending_route) start_challenge(c.src, c.sn, st.heard_from, false, std::nullopt, c.dst, ctx);
}

void Node::forward_reply(RequestState& st, const Rrp& r, NodeId from, bool tainted, Context& ctx) {
    Frame f;
    f.to = st.heard_from;
    f.tainted = tainted;
    f.body = Rrp{r.core, from, st.second_hop, 0, {}};
    send_authenticated(ctx, std::move(f), Role::Intermediate, false);
    trace(ctx, "rrp", "forward");
}

// ---------------------------------------------------------------- destination side

void Node::on_rdp_at_destination(const Frame& f, const Rdp& r, Context& ctx) {
    const RdpCore& c = r.core;
    const SymKey k_sd = ctx.keys().pair_key(c.src, id_);
    ++costs_.raw_mac;
    if (!crypto::mac_verify(k_sd, encode_e2e(c), c.e2e_mac)) {
        trace(ctx, "rdp", "ignore", "bad-mac");
        return;
    }
    const std::uint32_t n = params_.snv_length;
    auto dit = dst_chains_.find(c.src);
    DestChain* dc = dit == dst_chains_.end() ? nullptr : &dit->second;
    if (dc && c.sn < dc->last_sn) {
        drop(ctx, "rdp", "replay");
        return;
    }
    bool first_copy = !dc || c.sn != dc->last_sn;
    if (!first_copy) {
        if (dc->replied_to.count(f.from) || dc->replied_to.size() >= params_.max_replies) {
            trace(ctx, "rdp", "ignore", "duplicate");
            return;
        }
    } else {
        std::optional<crypto::SnvChain> fresh;
        bool ok = true;
        if (c.snv_index == n) {
            fresh = crypto::build_snv_chain(k_sd, c.sn, n);
            costs_.add(Role::Destination, CostItem::MacRsn);
            costs_.add(Role::Destination, CostItem::HashSnv);
            costs_.raw_hash += n;
            ++costs_.raw_mac;
            ok = fresh->at(n) == c.snv_value;
        } else if (params_.srps) {
            ok = dc && c.snv_index < dc->last_req_idx && c.snv_index >= 2 && c.snv_index <= n &&
                 dc->chain.at(c.snv_index) == c.snv_value;
        } else {
            ok = dc && c.snv_index >= 1 && c.snv_index <= n;
        }
        if (!ok) {
            drop(ctx, "rdp", params_.srps ? "bad-snv" : "unknown-chain");
            return;
        }
        if (!dc) dc = &dst_chains_[c.src];
        if (fresh) dc->chain = std::move(*fresh);
        dc->last_req_idx = c.snv_index;
        dc->last_sn = c.sn;
        dc->replied_to.clear();
        dc->last_rep_idx = c.snv_index - 1;
        costs_.add(Role::Destination, CostItem::MacE2eVerify);
        costs_.add(Role::Destination, CostItem::MacNbrVerify);
    }
    dc->replied_to.insert(f.from);
    dc->replied_by_sn[c.sn].insert(f.from);
    while (dc->replied_by_sn.size() > 8) dc->replied_by_sn.erase(dc->replied_by_sn.begin());

    RrpCore rc;
    rc.src = c.src;
    rc.dst = id_;
    rc.sn = c.sn;
    rc.snv_index = dc->last_rep_idx;
    rc.snv_value = dc->chain.at(dc->last_rep_idx);
    rc.e2e_mac = crypto::mac(k_sd, encode_e2e(rc));
    ++costs_.raw_mac;
    if (first_copy) costs_.add(Role::Destination, CostItem::MacReplySign);

    Frame out;
    out.to = f.from;
    out.tainted = f.tainted;
    out.body = Rrp{rc, kNoNode, r.prev_hop, 0, {}};
    // Reply-phase signing by the destination is part of its cost model.
    Role role = first_copy ? Role::Destination : Role::Intermediate;
    send_authenticated(ctx, std::move(out), role, first_copy);
    if (first_copy || !route_to(c.src, ctx.now())) install_route(ctx, c.src, f.from, c.sn, f.tainted);
    trace(ctx, "rdp", "reply");
}

// ---------------------------------------------------------------- challenge / response

void Node::start_challenge(NodeId src, std::uint32_t sn, NodeId via, bool on_demand, std::optional<Frame> held,
                           NodeId dst, Context& ctx) {
    if (via == kNoNode) return;
    PendingChallenge pc;
    pc.src = src;
    pc.sn = sn;
    pc.nonce = std::uniform_int_distribution<std::uint64_t>()(ctx.rng(id_)) >> 1;
    pc.on_demand = on_demand;
    pc.held_rdp = std::move(held);
    pc.dst = dst;
    Challenge ch;
    ch.from = id_;
    ch.to = src;
    ch.sn = sn;
    ch.on_demand = on_demand;
    ch.ct = crypto::encrypt(ctx.keys().pair_key(id_, src), challenge_plain(id_, src, pc.nonce));
    challenges_[{src, sn}] = std::move(pc);
    Frame f;
    f.to = via;
    f.body = ch;
    send(ctx, std::move(f));
    ctx.set_timer(id_, TChallengeTimeout{src, sn}, params_.challenge_timeout);
}

void Node::handle_challenge(const Frame& f, const Challenge& c, Context& ctx) {
    if (f.garbled || f.to != id_) return;
    if (params_.srps && !nbrs_.is_neighbor(f.from)) return;
    if (c.to != id_) {
        challenge_back_[{c.from, c.sn}] = f.from;
        if (!relay_toward(ctx, c.to, c, c.to, c.sn, true)) drop(ctx, "challenge", "no-route");
        return;
    }
    if (!issued_sns_.count(c.sn)) {
        drop(ctx, "challenge", "unknown-sn");
        return;
    }
    const SymKey k = ctx.keys().pair_key(c.from, id_);
    crypto::Bytes plain = crypto::decrypt(k, c.ct);
    crypto::Bytes prefix = challenge_plain(c.from, id_, 0);
    if (plain.size() != prefix.size() || !std::equal(prefix.begin(), prefix.begin() + 8, plain.begin())) {
        drop(ctx, "challenge", "bad-ct");
        return;
    }
    std::uint64_t nonce = 0;
    for (std::size_t i = 8; i < 16; ++i) nonce = (nonce << 8) | plain[i];
    ChallengeResponse resp;
    resp.from = id_;
    resp.to = c.from;
    resp.sn = c.sn;
    resp.ct = crypto::encrypt(k, challenge_plain(c.from, id_, nonce + 1));
    Frame out;
    out.to = f.from;
    out.body = resp;
    send(ctx, std::move(out));
    trace(ctx, "challenge", "answer");
}

void Node::handle_challenge_response(const Frame& f, const ChallengeResponse& c, Context& ctx) {
    if (f.garbled || f.to != id_) return;
    if (c.to != id_) {
        auto back = challenge_back_.find({c.to, c.sn});
        if (back == challenge_back_.end()) return;
        Frame out;
        out.to = back->second;
        out.body = c;
        send(ctx, std::move(out));
        return;
    }
    auto it = challenges_.find({c.from, c.sn});
    if (it == challenges_.end()) return;
    PendingChallenge pc = std::move(it->second);
    challenges_.erase(it);
    crypto::Bytes plain = crypto::decrypt(ctx.keys().pair_key(id_, c.from), c.ct);
    if (plain != challenge_plain(id_, c.from, pc.nonce + 1)) {
        ctx.report({ReportKind::ChallengeRejected, id_, c.from, kNoNode, c.sn});
        trace(ctx, "challenge", "reject", "bad-response");
        if (!pc.on_demand) {
            for (auto& [dst, e] : routes_.entries)
                if (e.pending && e.sn == c.sn) e.expires = ctx.now();
        }
        return;
    }
    ctx.report({ReportKind::ChallengeAccepted, id_, c.from, kNoNode, c.sn});
    trace(ctx, "challenge", "accept");
    if (!pc.on_demand) {
        for (auto& [dst, e] : routes_.entries)
            if (e.pending && e.sn == c.sn) e.pending = false;
        auto rec = pairs_.find({pc.src, pc.dst});
        if (rec != pairs_.end()) rec->second.first_contact = false;
        return;
    }
    if (!pc.held_rdp) return;
    const Frame& held = *pc.held_rdp;
    const Rdp& r = std::get<Rdp>(held.body);
    auto rec = pairs_.find({r.core.src, r.core.dst});
    FakeRouteReport rep;
    rep.reporter = id_;
    rep.to = r.core.src;
    rep.sn = r.core.sn;
    rep.victim_dst = r.core.dst;
    if (rec != pairs_.end()) {
        rep.fake_prev_hop = rec->second.first_heard_from;
        rep.fake_second_hop = rec->second.first_second_hop;
        pairs_.erase(rec);
    }
    auto route = routes_.entries.find(r.core.dst);
    if (route != routes_.entries.end()) rep.fake_next_hop = route->second.next_hop;
    accept_request(r.core, held.from, r.prev_hop, held.tainted, ctx);
    Frame out;
    out.to = held.from;
    out.body = rep;
    send(ctx, std::move(out));
}

void Node::handle_fake_report(const Frame& f, const FakeRouteReport& r, Context& ctx) {
    if (f.garbled || f.to != id_) return;
    if (r.to != id_) {
        relay_toward(ctx, r.to, r, r.to, r.sn, true);
        return;
    }
    fake_reports_.push_back(r);
    ctx.report({ReportKind::FakeRouteTraced, id_, r.reporter, r.fake_prev_hop, r.sn});
    trace(ctx, "fake-route-report", "store");
}

bool Node::relay_toward(Context& ctx, NodeId target, Message body, NodeId src_for_state, std::uint32_t sn_for_state,
                        bool use_request_state) {
    NodeId hop = kNoNode;
    if (nbrs_.is_neighbor(target)) {
        hop = target;
    } else if (use_request_state) {
        auto st = requests_.find({src_for_state, sn_for_state});
        if (st != requests_.end() && st->second.heard_from != kNoNode) hop = st->second.heard_from;
    }
    if (hop == kNoNode) {
        if (auto r = route_to(target, ctx.now())) hop = r->next_hop;
    }
    if (hop == kNoNode || is_isolated(hop)) return false;
    Frame f;
    f.to = hop;
    f.body = std::move(body);
    send(ctx, std::move(f));
    return true;
}

// ---------------------------------------------------------------- chain renewal

void Node::start_renewal(NodeId dst, Context& ctx) {
    auto it = src_chains_.find(dst);
    if (it == src_chains_.end() || it->second.last_rep_idx < 1) return;
    SourceChain& sc = it->second;
    const SymKey k_sd = ctx.keys().pair_key(id_, dst);
    const std::uint32_t n = params_.snv_length;
    std::uint32_t sn = ++sn_counter_;
    issued_sns_.insert(sn);
    sc.next_chain = crypto::build_snv_chain(k_sd, sn, n);
    sc.renewing = true;
    costs_.raw_hash += n;
    HashValue v_key = sc.chain.at(sc.last_rep_idx - 1);
    RenewalCommit m;
    m.src = id_;
    m.dst = dst;
    m.sn = sn;
    m.ct = crypto::encrypt(v_key, sc.next_chain->at(n));
    if (!relay_toward(ctx, dst, m, kNoNode, 0, false)) {
        sc.renewing = false;
        sc.next_chain.reset();
        return;
    }
    trace(ctx, "renewal", "commit");
}

void Node::handle_renewal_commit(const Frame& f, const RenewalCommit& m, Context& ctx) {
    if (f.garbled || f.to != id_ || !params_.srps) return;
    if (m.dst != id_) {
        auto rec = pairs_.find({m.src, m.dst});
        if (rec != pairs_.end()) {
            rec->second.renewal_ct = m.ct;
            rec->second.renewal_un.reset();
            rec->second.renewal_sn = m.sn;
            renewal_proofs_.erase({m.src, m.dst});
        }
        relay_toward(ctx, m.dst, m, kNoNode, 0, false);
        return;
    }
    auto dit = dst_chains_.find(m.src);
    if (dit == dst_chains_.end() || dit->second.last_rep_idx < 1) return;
    DestChain& dc = dit->second;
    const std::uint32_t n = params_.snv_length;
    crypto::SnvChain u = crypto::build_snv_chain(ctx.keys().pair_key(m.src, id_), m.sn, n);
    HashValue v_key = dc.chain.at(dc.last_rep_idx - 1);
    crypto::Bytes expect = crypto::encrypt(v_key, u.at(n));
    if (expect != m.ct) {
        drop(ctx, "renewal-commit", "bad-ct");
        return;
    }
    RenewalValue val{m.src, id_, u.at(n)};
    RenewalProof proof{m.src, id_, v_key};
    dc.chain = std::move(u);
    dc.last_req_idx = n;
    dc.last_rep_idx = n;
    relay_toward(ctx, m.src, val, kNoNode, 0, false);
    relay_toward(ctx, m.src, proof, kNoNode, 0, false);
    trace(ctx, "renewal", "adopt");
}

void Node::complete_renewal(PairChainRecord& rec, Context& ctx) {
    auto pit = renewal_proofs_.find({rec.src, rec.dst});
    if (pit == renewal_proofs_.end() || !rec.renewal_ct || !rec.renewal_un) return;
    HashValue v_key = pit->second;
    renewal_proofs_.erase(pit);
    ++costs_.raw_hash;
    bool ok = crypto::hash_f(v_key) == rec.stored_v && crypto::encrypt(v_key, *rec.renewal_un) == *rec.renewal_ct;
    if (!ok) {
        drop(ctx, "renewal-proof", "bad-proof");
        return;
    }
    rec.stored_v = *rec.renewal_un;
    rec.stored_index = params_.snv_length;
    rec.verified = true;
    rec.pending = false;
    rec.renewal_ct.reset();
    rec.renewal_un.reset();
    ctx.report({ReportKind::RenewalAdopted, id_, rec.src, rec.dst, rec.renewal_sn});
    trace(ctx, "renewal", "adopt");
}

void Node::handle_renewal_value(const Frame& f, const RenewalValue& m, Context& ctx) {
    if (f.garbled || f.to != id_ || !params_.srps) return;
    if (m.src == id_) return;  // the source already holds u_n
    auto rec = pairs_.find({m.src, m.dst});
    if (rec != pairs_.end() && rec->second.renewal_ct) {
        rec->second.renewal_un = m.u_n;
        complete_renewal(rec->second, ctx);
    }
    relay_toward(ctx, m.src, m, kNoNode, 0, false);
}

void Node::handle_renewal_proof(const Frame& f, const RenewalProof& m, Context& ctx) {
    if (f.garbled || f.to != id_ || !params_.srps) return;
    if (m.src == id_) {
        auto it = src_chains_.find(m.dst);
        if (it == src_chains_.end() || !it->second.renewing || !it->second.next_chain) return;
        SourceChain& sc = it->second;
        if (sc.last_rep_idx < 1 || sc.chain.at(sc.last_rep_idx - 1) != m.v_key) return;
        sc.chain = *sc.next_chain;
        sc.next_chain.reset();
        sc.renewing = false;
        sc.next_req_idx = params_.snv_length - 1;
        ctx.report({ReportKind::RenewalAdopted, id_, id_, m.dst});
        trace(ctx, "renewal", "adopt");
        return;
    }
    auto rec = pairs_.find({m.src, m.dst});
    if (rec != pairs_.end() && rec->second.renewal_ct) {
        renewal_proofs_[{m.src, m.dst}] = m.v_key;
        complete_renewal(rec->second, ctx);
    }
    relay_toward(ctx, m.src, m, kNoNode, 0, false);
}

}  // namespace srps::proto
