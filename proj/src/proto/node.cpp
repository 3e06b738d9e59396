#include <algorithm>
#include <sstream>

#include "srps/node.hpp"

namespace srps::proto {

std::string_view to_string(CostItem c) {
    switch (c) {
        case CostItem::MacE2eSign: return "mac_e2e_sign";
        case CostItem::MacNbrSign: return "mac_nbr_sign";
        case CostItem::MacRsn: return "mac_rsn";
        case CostItem::HashSnv: return "hash_snv";
        case CostItem::HashNextKey: return "hash_next_key";
        case CostItem::HashKeyVerify: return "hash_key_verify";
        case CostItem::MacNbrVerify: return "mac_nbr_verify";
        case CostItem::HashPairVerify: return "hash_pair_verify";
        case CostItem::MacE2eVerify: return "mac_e2e_verify";
        case CostItem::MacReplySign: return "mac_reply_sign";
        case CostItem::Count: break;
    }
    return "?";
}

std::pair<std::uint64_t, std::uint64_t> CostMeter::model_counts(Role r) const {
    using C = CostItem;
    auto sum = [&](std::initializer_list<C> cs) {
        std::uint64_t s = 0;
        for (C c : cs) s += get(r, c);
        return s;
    };
    switch (r) {
        case Role::Source:
            return {sum({C::MacE2eSign, C::MacNbrSign, C::MacRsn}), sum({C::HashSnv, C::HashNextKey})};
        case Role::Intermediate:
            return {sum({C::MacNbrVerify, C::MacNbrSign}), sum({C::HashKeyVerify, C::HashNextKey, C::HashPairVerify})};
        case Role::Destination:
            return {sum({C::MacE2eVerify, C::MacNbrVerify, C::MacRsn, C::MacReplySign, C::MacNbrSign}),
                    sum({C::HashNextKey})};
    }
    return {0, 0};
}

bool NeighborTable::neighbor_of(NodeId a, NodeId b) const {
    auto it = two_hop.find(a);
    return it != two_hop.end() && it->second.count(b) != 0;
}

Node::Node(NodeId id, ProtocolParams params, const crypto::SymKey& chain_seed)
    : id_(id), params_(params), chain_(crypto::derive_commitment(chain_seed, params.chain_length, true)) {}

void Node::trace(Context& ctx, std::string_view event, std::string_view action, std::string_view reason) const {
    if (ctx.tracing()) ctx.trace(id_, event, action, reason);
}

void Node::drop(Context& ctx, std::string_view event, std::string_view reason) {
    ++drops_[std::string(reason)];
    trace(ctx, event, "drop", reason);
}

Time Node::send(Context& ctx, Frame f, Time extra_delay) {
    f.phys_tx = id_;
    if (f.from == kNoNode) f.from = id_;
    f.size = wire_size(f.body, params_.data_size);
    return ctx.transmit(std::move(f), params_.proc_delay + extra_delay);
}

Time Node::send_authenticated(Context& ctx, Frame f, Role role, bool counted, Time extra_delay) {
    f.from = id_;
    if (!params_.srps) return send(ctx, std::move(f), extra_delay);
    if (chain_.exhausted()) {
        rekey(ctx.keys().chain_seed(id_, ++chain_epoch_));
        ctx.announce_rekey(id_, {chain_.current_commitment, chain_.length_t});
    }
    std::uint32_t position = chain_.next_position();
    SymKey key = *crypto::next_auth_key(chain_);
    if (counted) {
        costs_.add(role, CostItem::HashNextKey);
        costs_.add(role, CostItem::MacNbrSign);
    }
    ++costs_.raw_mac;
    if (auto* r = std::get_if<Rdp>(&f.body)) {
        r->key_index = position;
        r->nbr_mac = crypto::mac(key, encode_nbr(f.from, f.to, *r));
    } else if (auto* p = std::get_if<Rrp>(&f.body)) {
        p->key_index = position;
        p->nbr_mac = crypto::mac(key, encode_nbr(f.from, f.to, *p));
    }
    Time end = send(ctx, std::move(f), extra_delay);
    pending_disclosures_.push_back(position);
    ctx.set_timer(id_, TDisclose{}, end - ctx.now() + params_.disclose_delay);
    return end;
}

void Node::rekey(const crypto::SymKey& seed) {
    chain_ = crypto::derive_commitment(seed, params_.chain_length, true);
    pending_disclosures_.clear();
}

void Node::install_commitment(NodeId neighbor, const Commitment& c) {
    if (nbrs_.is_neighbor(neighbor)) nbrs_.commitments[neighbor] = c;
    held_.erase(neighbor);
}

// ---------------------------------------------------------------- setup

void Node::begin_setup(Context& ctx) {
    Frame f;
    f.body = Hello{id_, chain_.current_commitment, chain_.length_t - chain_.disclosed_count};
    send(ctx, std::move(f));
}

void Node::announce_neighbors(Context& ctx) {
    Frame f;
    f.body = NeighborList{id_, std::vector<NodeId>(nbrs_.one_hop.begin(), nbrs_.one_hop.end())};
    send(ctx, std::move(f));
}

void Node::setup_round(const std::vector<HelloReply>& replies) {
    for (const auto& r : replies) {
        if (r.src == id_) continue;
        nbrs_.one_hop.insert(r.src);
        nbrs_.commitments[r.src] = {r.commitment, r.position};
    }
}

void Node::set_two_hop(NodeId neighbor, std::set<NodeId> their_neighbors) {
    if (nbrs_.is_neighbor(neighbor)) nbrs_.two_hop[neighbor] = std::move(their_neighbors);
}

void Node::handle_hello(const Frame& f, const Hello& h, Context& ctx) {
    if (!setup_open_ || f.garbled || h.src == id_) return;
    nbrs_.one_hop.insert(h.src);
    nbrs_.commitments[h.src] = {h.commitment, h.position};
    Frame reply;
    reply.to = h.src;
    reply.body = HelloReply{id_, h.src, chain_.current_commitment, chain_.length_t - chain_.disclosed_count};
    send(ctx, std::move(reply));
    trace(ctx, "hello", "reply");
}

void Node::handle_hello_reply(const Frame& f, const HelloReply& h, Context& ctx) {
    if (!setup_open_ || f.garbled || h.to != id_) return;
    setup_round({h});
    trace(ctx, "hello-reply", "store");
}

void Node::handle_neighbor_list(const Frame& f, const NeighborList& n, Context& ctx) {
    if (!setup_open_ || f.garbled || !nbrs_.is_neighbor(n.src)) return;
    set_two_hop(n.src, std::set<NodeId>(n.neighbors.begin(), n.neighbors.end()));
    trace(ctx, "neighbor-list", "store");
}

// ---------------------------------------------------------------- dispatch

void Node::on_frame(const Frame& f, Context& ctx) {
    if (f.from == id_) return;
    struct V {
        Node& n;
        const Frame& f;
        Context& ctx;
        void operator()(const Hello& m) { n.handle_hello(f, m, ctx); }
        void operator()(const HelloReply& m) { n.handle_hello_reply(f, m, ctx); }
        void operator()(const NeighborList& m) { n.handle_neighbor_list(f, m, ctx); }
        void operator()(const KeyDisclosure& m) { n.handle_key(f, m, ctx); }
        void operator()(const Rdp&) { n.handle_authenticated(f, ctx); }
        void operator()(const Rrp&) { n.handle_authenticated(f, ctx); }
        void operator()(const Challenge& m) { n.handle_challenge(f, m, ctx); }
        void operator()(const ChallengeResponse& m) { n.handle_challenge_response(f, m, ctx); }
        void operator()(const FakeRouteReport& m) { n.handle_fake_report(f, m, ctx); }
        void operator()(const RenewalCommit& m) { n.handle_renewal_commit(f, m, ctx); }
        void operator()(const RenewalValue& m) { n.handle_renewal_value(f, m, ctx); }
        void operator()(const RenewalProof& m) { n.handle_renewal_proof(f, m, ctx); }
        void operator()(const RouteError& m) { n.handle_route_error(f, m, ctx); }
        void operator()(const Alert& m) { n.handle_alert(f, m, ctx); }
        void operator()(const Data& m) { n.handle_data(f, m, ctx); }
        void operator()(const RepairRequest& m) { n.handle_repair_request(f, m, ctx); }
        void operator()(const RepairUpdate& m) { n.handle_repair_update(f, m, ctx); }
    };
    std::visit(V{*this, f, ctx}, f.body);
}

void Node::on_timer(const Timer& t, Context& ctx) {
    if (std::holds_alternative<TDisclose>(t)) {
        if (pending_disclosures_.empty()) return;
        std::uint32_t position = pending_disclosures_.front();
        pending_disclosures_.pop_front();
        Frame f;
        f.body = KeyDisclosure{id_, crypto::chain_value(chain_, position)};
        send(ctx, std::move(f), -params_.proc_delay);
        trace(ctx, "disclose", "send");
    } else if (auto* fl = std::get_if<TFlush>(&t)) {
        flush_request_buffer(fl->src, fl->sn, ctx);
    } else if (auto* w = std::get_if<TWatchDeadline>(&t)) {
        watch_deadline(w->entry, ctx);
    } else if (auto* rw = std::get_if<TReplyWindow>(&t)) {
        close_reply_window(rw->dst, rw->sn, ctx);
    } else if (auto* dt = std::get_if<TDiscoveryTimeout>(&t)) {
        discovery_timeout(dt->dst, dt->sn, ctx);
    } else if (auto* ct = std::get_if<TChallengeTimeout>(&t)) {
        auto it = challenges_.find({ct->src, ct->sn});
        if (it == challenges_.end()) return;
        if (!it->second.on_demand) {
            for (auto& [dst, e] : routes_.entries)
                if (e.pending && e.sn == ct->sn) e.expires = ctx.now();
        }
        ctx.report({ReportKind::ChallengeRejected, id_, ct->src, kNoNode, ct->sn});
        trace(ctx, "challenge", "reject", "timeout");
        challenges_.erase(it);
    } else if (auto* lf = std::get_if<TLinkFailure>(&t)) {
        handle_link_failure(lf->frame, ctx);
    }
}

// ---------------------------------------------------------------- neighbour authentication

bool Node::auth_stale(NodeId sender, std::uint32_t key_index) const {
    auto it = nbrs_.commitments.find(sender);
    return it == nbrs_.commitments.end() || key_index >= it->second.position;
}

void Node::handle_key(const Frame& f, const KeyDisclosure& k, Context& ctx) {
    if (f.garbled || !params_.srps) return;
    NodeId sender = k.src;
    if (is_isolated(sender) || !nbrs_.is_neighbor(sender)) return;
    auto cit = nbrs_.commitments.find(sender);
    if (cit == nbrs_.commitments.end()) return;
    Commitment& c = cit->second;
    auto res = crypto::verify_and_advance(c.value, k.key, params_.nbr_max_gap);
    costs_.raw_hash += res.accepted ? res.gap : params_.nbr_max_gap;
    if (!res.accepted || res.gap > c.position) {
        trace(ctx, "key", "discard", "bad-key");
        return;
    }
    std::uint32_t old_pos = c.position;
    std::uint32_t new_pos = c.position - res.gap;
    c.value = k.key;
    c.position = new_pos;

    auto hit = held_.find(sender);
    if (hit == held_.end()) return;
    std::vector<Held> keep;
    std::vector<Held> ready;
    Time now = ctx.now();
    for (auto& h : hit->second) {
        if (now - h.received > params_.hold_timeout) {
            drop(ctx, message_name(h.frame.body), "hold-expired");
            continue;
        }
        if (h.key_index < new_pos) {
            keep.push_back(std::move(h));
        } else if (h.key_index < old_pos) {
            ready.push_back(std::move(h));
        } else {
            drop(ctx, message_name(h.frame.body), "bad-nbr-mac");
        }
    }
    hit->second = std::move(keep);
    for (auto& h : ready) {
        SymKey key = crypto::hash_f_n(k.key, h.key_index - new_pos);
        costs_.raw_hash += h.key_index - new_pos;
        ++costs_.raw_mac;
        bool ok = false;
        if (auto* r = std::get_if<Rdp>(&h.frame.body))
            ok = crypto::mac_verify(key, encode_nbr(h.frame.from, h.frame.to, *r), r->nbr_mac);
        else if (auto* p = std::get_if<Rrp>(&h.frame.body))
            ok = crypto::mac_verify(key, encode_nbr(h.frame.from, h.frame.to, *p), p->nbr_mac);
        if (!ok) {
            ++ledger_.auth_failures[sender];
            ctx.report({ReportKind::AuthFailure, id_, sender});
            drop(ctx, message_name(h.frame.body), "bad-nbr-mac");
            continue;
        }
        process_authenticated(h.frame, h.received, ctx);
    }
}

void Node::handle_authenticated(const Frame& f, Context& ctx) {
    if (f.garbled) {
        if (params_.srps) monitor_garbled(f, ctx);
        return;
    }
    const NodeId sender = f.from;
    const bool addressed = f.to == id_ || f.to == kBroadcast;
    if (!params_.srps) {
        process_authenticated(f, ctx.now(), ctx);
        return;
    }
    if (is_isolated(sender)) {
        if (addressed) drop(ctx, message_name(f.body), "isolated");
        return;
    }
    if (!nbrs_.is_neighbor(sender)) {
        if (addressed) drop(ctx, message_name(f.body), "not-neighbor");
        return;
    }
    std::uint32_t key_index = 0;
    if (auto* r = std::get_if<Rdp>(&f.body)) key_index = r->key_index;
    if (auto* p = std::get_if<Rrp>(&f.body)) key_index = p->key_index;
    if (auth_stale(sender, key_index)) {
        if (addressed) drop(ctx, message_name(f.body), "bad-nbr-mac");
        return;
    }
    monitor_record(f, ctx.now());
    auto& h = held_[sender];
    // Expire anything the sender never disclosed a key for.
    Time now = ctx.now();
    h.erase(std::remove_if(h.begin(), h.end(), [&](const Held& x) { return now - x.received > params_.hold_timeout; }),
            h.end());
    h.push_back({f, now, key_index});
    trace(ctx, message_name(f.body), "hold");
}

void Node::process_authenticated(const Frame& f, Time received, Context& ctx) {
    if (auto* r = std::get_if<Rdp>(&f.body)) {
        if (params_.srps) {
            bool claim_ok = r->prev_hop == kNoNode ? r->core.src == f.from
                                                   : (r->prev_hop == id_ || nbrs_.neighbor_of(f.from, r->prev_hop));
            if (!claim_ok) {
                drop(ctx, "rdp", "not-neighbor");
                return;
            }
            if (monitor_observe(f, received, ctx)) {
                drop(ctx, "rdp", "accused");
                return;
            }
        }
        on_rdp(f, *r, received, ctx);
    } else if (auto* p = std::get_if<Rrp>(&f.body)) {
        if (params_.srps) {
            bool claim_ok = p->prev_hop == kNoNode ? p->core.dst == f.from
                                                   : (p->prev_hop == id_ || nbrs_.neighbor_of(f.from, p->prev_hop));
            if (!claim_ok) {
                if (f.to == id_) drop(ctx, "rrp", "not-neighbor");
                return;
            }
            if (monitor_observe(f, received, ctx)) {
                if (f.to == id_) drop(ctx, "rrp", "accused");
                return;
            }
        }
        if (f.to == id_) on_rrp(f, *p, received, ctx);
    }
}

// ---------------------------------------------------------------- monitoring

bool Node::guards_link(NodeId from, NodeId to) const {
    if (from == kNoNode || to == kNoNode || to == kBroadcast) return false;
    if (from == id_) return nbrs_.is_neighbor(to);
    if (to == id_) return false;
    return nbrs_.is_neighbor(from) && nbrs_.is_neighbor(to);
}

WatchEntry& Node::watch_record(const WatchKey& key, const HashValue& digest, NodeId receiver, NodeId origin, Time now,
                               bool garbled) {
    while (watch_.size() >= std::max<std::uint32_t>(1, params_.watch_capacity)) {
        const WatchEntry& old = watch_.front();
        auto it = watch_index_.find(old.key);
        if (it != watch_index_.end()) {
            auto& ids = it->second;
            ids.erase(std::remove(ids.begin(), ids.end(), old.id), ids.end());
            if (ids.empty()) watch_index_.erase(it);
        }
        if (old.obligation) {
            auto ob = obligations_.find({old.expected_forwarder, old.key.src, old.key.num});
            if (ob != obligations_.end() && ob->second == old.id) obligations_.erase(ob);
        }
        watch_.pop_front();
    }
    WatchEntry e;
    e.id = next_watch_id_++;
    e.key = key;
    e.packet_digest = digest;
    e.expected_forwarder = receiver;
    e.origin_hop = origin;
    e.recorded_at = now;
    e.garbled = garbled;
    watch_.push_back(e);
    watch_index_[key].push_back(e.id);
    return watch_.back();
}

namespace {
template <class Deque>
auto find_by_id(Deque& d, std::uint64_t id) -> decltype(&d.front()) {
    if (d.empty() || id < d.front().id || id > d.back().id) return nullptr;
    auto it = std::lower_bound(d.begin(), d.end(), id, [](const auto& e, std::uint64_t v) { return e.id < v; });
    return (it != d.end() && it->id == id) ? &*it : nullptr;
}
}  // namespace

const WatchEntry* Node::find_watch(const WatchKey& key, Time before, NodeId receiver, bool any_receiver) const {
    auto it = watch_index_.find(key);
    if (it == watch_index_.end()) return nullptr;
    const WatchEntry* garbled = nullptr;
    const WatchEntry* clean = nullptr;
    for (auto id : it->second) {
        auto* e = find_by_id(watch_, id);
        if (!e || e->recorded_at > before) continue;
        if (!any_receiver && e->expected_forwarder != receiver && e->expected_forwarder != kBroadcast) continue;
        if (e->garbled)
            garbled = e;
        else
            clean = e;
    }
    return clean ? clean : garbled;
}

void Node::monitor_record(const Frame& f, Time now) {
    const NodeId x = f.from;
    if (auto* r = std::get_if<Rdp>(&f.body)) {
        const auto& c = r->core;
        watch_record({x, WatchKind::Rdp, c.src, c.dst, c.sn}, crypto::digest(encode_core(c)), kBroadcast, r->prev_hop,
                     now, false);
    } else if (auto* p = std::get_if<Rrp>(&f.body)) {
        const auto& c = p->core;
        watch_record({x, WatchKind::Rrp, c.src, c.dst, c.sn}, crypto::digest(encode_core(c)), f.to, p->prev_hop, now,
                     false);
    }
}

bool Node::already_judged(const WatchKey& key) {
    auto it = watch_index_.find(key);
    if (it == watch_index_.end()) return false;
    bool judged = false;
    for (auto id : it->second) {
        if (auto* e = find_by_id(watch_, id)) {
            judged = judged || e->judged;
            e->judged = true;
        }
    }
    return judged;
}

void Node::watch_data_link(NodeId sender, NodeId receiver, const Data& d, Time now, Context& ctx, Time settle) {
    const Time wait = settle + params_.forward_threshold;
    auto nxt = obligations_.find({receiver, d.src, d.seq});
    WatchEntry* existing = nxt != obligations_.end() ? find_by_id(watch_, nxt->second) : nullptr;
    if (existing) {
        if (!existing->satisfied) {  // retransmission restarts the clock
            existing->deadline = now + wait;
            ctx.set_timer(id_, TWatchDeadline{existing->id}, wait);
        }
        return;
    }
    WatchEntry& e = watch_record({sender, WatchKind::Data, d.src, d.dst, d.seq}, crypto::digest(encode_data(d)),
                                 receiver, d.prev_hop, now, false);
    e.obligation = true;
    e.deadline = now + wait;
    obligations_[{receiver, d.src, d.seq}] = e.id;
    ctx.set_timer(id_, TWatchDeadline{e.id}, wait);
}

bool Node::monitor_observe(const Frame& f, Time received, Context& ctx) {
    const NodeId x = f.from;
    bool accused = false;
    auto judge = [&](const WatchEntry* e, const HashValue& digest) {
        if (!e) {
            accuse(x, AccusationKind::Fabricate, ctx);
            accused = true;
        } else if (!e->garbled && e->packet_digest != digest) {
            accuse(x, AccusationKind::Change, ctx);
            accused = true;
        }
    };
    if (auto* r = std::get_if<Rdp>(&f.body)) {
        const auto& c = r->core;
        HashValue d = crypto::digest(encode_core(c));
        if (r->prev_hop == kNoNode || !guards_link(r->prev_hop, x)) return false;
        if (already_judged({x, WatchKind::Rdp, c.src, c.dst, c.sn})) return false;
        if (r->prev_hop == id_) {
            auto st = requests_.find({c.src, c.sn});
            bool sent = st != requests_.end() && st->second.forwarded;
            if (!sent) {
                accuse(x, AccusationKind::Fabricate, ctx);
                accused = true;
            } else if (crypto::digest(encode_core(st->second.core)) != d) {
                accuse(x, AccusationKind::Change, ctx);
                accused = true;
            }
        } else {
            judge(find_watch({r->prev_hop, WatchKind::Rdp, c.src, c.dst, c.sn}, received, x, true), d);
        }
        return accused;
    }
    if (auto* p = std::get_if<Rrp>(&f.body)) {
        const auto& c = p->core;
        HashValue d = crypto::digest(encode_core(c));
        // A node forwarding a second, different reply for the same discovery.
        auto rk = std::make_tuple(x, c.src, c.dst, c.sn);
        crypto::ByteWriter idw;
        idw.u32(f.to).u32(p->prev_hop).raw(d);
        HashValue ident = crypto::digest(idw.bytes());
        while (!reply_watch_order_.empty() && received - reply_watch_order_.front().first > params_.tau) {
            auto k = reply_watch_order_.front().second;
            auto it = reply_watch_.find(k);
            if (it != reply_watch_.end() && received - it->second.first > params_.tau) reply_watch_.erase(it);
            reply_watch_order_.pop_front();
        }
        auto rit = reply_watch_.find(rk);
        if (rit != reply_watch_.end() && rit->second.second != ident && x != c.dst) {
            accuse(x, AccusationKind::DuplicateReply, ctx);
            for (NodeId t : {c.src, c.dst}) {
                auto e = routes_.entries.find(t);
                if (e != routes_.entries.end() && e->second.next_hop == x) routes_.entries.erase(e);
            }
            rit->second.second = ident;
            return true;
        }
        if (rit == reply_watch_.end()) {
            reply_watch_[rk] = {received, ident};
            reply_watch_order_.push_back({received, rk});
        }
        if (p->prev_hop == kNoNode || !guards_link(p->prev_hop, x)) return false;
        if (already_judged({x, WatchKind::Rrp, c.src, c.dst, c.sn})) return false;
        if (p->prev_hop == id_) {
            bool sent = false;
            if (c.dst == id_) {
                auto dc = dst_chains_.find(c.src);
                if (dc != dst_chains_.end()) {
                    auto rs = dc->second.replied_by_sn.find(c.sn);
                    sent = rs != dc->second.replied_by_sn.end() && rs->second.count(x);
                }
            } else {
                auto st = requests_.find({c.src, c.sn});
                sent = st != requests_.end() && st->second.reply_forwarded && st->second.heard_from == x;
            }
            if (!sent) {
                accuse(x, AccusationKind::Fabricate, ctx);
                accused = true;
            }
        } else {
            judge(find_watch({p->prev_hop, WatchKind::Rrp, c.src, c.dst, c.sn}, received, x, false), d);
        }
        return accused;
    }
    if (auto* dd = std::get_if<Data>(&f.body)) {
        if (!params_.monitor_data) return false;
        HashValue d = crypto::digest(encode_data(*dd));
        auto ob = obligations_.find({x, dd->src, dd->seq});
        if (ob != obligations_.end()) {
            if (auto* e = find_by_id(watch_, ob->second); e && !e->satisfied) {
                e->satisfied = true;
                if (e->packet_digest != d) {
                    accuse(x, AccusationKind::Change, ctx);
                    accused = true;
                }
            }
        }
        if (f.to != dd->dst && guards_link(x, f.to)) watch_data_link(x, f.to, *dd, received, ctx);
        return accused;
    }
    if (auto* re = std::get_if<RouteError>(&f.body)) {
        if (!re->has_seq) return false;
        auto ob = obligations_.find({x, re->src, re->seq});
        if (ob != obligations_.end())
            if (auto* e = find_by_id(watch_, ob->second)) e->satisfied = true;
    }
    return false;
}

void Node::monitor_garbled(const Frame& f, Context& ctx) {
    const NodeId x = f.from;
    if (!params_.collision_aware || is_isolated(x) || !nbrs_.is_neighbor(x)) return;
    if (auto* r = std::get_if<Rdp>(&f.body)) {
        watch_record({x, WatchKind::Rdp, r->core.src, r->core.dst, r->core.sn}, {}, kBroadcast, kNoNode, ctx.now(),
                     true);
    } else if (auto* p = std::get_if<Rrp>(&f.body)) {
        watch_record({x, WatchKind::Rrp, p->core.src, p->core.dst, p->core.sn}, {}, f.to, kNoNode, ctx.now(), true);
    } else if (auto* d = std::get_if<Data>(&f.body)) {
        auto ob = obligations_.find({x, d->src, d->seq});
        if (ob != obligations_.end())
            if (auto* e = find_by_id(watch_, ob->second)) e->satisfied = true;
        // A garbled retransmission still shows the receiver has not got the packet yet.
        auto next = obligations_.find({f.to, d->src, d->seq});
        if (next != obligations_.end())
            if (auto* e = find_by_id(watch_, next->second); e && !e->satisfied) {
                e->deadline = ctx.now() + params_.forward_threshold;
                ctx.set_timer(id_, TWatchDeadline{e->id}, params_.forward_threshold);
            }
    } else if (auto* re = std::get_if<RouteError>(&f.body)) {
        if (!re->has_seq) return;
        auto ob = obligations_.find({x, re->src, re->seq});
        if (ob != obligations_.end())
            if (auto* e = find_by_id(watch_, ob->second)) e->satisfied = true;
    }
}

void Node::watch_deadline(std::uint64_t entry, Context& ctx) {
    auto* e = find_by_id(watch_, entry);
    if (!e || e->satisfied || !e->obligation) return;
    if (ctx.now() + 1e-12 < e->deadline) return;  // refreshed by a retransmission
    e->satisfied = true;
    NodeId accused = e->expected_forwarder;
    if (is_isolated(accused)) return;
    accuse(accused, AccusationKind::Drop, ctx);
}

void Node::accuse(NodeId accused, AccusationKind kind, Context& ctx) {
    if (accused == id_ || accused == kNoNode) return;
    Time now = ctx.now();
    ctx.report({ReportKind::Accusation, id_, accused, kNoNode, 0, false, kind});
    if (ctx.tracing()) trace(ctx, "monitor", "accuse", std::string(to_string(kind)) + " " + std::to_string(accused));
    auto& q = ledger_.mal_c[accused];
    q.push_back(now);
    while (!q.empty() && now - q.front() > params_.t_window) q.pop_front();
    if (q.size() < params_.beta || ledger_.alerted.count(accused)) return;
    ledger_.alerted.insert(accused);
    ctx.report({ReportKind::AlertSent, id_, accused, kNoNode, 0, false, kind});
    trace(ctx, "monitor", "alert", to_string(kind));
    auto nit = nbrs_.two_hop.find(accused);
    std::set<NodeId> targets;
    if (nit != nbrs_.two_hop.end()) targets = nit->second;
    note_alert(id_, accused, ctx);
    for (NodeId n : targets)
        if (n != id_ && n != accused) send_alert(accused, kind, n, ctx);
}

void Node::send_alert(NodeId accused, AccusationKind kind, NodeId target, Context& ctx) {
    Alert a;
    a.guard = id_;
    a.accused = accused;
    a.kind = kind;
    a.target = target;
    a.mac = crypto::mac(ctx.keys().pair_key(id_, target), encode_alert(a));
    ++costs_.raw_mac;
    relayed_alerts_.insert({id_, accused, target});
    forward_alert(a, kNoNode, ctx);
}

void Node::forward_alert(const Alert& a, NodeId came_from, Context& ctx) {
    auto unicast = [&](NodeId hop, const Alert& body) {
        Frame f;
        f.to = hop;
        f.body = body;
        send(ctx, std::move(f));
    };
    auto usable = [&](NodeId r) { return r != a.accused && r != came_from && r != id_ && !is_isolated(r); };
    if (nbrs_.is_neighbor(a.target)) {
        unicast(a.target, a);
        return;
    }
    for (NodeId r : nbrs_.one_hop)
        if (usable(r) && nbrs_.neighbor_of(r, a.target)) {
            unicast(r, a);
            return;
        }
    if (a.ttl == 0) return;
    Alert next = a;
    --next.ttl;
    if (auto r = route_to(a.target, ctx.now()); r && usable(r->next_hop)) {
        unicast(r->next_hop, next);
        return;
    }
    const std::set<NodeId>* ring = nullptr;
    if (auto it = nbrs_.two_hop.find(a.accused); it != nbrs_.two_hop.end()) ring = &it->second;
    else if (auto iso = isolated_nbrs_.find(a.accused); iso != isolated_nbrs_.end()) ring = &iso->second;
    if (!ring) return;
    for (NodeId r : *ring)
        if (usable(r) && nbrs_.is_neighbor(r)) unicast(r, next);
}

void Node::handle_alert(const Frame& f, const Alert& a, Context& ctx) {
    if (f.garbled || f.to != id_) return;
    if (a.target != id_) {
        if (a.target == a.accused || !relayed_alerts_.insert({a.guard, a.accused, a.target}).second) return;
        forward_alert(a, f.from, ctx);
        return;
    }
    ++costs_.raw_mac;
    if (!crypto::mac_verify(ctx.keys().pair_key(a.guard, id_), encode_alert(a), a.mac)) {
        drop(ctx, "alert", "bad-mac");
        return;
    }
    if (a.accused == id_) return;
    note_alert(a.guard, a.accused, ctx);
}

void Node::note_alert(NodeId guard, NodeId accused, Context& ctx) {
    auto& s = ledger_.alerts_received[accused];
    s.insert(guard);
    if (s.size() < params_.gamma || is_isolated(accused)) return;
    ledger_.isolated.insert(accused);
    nbrs_.one_hop.erase(accused);
    nbrs_.commitments.erase(accused);
    if (auto it = nbrs_.two_hop.find(accused); it != nbrs_.two_hop.end()) {
        isolated_nbrs_[accused] = std::move(it->second);
        nbrs_.two_hop.erase(it);
    }
    for (auto& [n, set] : nbrs_.two_hop) set.erase(accused);
    held_.erase(accused);
    purge_routes_via(accused);
    ctx.report({ReportKind::Isolated, id_, accused});
    trace(ctx, "alert", "isolate");
}

void Node::purge_routes_via(NodeId n) {
    for (auto it = routes_.entries.begin(); it != routes_.entries.end();) {
        if (it->second.next_hop == n || it->first == n)
            it = routes_.entries.erase(it);
        else
            ++it;
    }
    for (auto& [dst, alts] : routes_.alternates)
        alts.erase(std::remove_if(alts.begin(), alts.end(), [n](const RouteEntry& e) { return e.next_hop == n; }),
                   alts.end());
}

// ---------------------------------------------------------------- routes

void Node::install_route(Context& ctx, NodeId dst, NodeId next_hop, std::uint32_t sn, bool tainted, bool pending) {
    if (dst == id_ || next_hop == kNoNode) return;
    if (params_.srps && (!nbrs_.is_neighbor(next_hop) || is_isolated(next_hop))) return;
    RouteEntry e;
    e.next_hop = next_hop;
    e.sn = sn;
    e.installed = ctx.now();
    e.expires = ctx.now() + params_.route_timeout;
    e.tainted = tainted;
    e.pending = pending;
    routes_.entries[dst] = e;
}

std::optional<RouteEntry> Node::route_to(NodeId dst, Time now) const {
    auto it = routes_.entries.find(dst);
    if (it == routes_.entries.end()) return std::nullopt;
    const auto& e = it->second;
    if (e.expires <= now || e.pending || is_isolated(e.next_hop)) return std::nullopt;
    return e;
}

std::vector<RouteEntry> Node::ranked_routes(NodeId dst) const {
    std::vector<RouteEntry> out;
    auto it = routes_.entries.find(dst);
    if (it != routes_.entries.end()) out.push_back(it->second);
    auto a = routes_.alternates.find(dst);
    if (a != routes_.alternates.end()) out.insert(out.end(), a->second.begin(), a->second.end());
    return out;
}

const RequestState* Node::request_state(NodeId src, std::uint32_t sn) const {
    auto it = requests_.find({src, sn});
    return it == requests_.end() ? nullptr : &it->second;
}

std::uint32_t Node::next_request_index(NodeId dst) const {
    auto it = src_chains_.find(dst);
    return it == src_chains_.end() ? params_.snv_length : it->second.next_req_idx;
}

std::vector<Node::ReplyArrival> Node::reply_priority(std::vector<ReplyArrival> replies, double tau) {
    if (replies.empty()) return replies;
    std::stable_sort(replies.begin(), replies.end(),
                     [](const ReplyArrival& a, const ReplyArrival& b) { return a.arrival < b.arrival; });
    Time first = replies.front().arrival;
    replies.erase(std::remove_if(replies.begin(), replies.end(),
                                 [&](const ReplyArrival& r) { return r.arrival - first > tau; }),
                  replies.end());
    return replies;
}

Time Node::request_wait(Context& ctx) {
    if (!params_.srps) {
        if (params_.baseline_jitter <= 0) return 0;
        std::uniform_real_distribution<double> j(0, params_.baseline_jitter);
        return j(ctx.rng(id_));
    }
    std::uniform_real_distribution<double> u(params_.t_r_min, params_.t_r_max);
    return u(ctx.rng(id_));
}

}  // namespace srps::proto
