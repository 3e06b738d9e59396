#include "srps/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace srps::sim {

using proto::kBroadcast;
using proto::kNoNode;
using proto::NodeId;
using proto::Report;
using proto::ReportKind;

double MediumModel::pc(double nb) const {
    if (mode == PcMode::Fixed) return fixed_pc;
    return std::min(base_pc * nb / base_nb, cap);
}

std::uint64_t RunMetrics::wormhole_drops_after(double t) const {
    std::uint64_t before = 0;
    for (const auto& [time, total] : drops_timeline)
        if (time <= t) before = total;
    return wormhole_drops - before;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 over (master, stream)
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Simulator::Simulator(Topology topo, std::vector<NodeId> malicious, SimParams params,
                     adversary::AdversaryProfile profile, std::uint64_t seed)
    : topo_(std::move(topo)),
      malicious_(std::move(malicious)),
      params_(params),
      profile_(std::move(profile)),
      keys_(params.key_master ^ seed),
      medium_rng_(derive_seed(seed, 1)),
      traffic_rng_(derive_seed(seed, 2)),
      seed_(seed) {
    const std::size_t n = topo_.size();
    is_malicious_.assign(n, false);
    for (NodeId m : malicious_) is_malicious_.at(m) = true;
    for (NodeId i = 0; i < n; ++i)
        if (!is_malicious_[i]) honest_.push_back(i);
    pc_ = params_.medium.pc(params_.nb_for_pc);
    profile_.colluders = malicious_;
    for (NodeId i = 0; i < n; ++i) {
        node_rng_.emplace_back(derive_seed(seed, 1000 + i));
        auto chain_seed = keys_.chain_seed(i, 0);
        if (is_malicious_[i]) {
            auto mn = std::make_unique<adversary::MaliciousNode>(i, params_.proto, chain_seed, profile_);
            auto hops = topo_.hops_from(i);
            std::map<NodeId, std::uint32_t> ch;
            for (NodeId c : malicious_)
                if (c != i) ch[c] = hops[c] < 0 ? 1 : static_cast<std::uint32_t>(hops[c]);
            mn->set_colluder_hops(std::move(ch));
            nodes_.push_back(std::move(mn));
        } else {
            nodes_.push_back(std::make_unique<proto::Node>(i, params_.proto, chain_seed));
        }
    }
    dest_.assign(n, kNoNode);
    data_seq_.assign(n, 0);
    m_.seed = seed;
    m_.malicious = malicious_;
    m_.attack_start = profile_.start_s;
    m_.horizon = params_.horizon;
    m_.mean_degree = topo_.mean_degree();
    m_.mean_guards = topo_.mean_guards_per_link();
    m_.pc = pc_;
    for (NodeId mal : malicious_) m_.detected[mal] = false;
}

Simulator::~Simulator() = default;

adversary::MaliciousNode* Simulator::malicious_node(NodeId id) {
    return is_malicious_.at(id) ? static_cast<adversary::MaliciousNode*>(nodes_.at(id).get()) : nullptr;
}

void Simulator::push(Time t, Payload p) {
    std::size_t slot;
    if (!free_slots_.empty()) {
        slot = free_slots_.back();
        free_slots_.pop_back();
        slots_[slot] = std::move(p);
    } else {
        slot = slots_.size();
        slots_.push_back(std::move(p));
    }
    queue_.push({t, seq_++, slot});
}

void Simulator::schedule(Time at, std::function<void()> fn) { push(std::max(at, now_), Callback{std::move(fn)}); }

void Simulator::set_timer(NodeId self, proto::Timer t, Time delay) {
    push(now_ + std::max(0.0, delay), TimerFire{self, std::move(t)});
}

void Simulator::tunnel(NodeId self, NodeId to, Frame f, Time delay) {
    (void)self;
    if (to >= nodes_.size()) return;
    push(now_ + std::max(0.0, delay), TunnelArrival{to, std::move(f)});
}

void Simulator::announce_rekey(NodeId self, const proto::Commitment& c) {
    for (NodeId n : topo_.adj.at(self)) nodes_[n]->install_commitment(self, c);
}

Time Simulator::transmit(Frame f, Time delay) {
    const NodeId tx = f.phys_tx;
    const Time start = now_ + std::max(0.0, delay);
    const double dur = params_.medium.tx_time(f.size);
    const double pc = now_ < 0 ? 0.0 : pc_;
    const bool garble = params_.proto.collision_aware;
    std::bernoulli_distribution collide(pc);
    ++m_.frames_sent;
    m_.bytes_sent += f.size;
    const auto& nbrs = topo_.adj.at(tx);
    if (params_.trace) {
        std::string dst = f.to == kBroadcast ? "bcast" : std::to_string(f.to);
        auto id = [](NodeId n) { return n == kNoNode ? std::string("-") : std::to_string(n); };
        if (auto* d = std::get_if<proto::Data>(&f.body))
            dst += " " + std::to_string(d->src) + ":" + std::to_string(d->seq);
        else if (auto* r = std::get_if<proto::Rdp>(&f.body))
            dst += " " + id(r->core.src) + ">" + id(r->core.dst) + "#" + std::to_string(r->core.sn) + " prev=" + id(r->prev_hop);
        else if (auto* p = std::get_if<proto::Rrp>(&f.body))
            dst += " " + id(p->core.src) + ">" + id(p->core.dst) + "#" + std::to_string(p->core.sn) + " prev=" +
                   id(p->prev_hop) + " echo=" + id(p->echo);
        trace(tx, proto::message_name(f.body), "tx", dst);
    }

    auto deliver_copy = [&](NodeId n, Time at, bool collided, bool intended) {
        if (collided) {
            if (!garble) return;
            Frame g = f;
            g.garbled = true;
            push(at, Delivery{n, std::move(g), false});
        } else {
            push(at, Delivery{n, f, intended});
        }
    };

    if (f.to == kBroadcast) {
        for (NodeId n : nbrs) deliver_copy(n, start + dur, pc > 0 && collide(medium_rng_), false);
        return start + dur;
    }
    Time end = start + dur;
    bool got = false;
    for (std::uint32_t k = 0; k <= params_.arq_retries && !got; ++k) {
        Time t0 = start + k * (dur + params_.ack_time);
        end = t0 + dur;
        for (NodeId n : nbrs) {
            bool c = pc > 0 && collide(medium_rng_);
            if (n == f.to && !c) got = true;
            deliver_copy(n, end, c, n == f.to);
        }
        if (k > 0) {
            ++m_.frames_sent;
            m_.bytes_sent += f.size;
        }
    }
    if (!got) push(end + params_.ack_time, TimerFire{tx, proto::TLinkFailure{f}});
    return end;
}

void Simulator::trace(NodeId node, std::string_view event, std::string_view action, std::string_view reason) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f\t%u\t", now_, node);
    std::string line(buf);
    line.append(event).append("\t").append(action).append("\t").append(reason);
    trace_.push_back(std::move(line));
}

void Simulator::report(const Report& r) {
    if (keep_reports_) {
        reports_.push_back(r);
        report_times_.push_back(now_);
    }
    switch (r.kind) {
        case ReportKind::DataGenerated: ++m_.packets_generated; break;
        case ReportKind::DataDelivered: ++m_.packets_delivered; break;
        case ReportKind::DataDropped:
            ++m_.packets_dropped;
            ++m_.drops_by_reason[std::string(r.reason)];
            if (r.flag) {
                ++m_.wormhole_drops;
                m_.drops_timeline.emplace_back(now_, m_.wormhole_drops);
            }
            break;
        case ReportKind::RouteInstalled:
            ++m_.routes_total;
            if (r.flag) ++m_.routes_malicious;
            break;
        case ReportKind::DiscoveryStarted: ++m_.discoveries; break;
        case ReportKind::DiscoveryFailed: ++m_.discovery_failures; break;
        case ReportKind::Accusation: ++m_.accusations[std::string(proto::to_string(r.akind))]; break;
        case ReportKind::AlertSent:
            ++m_.alerts;
            if (r.a < is_malicious_.size() && is_malicious_[r.a]) {
                auto& g = alert_guards_[r.a];
                g.insert(r.node);
                m_.alerting_guards[r.a] = static_cast<std::uint32_t>(g.size());
                if (g.size() >= params_.proto.gamma) m_.detected[r.a] = true;
            }
            break;
        case ReportKind::Isolated:
            if (r.a < is_malicious_.size() && is_malicious_[r.a]) {
                auto& s = isolators_[r.a];
                s.insert(r.node);
                bool all = std::all_of(topo_.adj[r.a].begin(), topo_.adj[r.a].end(),
                                       [&](NodeId n) { return s.count(n) != 0; });
                if (all && !m_.isolation_time.count(r.a)) {
                    m_.isolation_time[r.a] = now_;
                    m_.isolation_latency[r.a] = now_ - profile_.start_s;
                }
            } else {
                ++m_.false_isolations;
            }
            break;
        case ReportKind::MaliciousEvent: ++m_.malicious_events; break;
        case ReportKind::AuthFailure: ++m_.auth_failures; break;
        default: break;
    }
}

void Simulator::dispatch(Payload& p) {
    if (auto* d = std::get_if<Delivery>(&p)) {
        nodes_[d->to]->on_frame(d->frame, *this);
    } else if (auto* t = std::get_if<TimerFire>(&p)) {
        nodes_[t->to]->on_timer(t->timer, *this);
    } else if (auto* a = std::get_if<TunnelArrival>(&p)) {
        nodes_[a->to]->on_tunnel(a->frame, *this);
    } else if (auto* c = std::get_if<Callback>(&p)) {
        c->fn();
    }
}

void Simulator::run_until(Time t) {
    while (!queue_.empty() && queue_.top().t <= t) {
        Event e = queue_.top();
        queue_.pop();
        now_ = e.t;
        Payload p = std::move(slots_[e.slot]);
        free_slots_.push_back(e.slot);
        dispatch(p);
    }
    now_ = std::max(now_, t);
}

void Simulator::setup() {
    // Hello exchange, then neighbour lists, all collision-free before time zero.
    now_ = -10;
    for (auto& n : nodes_) n->begin_setup(*this);
    run_until(-5);
    for (auto& n : nodes_) n->announce_neighbors(*this);
    run_until(-1);
    for (auto& n : nodes_) {
        n->finish_setup();
        n->reset_costs();
    }
    m_.frames_sent = 0;
    m_.bytes_sent = 0;
    run_until(0);
}

double Simulator::exp_sample(double rate) {
    std::exponential_distribution<double> e(rate);
    return e(traffic_rng_);
}

void Simulator::redraw_destination(NodeId n) {
    if (honest_.size() < 2) return;
    std::uniform_int_distribution<std::size_t> u(0, honest_.size() - 2);
    std::size_t k = u(traffic_rng_);
    NodeId d = honest_[k];
    if (d == n) d = honest_[honest_.size() - 1];
    dest_[n] = d;
    if (params_.xi > 0) schedule(now_ + exp_sample(params_.xi), [this, n] { redraw_destination(n); });
}

void Simulator::traffic_packet(NodeId n) {
    if (dest_[n] != kNoNode) nodes_[n]->send_data(dest_[n], ++data_seq_[n], *this);
    schedule(now_ + exp_sample(params_.mu), [this, n] { traffic_packet(n); });
}

void Simulator::traffic_discovery(NodeId n) {
    if (dest_[n] != kNoNode) nodes_[n]->initiate_discovery(dest_[n], *this);
    schedule(now_ + exp_sample(params_.mu), [this, n] { traffic_discovery(n); });
}

void Simulator::start_traffic() {
    if (params_.traffic == TrafficMode::None || params_.mu <= 0 || honest_.size() < 2) return;
    for (NodeId n : honest_) {
        redraw_destination(n);
        if (params_.traffic == TrafficMode::Data)
            schedule(now_ + exp_sample(params_.mu), [this, n] { traffic_packet(n); });
        else
            schedule(now_ + exp_sample(params_.mu), [this, n] { traffic_discovery(n); });
    }
}

RunMetrics Simulator::run() {
    setup();
    start_traffic();
    run_until(params_.horizon);
    return metrics();
}

RunMetrics Simulator::metrics() const {
    RunMetrics out = m_;
    std::uint64_t flight = 0;
    for (const auto& n : nodes_) flight += n->queued_data();
    // Scan pending events for data still travelling.
    auto q = queue_;
    while (!q.empty()) {
        const Payload& p = slots_[q.top().slot];
        q.pop();
        if (auto* d = std::get_if<Delivery>(&p)) {
            if (d->intended && std::holds_alternative<proto::Data>(d->frame.body)) ++flight;
        } else if (auto* t = std::get_if<TimerFire>(&p)) {
            if (auto* lf = std::get_if<proto::TLinkFailure>(&t->timer))
                if (std::holds_alternative<proto::Data>(lf->frame.body)) ++flight;
        } else if (auto* a = std::get_if<TunnelArrival>(&p)) {
            if (std::holds_alternative<proto::Data>(a->frame.body)) ++flight;
        }
    }
    out.in_flight = flight;
    out.drops_timeline.insert(out.drops_timeline.begin(), {0.0, 0});
    out.drops_timeline.emplace_back(now_, out.wormhole_drops);
    return out;
}

}  // namespace srps::sim
