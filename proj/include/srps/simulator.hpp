#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "srps/adversary.hpp"
#include "srps/node.hpp"
#include "srps/topology.hpp"

namespace srps::sim {

using proto::Frame;
using proto::Time;

enum class PcMode : std::uint8_t { Fixed, LinearInNb };

struct MediumModel {
    PcMode mode = PcMode::LinearInNb;
    double fixed_pc = 0.0;
    double base_pc = 0.05;  // collision probability at base_nb neighbours
    double base_nb = 3;
    double cap = 0.95;
    double bandwidth_kbps = 40;

    double pc(double nb) const;
    double tx_time(std::uint32_t bytes) const { return 8.0 * bytes / (bandwidth_kbps * 1000.0); }
};

enum class TrafficMode : std::uint8_t { Data, Discovery, None };

struct SimParams {
    proto::ProtocolParams proto;
    MediumModel medium;
    double nb_for_pc = 8;  // neighbour count fed to the linear collision law
    double mu = 0.1;
    double xi = 1.0 / 200;
    double horizon = 2000;
    TrafficMode traffic = TrafficMode::Data;
    std::uint32_t arq_retries = 7;
    double ack_time = 0.001;
    bool trace = false;
    std::uint64_t key_master = 0x5eed5eedULL;
};

struct RunMetrics {
    std::uint64_t seed = 0;
    std::uint64_t packets_generated = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_dropped = 0;
    std::uint64_t wormhole_drops = 0;
    std::uint64_t in_flight = 0;
    std::map<std::string, std::uint64_t> drops_by_reason;
    std::vector<std::pair<double, std::uint64_t>> drops_timeline;  // cumulative wormhole-attributed drops
    std::uint64_t routes_total = 0;
    std::uint64_t routes_malicious = 0;
    std::uint64_t discoveries = 0;
    std::uint64_t discovery_failures = 0;
    std::map<std::string, std::uint64_t> accusations;
    std::uint64_t alerts = 0;
    std::uint64_t malicious_events = 0;
    std::uint64_t auth_failures = 0;
    std::uint64_t frames_sent = 0;
    std::uint64_t bytes_sent = 0;
    std::vector<proto::NodeId> malicious;
    std::map<proto::NodeId, double> isolation_latency;  // only nodes isolated by every neighbour
    std::map<proto::NodeId, double> isolation_time;
    std::map<proto::NodeId, std::uint32_t> alerting_guards;
    std::map<proto::NodeId, bool> detected;  // at least gamma distinct guards alerted
    std::uint64_t false_isolations = 0;      // honest nodes isolated by someone
    double attack_start = 0;
    double horizon = 0;
    double mean_degree = 0;
    double mean_guards = 0;
    double pc = 0;

    std::uint64_t wormhole_drops_after(double t) const;
};

class Simulator : public proto::Context {
public:
    Simulator(Topology topo, std::vector<proto::NodeId> malicious, SimParams params,
              adversary::AdversaryProfile profile, std::uint64_t seed);
    ~Simulator() override;

    // Collision-free neighbour discovery at negative time.
    void setup();
    void start_traffic();
    void run_until(Time t);
    // setup, traffic and run to the horizon
    RunMetrics run();
    RunMetrics metrics() const;

    proto::Node& node(proto::NodeId id) { return *nodes_.at(id); }
    adversary::MaliciousNode* malicious_node(proto::NodeId id);
    const Topology& topology() const { return topo_; }
    const std::vector<proto::NodeId>& malicious() const { return malicious_; }
    const SimParams& params() const { return params_; }
    double pc() const { return pc_; }
    void set_pc(double pc) { pc_ = pc; }
    void schedule(Time at, std::function<void()> fn);
    const std::vector<std::string>& trace_lines() const { return trace_; }
    const std::vector<proto::Report>& reports() const { return reports_; }
    const std::vector<double>& report_times() const { return report_times_; }
    void keep_reports(bool on) { keep_reports_ = on; }

    // Context
    Time now() const override { return now_; }
    Time transmit(Frame f, Time delay) override;
    void set_timer(proto::NodeId self, proto::Timer t, Time delay) override;
    std::mt19937_64& rng(proto::NodeId self) override { return node_rng_.at(self); }
    const crypto::KeyOracle& keys() const override { return keys_; }
    void announce_rekey(proto::NodeId self, const proto::Commitment& c) override;
    void tunnel(proto::NodeId self, proto::NodeId to, Frame f, Time delay) override;
    bool tracing() const override { return params_.trace; }
    void trace(proto::NodeId node, std::string_view event, std::string_view action, std::string_view reason) override;
    void report(const proto::Report& r) override;

private:
    struct Delivery {
        proto::NodeId to;
        Frame frame;
        bool intended;  // clean copy to the addressed receiver
    };
    struct TimerFire {
        proto::NodeId to;
        proto::Timer timer;
    };
    struct TunnelArrival {
        proto::NodeId to;
        Frame frame;
    };
    struct Callback {
        std::function<void()> fn;
    };
    using Payload = std::variant<Delivery, TimerFire, TunnelArrival, Callback>;
    struct Event {
        Time t;
        std::uint64_t seq;
        std::size_t slot;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };

    void push(Time t, Payload p);
    void dispatch(Payload& p);
    void traffic_packet(proto::NodeId n);
    void traffic_discovery(proto::NodeId n);
    void redraw_destination(proto::NodeId n);
    double exp_sample(double rate);

    Topology topo_;
    std::vector<proto::NodeId> malicious_;
    std::vector<bool> is_malicious_;
    std::vector<proto::NodeId> honest_;
    SimParams params_;
    adversary::AdversaryProfile profile_;
    crypto::KeyOracle keys_;
    std::vector<std::unique_ptr<proto::Node>> nodes_;
    std::vector<std::mt19937_64> node_rng_;
    std::mt19937_64 medium_rng_;
    std::mt19937_64 traffic_rng_;
    double pc_ = 0;
    Time now_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::vector<Payload> slots_;
    std::vector<std::size_t> free_slots_;
    std::vector<proto::NodeId> dest_;
    std::vector<std::uint32_t> data_seq_;
    std::vector<std::string> trace_;
    std::vector<proto::Report> reports_;
    std::vector<double> report_times_;
    bool keep_reports_ = false;
    RunMetrics m_;
    std::map<proto::NodeId, std::set<proto::NodeId>> isolators_;
    std::map<proto::NodeId, std::set<proto::NodeId>> alert_guards_;
    std::uint64_t seed_;
};

// Streams derived from one seed: per node, medium and traffic.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace srps::sim
