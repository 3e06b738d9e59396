#include "srps/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace srps::sim {

adversary::AdversaryProfile ScenarioConfig::default_adversary() {
    adversary::AdversaryProfile p;
    p.behaviors = {adversary::Behavior::Wormhole, adversary::Behavior::DropData};
    return p;
}

proto::ProtocolParams ScenarioConfig::protocol_params() const {
    proto::ProtocolParams p = proto;
    p.srps = srps;
    p.gamma = gamma;
    p.beta = beta;
    p.t_window = t;
    p.tau = tau;
    p.route_timeout = route_timeout_s;
    return p;
}

SimParams ScenarioConfig::sim_params() const {
    SimParams s;
    s.proto = protocol_params();
    s.medium = medium;
    s.medium.bandwidth_kbps = bw_kbps;
    s.nb_for_pc = nb;
    s.mu = mu;
    s.xi = xi;
    s.horizon = horizon;
    s.traffic = traffic;
    s.trace = trace;
    return s;
}

std::uint64_t run_seed(const ScenarioConfig& c, std::uint32_t run_index) { return derive_seed(c.seed, run_index); }

RunOutput run_scenario(const ScenarioConfig& c, std::uint32_t run_index) {
    const std::uint64_t seed = run_seed(c, run_index);
    std::mt19937_64 topo_rng(derive_seed(seed, 0));
    TopologyRequest req;
    req.n = c.n;
    req.target_nb = c.nb;
    req.range_r = c.r;
    req.malicious = c.m;
    req.min_malicious_hops = c.min_malicious_hops;
    req.max_attempts = c.topology_attempts;
    PlacedTopology placed = generate_topology(req, topo_rng);
    adversary::AdversaryProfile profile = c.adversary;
    if (c.m < 2) profile.behaviors.erase(adversary::Behavior::Wormhole);
    Simulator sim(std::move(placed.topology), placed.malicious, c.sim_params(), profile, seed);
    RunOutput out;
    out.metrics = sim.run();
    out.trace = sim.trace_lines();
    return out;
}

std::vector<std::pair<std::string, double>> scalar_metrics(const RunMetrics& m, const ScenarioConfig& c) {
    double lat_sum = 0;
    double lat_max = 0;
    for (const auto& [id, l] : m.isolation_latency) {
        lat_sum += l;
        lat_max = std::max(lat_max, l);
    }
    double detected = 0;
    for (const auto& [id, d] : m.detected) detected += d ? 1 : 0;
    const double nm = static_cast<double>(m.malicious.size());
    double max_iso = 0;
    for (const auto& [id, t] : m.isolation_time) max_iso = std::max(max_iso, t);
    const bool all_isolated = !m.malicious.empty() && m.isolation_time.size() == m.malicious.size();
    double settle = all_isolated ? max_iso + c.route_timeout_s + 10 : m.horizon;
    std::vector<std::pair<std::string, double>> v = {
        {"packets_generated", double(m.packets_generated)},
        {"packets_delivered", double(m.packets_delivered)},
        {"packets_dropped", double(m.packets_dropped)},
        {"wormhole_drops", double(m.wormhole_drops)},
        {"wormhole_drops_half", double(m.wormhole_drops - m.wormhole_drops_after(m.horizon / 2))},
        {"wormhole_drops_after_settle", double(m.wormhole_drops_after(settle))},
        {"in_flight", double(m.in_flight)},
        {"routes_total", double(m.routes_total)},
        {"routes_malicious", double(m.routes_malicious)},
        {"discoveries", double(m.discoveries)},
        {"discovery_failures", double(m.discovery_failures)},
        {"alerts", double(m.alerts)},
        {"malicious_events", double(m.malicious_events)},
        {"auth_failures", double(m.auth_failures)},
        {"false_isolations", double(m.false_isolations)},
        {"isolated_fraction", nm > 0 ? m.isolation_latency.size() / nm : 0},
        {"detection_rate", nm > 0 ? detected / nm : 0},
        {"isolation_latency_mean", m.isolation_latency.empty() ? 0 : lat_sum / m.isolation_latency.size()},
        {"isolation_latency_max", lat_max},
        {"frames_sent", double(m.frames_sent)},
        {"bytes_sent", double(m.bytes_sent)},
        {"mean_degree", m.mean_degree},
        {"mean_guards", m.mean_guards},
        {"pc", m.pc},
    };
    return v;
}

Stat summarize(const std::vector<double>& xs) {
    Stat s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= xs.size();
    if (xs.size() > 1) {
        double v = 0;
        for (double x : xs) v += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(v / (xs.size() - 1));
    }
    return s;
}

Aggregate aggregate(const std::vector<RunMetrics>& runs, const ScenarioConfig& c) {
    Aggregate a;
    a.runs = runs;
    std::map<std::string, std::vector<double>> cols;
    for (const auto& r : runs)
        for (const auto& [k, v] : scalar_metrics(r, c)) {
            if (!cols.count(k)) a.names.push_back(k);
            cols[k].push_back(v);
        }
    for (const auto& [k, xs] : cols) a.stats[k] = summarize(xs);
    return a;
}

Aggregate aggregate_runs(const ScenarioConfig& c, unsigned jobs) {
    std::vector<RunMetrics> runs(c.runs);
    if (jobs <= 1 || c.runs <= 1) {
        for (std::uint32_t i = 0; i < c.runs; ++i) runs[i] = run_scenario(c, i).metrics;
    } else {
        std::atomic<std::uint32_t> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(jobs);
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::uint32_t i = next++; i < c.runs; i = next++) runs[i] = run_scenario(c, i).metrics;
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return aggregate(runs, c);
}

}  // namespace srps::sim
