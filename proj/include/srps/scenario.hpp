#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "srps/adversary.hpp"
#include "srps/simulator.hpp"

namespace srps::sim {

// One simulation point. Field names follow the config keys.
struct ScenarioConfig {
    std::uint32_t n = 100;
    double nb = 8;
    double r = 30;
    std::uint32_t gamma = 3;
    std::uint32_t beta = 5;
    double mu = 0.1;
    double xi = 1.0 / 200;
    double t = 200;  // accusation window, seconds
    double tau = 0.5;
    double route_timeout_s = 50;
    double bw_kbps = 40;
    std::uint32_t m = 2;
    std::uint32_t runs = 30;
    std::uint64_t seed = 1;
    bool srps = true;
    double horizon = 2000;
    bool trace = false;
    TrafficMode traffic = TrafficMode::Data;
    int min_malicious_hops = 3;
    std::uint32_t topology_attempts = 2000;
    MediumModel medium;
    proto::ProtocolParams proto;  // base values; the named fields above override theirs
    adversary::AdversaryProfile adversary = default_adversary();

    static adversary::AdversaryProfile default_adversary();
    proto::ProtocolParams protocol_params() const;
    SimParams sim_params() const;
};

std::uint64_t run_seed(const ScenarioConfig& c, std::uint32_t run_index);

struct RunOutput {
    RunMetrics metrics;
    std::vector<std::string> trace;
};

// Topology placement plus one full simulation; deterministic in (config, run index).
RunOutput run_scenario(const ScenarioConfig& c, std::uint32_t run_index);

struct Stat {
    double mean = 0;
    double stddev = 0;
};

struct Aggregate {
    std::vector<RunMetrics> runs;
    std::vector<std::string> names;  // summary columns, stable order
    std::map<std::string, Stat> stats;
};

// Scalar per-run metrics in summary column order.
std::vector<std::pair<std::string, double>> scalar_metrics(const RunMetrics& m, const ScenarioConfig& c);
Stat summarize(const std::vector<double>& xs);
Aggregate aggregate(const std::vector<RunMetrics>& runs, const ScenarioConfig& c);
// Runs every seed, sequentially or on `jobs` worker threads; results come back in run order.
Aggregate aggregate_runs(const ScenarioConfig& c, unsigned jobs = 1);

}  // namespace srps::sim
