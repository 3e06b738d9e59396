#include "srps/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "srps/commands.hpp"
#include "srps/crypto.hpp"
#include "srps/scenario.hpp"
#include "srps/security.hpp"

namespace srps::app {

namespace fs = std::filesystem;

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass: return "PASS";
        case Status::Fail: return "FAIL";
        case Status::Skip: return "SKIP";
    }
    return "?";
}

std::string format_line(const CheckResult& r) {
    return "[" + to_string(r.status) + "] " + std::to_string(r.id) + " " + r.name + ": " + r.detail;
}

namespace {

std::string num(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

CheckResult result(int id, std::string name, bool ok, std::string detail) {
    return {id, std::move(name), ok ? Status::Pass : Status::Fail, std::move(detail)};
}

CheckResult skipped(int id, std::string name, std::string why) { return {id, std::move(name), Status::Skip, why}; }

}  // namespace

// ---------------------------------------------------------------- 1 costs

CheckResult check_costs(const MemoryModel& memory) {
    std::ostringstream d;
    bool ok = true;
    const std::uint64_t mem = memory({20, 10, 20, 10});
    ok &= mem == 1420;
    d << "memory(20,10,20,10)=" << mem;
    auto p = analysis::packet_sizes();
    ok &= p.rdp == 47 && p.key_disclosure == 12 && p.rrp == 18;
    d << " packets=" << p.rdp << "/" << p.key_disclosure << "/" << p.rrp;

    // Honest discovery on a five-node line, every operation metered.
    Bench b({{0, 0}, {25, 0}, {50, 0}, {75, 0}, {100, 0}}, {}, {}, true, 7);
    b.discover(0, 4, 1, 5);
    auto model = analysis::compute_cost();
    auto expect = [&](proto::NodeId n, proto::Role role, analysis::RoleCost want, const char* tag) {
        auto [mac, hash] = b.node(n).costs().model_counts(role);
        bool match = mac == want.mac_ops && hash == want.hash_ops;
        ok &= match;
        d << " " << tag << n << "=(" << mac << "," << hash << ")";
    };
    ok &= b.node(0).route_to(4, b.now()).has_value();
    expect(0, proto::Role::Source, model.source, "S");
    for (proto::NodeId i = 1; i <= 3; ++i) expect(i, proto::Role::Intermediate, model.intermediate, "I");
    expect(4, proto::Role::Destination, model.destination, "D");
    return result(1, "cost exactness", ok, d.str());
}

// ---------------------------------------------------------------- 2 binomial / Beta

CheckResult check_beta_identity() {
    double worst = 0;
    std::uint32_t cases = 0;
    for (std::uint32_t g = 1; g <= 30; ++g)
        for (std::uint32_t gm = 0; gm <= g; ++gm)
            for (int k = 1; k <= 99; ++k) {
                auto r = analysis::p_detect(gm, g, k / 100.0);
                worst = std::max(worst, std::abs(r.binomial_sum - r.incomplete_beta));
                ++cases;
            }
    return result(2, "binomial/Beta identity", worst <= 1e-9,
                  "max |diff| = " + num(worst, 3) + " over " + std::to_string(cases) + " cases");
}

// ---------------------------------------------------------------- 3 geometry

CheckResult check_geometry(Level level) {
    const double r = 30;
    const double pi = std::acos(-1.0);
    std::ostringstream d;
    bool ok = true;
    const double a0 = analysis::area(0, r);
    const double a2 = analysis::area(2 * r, r);
    const double ar = analysis::area(r, r) / (r * r);
    ok &= std::abs(a0 - pi * r * r) <= 1e-12 * pi * r * r;
    ok &= std::abs(a2) <= 1e-12 * pi * r * r;
    ok &= std::abs(ar - 0.36) <= 0.005;
    auto e = analysis::expected_area(r);
    const double q = e.quadrature / (r * r);
    d << "area(r,r)/r^2=" << num(ar) << " E[Area]/r^2=" << num(q) << " sqrt3 gap=" << num(100 * e.relative_gap, 3)
      << "%";
    if (level == Level::Fast) {
        d << "; Monte Carlo comparison skipped at fast level";
        return result(3, "geometry", ok, d.str());
    }
    // Lens coverage: x ~ U(0, r), uniform point in A's disc, hit if within r of B.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    const std::uint32_t n = 1000000;
    double hits = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        double x = r * u(rng);
        double rho = r * std::sqrt(u(rng));
        double th = 2 * pi * u(rng);
        double px = rho * std::cos(th) - x;
        double py = rho * std::sin(th);
        if (px * px + py * py <= r * r) ++hits;
    }
    const double mc = pi * hits / n;  // already divided by r^2
    const double rel = std::abs(q - mc) / mc;
    ok &= rel <= 0.02;
    d << " MC lens=" << num(mc) << " rel diff=" << num(100 * rel, 3) << "% (lens quadrature "
      << num(analysis::expected_lens_area(r) / (r * r)) << ")";
    return result(3, "geometry", ok, d.str());
}

// ---------------------------------------------------------------- 4 guard density

CheckResult check_guard_density() {
    std::ostringstream d;
    bool ok = true;
    const double factor = std::sqrt(3.0) / std::acos(-1.0);
    for (double nb : {8.0, 15.0, 20.0}) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(nb) * 1000 + 4);
        sim::TopologyRequest req;
        req.n = 100;
        req.target_nb = nb;
        double sum = 0;
        for (int i = 0; i < 30; ++i) sum += sim::generate_topology(req, rng).topology.mean_guards_per_link();
        const double ratio = (sum / 30) / (factor * nb);
        ok &= std::abs(ratio - 1) <= 0.10;
        d << (nb == 8 ? "" : " ") << "NB" << nb << " ratio=" << num(ratio, 4);
    }
    return result(4, "guard density", ok, d.str());
}

// ---------------------------------------------------------------- 5 false alarm

CheckResult check_false_alarm() {
    const double worst = analysis::worst_false_alarm({});
    return result(5, "false alarm", worst < 1e-6, "max p_fa_gamma = " + num(worst, 4));
}

// ---------------------------------------------------------------- 6 detection

CheckResult check_detection(Level level) {
    if (level == Level::Fast) return skipped(6, "detection monotonicity", "simulation, full level only");
    sim::ScenarioConfig c;
    c.n = 100;
    c.nb = 15;
    c.m = 2;
    c.runs = 10;
    c.horizon = 60;
    // Guards judge route control only; each compromised node forges seven times per window, always naming one
    // neighbour per window, which is the event model the analytic curve assumes.
    c.proto.monitor_data = false;
    c.adversary.behaviors = {adversary::Behavior::Wormhole};
    c.adversary.events_per_window = 7;
    c.adversary.lie_target = adversary::LieTarget::FixedPerWindow;
    const double pc = analysis::pc_linear(15);
    std::vector<double> analytic, simulated;
    std::ostringstream d;
    bool ok = true;
    for (std::uint32_t g = 2; g <= 8; ++g) {
        c.gamma = g;
        double det = 0, cnt = 0;
        for (std::uint32_t i = 0; i < c.runs; ++i) {
            auto m = sim::run_scenario(c, i).metrics;
            for (const auto& [id, hit] : m.detected) {
                det += hit ? 1 : 0;
                cnt += 1;
            }
        }
        analytic.push_back(analysis::coverage_at(15, pc, 7, 5, g).p_detect);
        simulated.push_back(cnt > 0 ? det / cnt : 0);
        const bool close = std::abs(analytic.back() - simulated.back()) <= 0.15;
        ok &= close;
        d << (g == 2 ? "" : " ") << "g" << g << "=" << num(analytic.back(), 3) << "/" << num(simulated.back(), 3)
          << (close ? "" : "!");
    }
    for (std::size_t i = 1; i < analytic.size(); ++i) {
        ok &= analytic[i] <= analytic[i - 1] + 1e-12;
        ok &= simulated[i] <= simulated[i - 1] + 1e-12;
    }
    return result(6, "detection monotonicity", ok, "analytic/simulated " + d.str());
}

// ---------------------------------------------------------------- 7 isolation latency

CheckResult check_isolation_latency(Level level) {
    if (level == Level::Fast) return skipped(7, "isolation latency", "simulation, full level only");
    sim::ScenarioConfig c;
    c.nb = 15;
    c.m = 2;
    c.runs = 10;
    c.horizon = 60;
    std::ostringstream d;
    bool ok = true;
    for (std::uint32_t g = 2; g <= 8; ++g) {
        c.gamma = g;
        std::vector<double> lat;
        for (std::uint32_t i = 0; i < c.runs; ++i) {
            auto m = sim::run_scenario(c, i).metrics;
            for (auto id : m.malicious) {
                auto it = m.isolation_latency.find(id);
                lat.push_back(it == m.isolation_latency.end() ? std::numeric_limits<double>::infinity() : it->second);
            }
        }
        std::sort(lat.begin(), lat.end());
        const double med = (lat[(lat.size() - 1) / 2] + lat[lat.size() / 2]) / 2;
        ok &= med < 30;
        d << (g == 2 ? "" : " ") << "g" << g << "=" << num(med, 3) << "s";
    }
    return result(7, "isolation latency", ok, "median " + d.str());
}

// ---------------------------------------------------------------- 8 wormhole impact

CheckResult check_wormhole_shape(Level level) {
    if (level == Level::Fast) return skipped(8, "wormhole impact shape", "simulation, full level only");
    std::ostringstream d;
    bool ok = true;
    for (std::uint32_t m : {0u, 1u, 2u, 4u}) {
        for (bool on : {false, true}) {
            sim::ScenarioConfig c;
            c.m = m;
            c.srps = on;
            c.horizon = 2000;
            c.runs = on ? 2 : 10;
            std::map<std::string, double> sum;
            for (std::uint32_t i = 0; i < c.runs; ++i) {
                auto r = sim::run_scenario(c, i).metrics;
                for (const auto& [name, v] : sim::scalar_metrics(r, c)) sum[name] += v;
            }
            d << (d.tellp() ? " " : "") << "M" << m << (on ? "on" : "off") << ":";
            if (m < 2) {
                ok &= sum["wormhole_drops"] == 0 && sum["routes_malicious"] == 0;
                d << "drops=" << sum["wormhole_drops"] << ",routes=" << sum["routes_malicious"];
            } else if (!on) {
                const double half = sum["wormhole_drops_half"];
                const double ratio = half > 0 ? sum["wormhole_drops"] / half : 0;
                ok &= ratio >= 2.0;
                d << "end/half=" << num(ratio, 4);
            } else {
                // Drops must stop once the ends are isolated and stale routes expire.
                const double isolated = sum["isolated_fraction"] / c.runs;
                ok &= sum["wormhole_drops_after_settle"] == 0;
                d << "isolated=" << num(isolated, 3) << ",after_settle=" << sum["wormhole_drops_after_settle"];
            }
        }
    }
    return result(8, "wormhole impact shape", ok, d.str());
}

// ---------------------------------------------------------------- 9 security

CheckResult check_security(Level level) {
    (void)level;  // every item stays within 10^4 trials
    std::ostringstream d;
    bool ok = true;
    auto rp = replay_check(9);
    bool item = rp.tables_changed == 0 && rp.oldest_round >= 10 && rp.replays > 0;
    ok &= item;
    d << "replay " << rp.replays << " frames, " << rp.tables_changed << " tables changed";
    auto in = inclusion_check(9);
    item = in.schedules > 0 && in.altered == 0 && in.adversary_on_route == 0;
    ok &= item;
    d << "; inclusion " << in.schedules << " schedules, " << in.altered << " altered";
    auto tr = wormhole_truth_check(9);
    item = tr.request_receivers > 0 && tr.request_rejected == tr.request_receivers && tr.reply_rejected &&
           !tr.source_route_via_wormhole;
    ok &= item;
    d << "; truth " << tr.request_rejected << "/" << tr.request_receivers << " not-neighbor, reply "
      << (tr.reply_rejected ? "rejected" : "accepted");
    auto li = wormhole_lie_check(9, 20);
    item = li.guard_slots > 0 && li.guard_accusations == li.guard_slots;
    ok &= item;
    d << "; lie " << li.guard_accusations << "/" << li.guard_slots << " guards accused";
    auto sp = spoof_check(9);
    auto sy = sybil_check(9);
    item = sp.accepted == 0 && sp.rejected == sp.receivers && sy.accepted == 0 && sy.rejected == sy.receivers;
    ok &= item;
    d << "; spoof " << sp.rejected << "/" << sp.receivers << " sybil " << sy.rejected << "/" << sy.receivers
      << " rejected";
    const std::uint32_t n = 1000;
    auto rs = rushing_check(true, n, 9);
    const double sigma = std::sqrt(0.25 * 0.75 / n);
    item = std::abs(rs.rate() - 0.25) <= 3 * sigma;
    ok &= item;
    auto rb = rushing_check(false, n, 9);
    item = rb.rate() >= 0.99;
    ok &= item;
    d << "; rushing " << num(rs.rate(), 3) << " (band " << num(0.25 - 3 * sigma, 3) << ".." << num(0.25 + 3 * sigma, 3)
      << "), first-heard " << num(rb.rate(), 3);
    return result(9, "security properties", ok, d.str());
}

// ---------------------------------------------------------------- 10 crypto

CheckResult check_crypto(Level level) {
    std::ostringstream d;
    bool ok = true;
    std::mt19937_64 rng(10);
    auto rand_hash = [&] {
        crypto::HashValue h;
        for (auto& b : h) b = static_cast<std::uint8_t>(rng());
        return h;
    };

    // Chain round trip: every disclosed key hashes onto the previous anchor.
    std::uint32_t chain_bad = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto chain = crypto::derive_commitment(rand_hash(), 64);
        crypto::HashValue anchor = chain.current_commitment;
        while (auto k = crypto::next_auth_key(chain)) {
            if (crypto::hash_f(*k) != anchor || !crypto::verify_and_advance(anchor, *k, 1).accepted) ++chain_bad;
            anchor = *k;
        }
        if (crypto::next_auth_key(chain)) ++chain_bad;
    }
    ok &= chain_bad == 0;
    d << "chain errors " << chain_bad;

    // Bounded gap: accepted iff 1 <= gap <= max_gap.
    std::uint32_t gap_bad = 0;
    auto chain = crypto::derive_commitment(rand_hash(), 32, true);
    for (std::uint32_t max_gap = 1; max_gap <= 6; ++max_gap)
        for (std::uint32_t gap = 0; gap <= 10; ++gap) {
            auto res = crypto::verify_and_advance(chain.current_commitment, crypto::chain_value(chain, 32 - gap),
                                                  max_gap);
            bool want = gap >= 1 && gap <= max_gap;
            if (res.accepted != want || (want && res.gap != gap)) ++gap_bad;
        }
    ok &= gap_bad == 0;
    d << ", gap errors " << gap_bad;

    // SNV indices: (n - 2(i-1), n - 2(i-1) - 1), exhausted past n/2.
    std::uint32_t idx_bad = 0;
    for (std::int64_t n : {2, 8, 64, 256, 257})
        for (std::int64_t i = 1; i <= n; ++i) {
            auto s = crypto::snv_indices(i, n);
            bool exhausted = i > n / 2;
            if (s.exhausted != exhausted) ++idx_bad;
            if (!exhausted && (s.req_idx != n - 2 * (i - 1) || s.rep_idx != n - 2 * (i - 1) - 1)) ++idx_bad;
        }
    ok &= idx_bad == 0;
    d << ", index errors " << idx_bad;

    // Renewal: a pair that runs its sequence chain dry adopts u_n and keeps discovering.
    {
        proto::ProtocolParams p = bench_params();
        p.snv_length = 8;
        Bench b({{0, 0}, {25, 0}, {50, 0}}, {}, {}, true, 10, 30, p);
        std::uint32_t routed = 0;
        for (int k = 0; k < 10; ++k) {
            const double start = 1 + 4.0 * k;
            b.discover(0, 2, start, 4.0 * (k + 1));
            auto r = b.node(0).route_to(2, b.now());
            if (r && r->installed >= start) ++routed;
        }
        std::uint32_t adopted = 0;
        for (const auto& r : b.sim().reports())
            if (r.kind == proto::ReportKind::RenewalAdopted) ++adopted;
        bool item = adopted > 0 && routed == 10;
        ok &= item;
        d << ", renewals " << adopted << " with " << routed << "/10 discoveries routed";
    }

    // Encryption round trip.
    std::uint32_t enc_bad = 0;
    for (int i = 0; i < 10000; ++i) {
        auto key = rand_hash();
        crypto::Bytes pt(1 + rng() % 64);
        for (auto& b : pt) b = static_cast<std::uint8_t>(rng());
        if (crypto::decrypt(key, crypto::encrypt(key, pt)) != pt) ++enc_bad;
    }
    ok &= enc_bad == 0;
    d << ", encrypt errors " << enc_bad;

    // MAC tamper detection.
    const std::uint32_t trials = level == Level::Full ? 1000000 : 10000;
    std::uint32_t false_accepts = 0;
    for (std::uint32_t i = 0; i < trials; ++i) {
        auto key = rand_hash();
        crypto::Bytes msg(8 + rng() % 40);
        for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
        auto tag = crypto::mac(key, msg);
        switch (rng() % 3) {
            case 0: msg[rng() % msg.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
            case 1: tag[rng() % tag.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
            default: key[rng() % key.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
        }
        if (crypto::mac_verify(key, msg, tag)) ++false_accepts;
    }
    ok &= false_accepts == 0;
    d << ", MAC false accepts " << false_accepts << "/" << trials;
    return result(10, "crypto suite", ok, d.str());
}

// ---------------------------------------------------------------- 11 determinism

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

CheckResult check_determinism(const fs::path& scratch) {
    const fs::path root = scratch.empty() ? fs::temp_directory_path() / "srps_determinism" : scratch;
    fs::remove_all(root);
    sim::ScenarioConfig c;
    c.n = 40;
    c.nb = 8;
    c.m = 2;
    c.runs = 2;
    c.horizon = 60;
    c.trace = true;
    c.seed = 11;
    simulate(c, root / "a");
    simulate(c, root / "b");
    std::uint32_t files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        ++files;
        auto other = root / "b" / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
    }
    for (const char* fig : {"fig9a", "fig9b", "fig12", "costs"}) {
        ++files;
        if (analyze_csv(fig, {}) != analyze_csv(fig, {})) ++differ;
    }
    fs::remove_all(root);
    return result(11, "determinism", files > 4 && differ == 0,
                  std::to_string(files) + " outputs compared, " + std::to_string(differ) + " differ");
}

// ---------------------------------------------------------------- driver

std::vector<CheckResult> run_validation(Level level, const std::function<void(const CheckResult&)>& on_result,
                                        const fs::path& scratch) {
    std::vector<std::function<CheckResult()>> checks = {
        [] { return check_costs(); },
        [] { return check_beta_identity(); },
        [level] { return check_geometry(level); },
        [] { return check_guard_density(); },
        [] { return check_false_alarm(); },
        [level] { return check_detection(level); },
        [level] { return check_isolation_latency(level); },
        [level] { return check_wormhole_shape(level); },
        [level] { return check_security(level); },
        [level] { return check_crypto(level); },
        [&scratch] { return check_determinism(scratch); },
    };
    std::vector<CheckResult> out;
    for (auto& run : checks) {
        CheckResult r;
        try {
            r = run();
        } catch (const std::exception& e) {
            r = {static_cast<int>(out.size()) + 1, "check", Status::Fail, std::string("error: ") + e.what()};
        }
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.status != Status::Fail; });
}

}  // namespace srps::app
