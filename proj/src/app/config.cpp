#include "srps/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace srps::app {

using sim::ScenarioConfig;

ConfigParseError::ConfigParseError(std::string source, std::size_t line, std::size_t column, const std::string& msg)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw UsageError("bad value '" + std::string(value) + "' for key '" + std::string(key) + "': expected " +
                     std::string(expected));
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

double to_real(std::string_view key, std::string_view v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    bad_value(key, v, "true/false/on/off");
}

std::string real_text(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Entry {
    KeyInfo info;
    std::function<void(ScenarioConfig&, std::string_view, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class T>
Entry uint_key(std::string name, std::string doc, T ScenarioConfig::*field) {
    return {{name, ValueKind::Integer, std::move(doc)},
            [field](ScenarioConfig& c, std::string_view k, std::string_view v) {
                std::uint64_t x = to_uint(k, v);
                if (x > std::numeric_limits<T>::max()) bad_value(k, v, "a smaller integer");
                c.*field = static_cast<T>(x);
            },
            [field](const ScenarioConfig& c) { return std::to_string(c.*field); }};
}

Entry real_key(std::string name, std::string doc, double ScenarioConfig::*field) {
    return {{name, ValueKind::Real, std::move(doc)},
            [field](ScenarioConfig& c, std::string_view k, std::string_view v) { c.*field = to_real(k, v); },
            [field](const ScenarioConfig& c) { return real_text(c.*field); }};
}

template <class T>
Entry proto_uint(std::string name, std::string doc, T proto::ProtocolParams::*field) {
    return {{name, ValueKind::Integer, std::move(doc)},
            [field](ScenarioConfig& c, std::string_view k, std::string_view v) {
                std::uint64_t x = to_uint(k, v);
                if (x > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) bad_value(k, v, "a smaller integer");
                c.proto.*field = static_cast<T>(x);
            },
            [field](const ScenarioConfig& c) { return std::to_string(c.proto.*field); }};
}

Entry proto_real(std::string name, std::string doc, double proto::ProtocolParams::*field) {
    return {{name, ValueKind::Real, std::move(doc)},
            [field](ScenarioConfig& c, std::string_view k, std::string_view v) { c.proto.*field = to_real(k, v); },
            [field](const ScenarioConfig& c) { return real_text(c.proto.*field); }};
}

Entry proto_bool(std::string name, std::string doc, bool proto::ProtocolParams::*field) {
    return {{name, ValueKind::Boolean, std::move(doc)},
            [field](ScenarioConfig& c, std::string_view k, std::string_view v) { c.proto.*field = to_bool(k, v); },
            [field](const ScenarioConfig& c) { return bool_text(c.proto.*field); }};
}

Entry medium_real(std::string name, std::string doc, double sim::MediumModel::*field) {
    return {{name, ValueKind::Real, std::move(doc)},
            [field](ScenarioConfig& c, std::string_view k, std::string_view v) { c.medium.*field = to_real(k, v); },
            [field](const ScenarioConfig& c) { return real_text(c.medium.*field); }};
}

template <class E>
Entry choice_key(std::string name, std::string doc, std::vector<std::pair<std::string, E>> options,
                 std::function<E&(ScenarioConfig&)> ref) {
    std::string list;
    for (const auto& [s, e] : options) list += (list.empty() ? "" : "|") + s;
    return {{name, ValueKind::Choice, doc + " (" + list + ")"},
            [options, ref, list](ScenarioConfig& c, std::string_view k, std::string_view v) {
                for (const auto& [s, e] : options)
                    if (s == v) {
                        ref(c) = e;
                        return;
                    }
                bad_value(k, v, "one of " + list);
            },
            [options, ref](const ScenarioConfig& c) {
                const E& cur = ref(const_cast<ScenarioConfig&>(c));
                for (const auto& [s, e] : options)
                    if (e == cur) return s;
                return std::string("?");
            }};
}

std::vector<Entry> build_entries() {
    using adversary::Behavior;
    std::vector<Entry> t;
    t.push_back(uint_key("n", "number of nodes", &ScenarioConfig::n));
    t.push_back(real_key("nb", "target mean neighbour count; sets the field size and the collision law input",
                         &ScenarioConfig::nb));
    t.push_back(real_key("r", "radio range, metres", &ScenarioConfig::r));
    t.push_back(uint_key("m", "compromised nodes", &ScenarioConfig::m));
    t.push_back(uint_key("gamma", "distinct alerting guards needed to isolate", &ScenarioConfig::gamma));
    t.push_back(uint_key("beta", "malicious events within t that trigger an alert", &ScenarioConfig::beta));
    t.push_back(real_key("t", "accusation window, seconds", &ScenarioConfig::t));
    t.push_back(real_key("tau", "reply acceptance window, seconds", &ScenarioConfig::tau));
    t.push_back(real_key("mu", "data packets per second per source", &ScenarioConfig::mu));
    t.push_back(real_key("xi", "destination changes per second per source", &ScenarioConfig::xi));
    t.push_back(real_key("route_timeout", "route lifetime, seconds", &ScenarioConfig::route_timeout_s));
    t.push_back(real_key("bw_kbps", "link bandwidth, kbit/s", &ScenarioConfig::bw_kbps));
    t.push_back(real_key("horizon", "simulated seconds per run", &ScenarioConfig::horizon));
    t.push_back(uint_key("runs", "independent runs", &ScenarioConfig::runs));
    t.push_back(uint_key("seed", "master seed; run i uses a stream derived from it", &ScenarioConfig::seed));
    t.push_back({{"srps", ValueKind::Boolean, "secure protocol on; off gives first-heard flooding"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.srps = to_bool(k, v); },
                 [](const ScenarioConfig& c) { return bool_text(c.srps); }});
    t.push_back({{"trace", ValueKind::Boolean, "write per-run event traces"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.trace = to_bool(k, v); },
                 [](const ScenarioConfig& c) { return bool_text(c.trace); }});
    t.push_back(choice_key<sim::TrafficMode>(
        "traffic", "workload",
        {{"data", sim::TrafficMode::Data}, {"discovery", sim::TrafficMode::Discovery}, {"none", sim::TrafficMode::None}},
        [](ScenarioConfig& c) -> sim::TrafficMode& { return c.traffic; }));
    t.push_back({{"min_malicious_hops", ValueKind::Integer, "minimum pairwise hop distance between compromised nodes"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) {
                     c.min_malicious_hops = static_cast<int>(to_uint(k, v));
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.min_malicious_hops); }});
    t.push_back(uint_key("topology_attempts", "placement retries before giving up", &ScenarioConfig::topology_attempts));

    t.push_back(choice_key<sim::PcMode>("medium.pc_mode", "collision law",
                                        {{"linear", sim::PcMode::LinearInNb}, {"fixed", sim::PcMode::Fixed}},
                                        [](ScenarioConfig& c) -> sim::PcMode& { return c.medium.mode; }));
    t.push_back(medium_real("medium.pc", "collision probability in fixed mode", &sim::MediumModel::fixed_pc));
    t.push_back(medium_real("medium.base_pc", "linear law: probability at medium.base_nb", &sim::MediumModel::base_pc));
    t.push_back(medium_real("medium.base_nb", "linear law: anchor neighbour count", &sim::MediumModel::base_nb));
    t.push_back(medium_real("medium.cap", "linear law: upper bound", &sim::MediumModel::cap));

    t.push_back(proto_uint("proto.chain_length", "neighbourhood key chain length", &proto::ProtocolParams::chain_length));
    t.push_back(proto_uint("proto.snv_length", "per-pair sequence chain length", &proto::ProtocolParams::snv_length));
    t.push_back(proto_uint("proto.nbr_max_gap", "largest key-chain gap a neighbour accepts",
                           &proto::ProtocolParams::nbr_max_gap));
    t.push_back(proto_uint("proto.snv_max_gap", "largest sequence-chain gap an intermediate accepts",
                           &proto::ProtocolParams::snv_max_gap));
    t.push_back(proto_real("proto.t_r_min", "request collect wait, lower bound", &proto::ProtocolParams::t_r_min));
    t.push_back(proto_real("proto.t_r_max", "request collect wait, upper bound", &proto::ProtocolParams::t_r_max));
    t.push_back(proto_uint("proto.n_r", "buffered requests that end the collect wait early", &proto::ProtocolParams::n_r));
    t.push_back(proto_real("proto.baseline_jitter", "first-heard flooding broadcast jitter",
                           &proto::ProtocolParams::baseline_jitter));
    t.push_back(proto_real("proto.disclose_delay", "delay before a used key is disclosed",
                           &proto::ProtocolParams::disclose_delay));
    t.push_back(proto_real("proto.hold_timeout", "how long an unauthenticated frame is held",
                           &proto::ProtocolParams::hold_timeout));
    t.push_back(proto_real("proto.forward_threshold", "guard forwarding deadline",
                           &proto::ProtocolParams::forward_threshold));
    t.push_back(proto_real("proto.proc_delay", "per-hop processing time", &proto::ProtocolParams::proc_delay));
    t.push_back(proto_real("proto.discovery_timeout", "wait for any reply before retrying",
                           &proto::ProtocolParams::discovery_timeout));
    t.push_back(proto_uint("proto.discovery_retries", "discovery attempts per destination",
                           &proto::ProtocolParams::discovery_retries));
    t.push_back(proto_uint("proto.max_replies", "replies a destination sends per request",
                           &proto::ProtocolParams::max_replies));
    t.push_back(proto_uint("proto.watch_capacity", "watch buffer entries per guard",
                           &proto::ProtocolParams::watch_capacity));
    t.push_back(proto_uint("proto.data_queue", "data packets queued per destination during discovery",
                           &proto::ProtocolParams::data_queue));
    t.push_back(proto_uint("proto.data_size", "data payload bytes", &proto::ProtocolParams::data_size));
    t.push_back(proto_bool("proto.monitor_data", "guards also watch data forwarding",
                           &proto::ProtocolParams::monitor_data));
    t.push_back(proto_bool("proto.collision_aware", "collided frames still reveal their header",
                           &proto::ProtocolParams::collision_aware));
    t.push_back(proto_bool("proto.version2", "intermediates hold a request until the source proves the sequence value",
                           &proto::ProtocolParams::version2));
    t.push_back(proto_bool("proto.ondemand_challenge", "challenge the source when a sequence value fails",
                           &proto::ProtocolParams::ondemand_challenge));
    t.push_back(proto_real("proto.challenge_timeout", "wait for a challenge answer",
                           &proto::ProtocolParams::challenge_timeout));
    t.push_back({{"proto.maintenance_policy", ValueKind::Integer,
                  "broken route handling: 1 alternate route, 2 rediscover, 3 local repair"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) {
                     auto x = to_uint(k, v);
                     if (x < 1 || x > 3) bad_value(k, v, "1, 2 or 3");
                     c.proto.maintenance_policy = static_cast<int>(x);
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.proto.maintenance_policy); }});

    t.push_back({{"adversary.behaviors", ValueKind::List,
                  "comma list of wormhole, rush, replay, spoof, sybil, include, drop_data, selective; empty for none"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) {
                     std::set<Behavior> out;
                     std::string_view rest = v;
                     while (!rest.empty()) {
                         auto comma = rest.find(',');
                         std::string_view item = trim(rest.substr(0, comma));
                         rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
                         if (item.empty()) continue;
                         auto b = adversary::behavior_from_string(std::string(item));
                         if (!b) bad_value(k, item, "a behaviour name");
                         out.insert(*b);
                     }
                     c.adversary.behaviors = out;
                 },
                 [](const ScenarioConfig& c) {
                     std::string s;
                     for (auto b : c.adversary.behaviors) s += (s.empty() ? "" : ",") + adversary::to_string(b);
                     return s;
                 }});
    t.push_back(choice_key<adversary::TunnelMode>(
        "adversary.tunnel_mode", "wormhole channel",
        {{"out_of_band", adversary::TunnelMode::OutOfBand}, {"encapsulation", adversary::TunnelMode::Encapsulation}},
        [](ScenarioConfig& c) -> adversary::TunnelMode& { return c.adversary.tunnel_mode; }));
    t.push_back({{"adversary.hop_latency", ValueKind::Real, "encapsulated tunnel delay per hop, seconds"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.adversary.hop_latency = to_real(k, v); },
                 [](const ScenarioConfig& c) { return real_text(c.adversary.hop_latency); }});
    t.push_back(choice_key<adversary::Claim>(
        "adversary.claim", "previous hop a wormhole endpoint names",
        {{"lie", adversary::Claim::Lie}, {"truth", adversary::Claim::Truth}},
        [](ScenarioConfig& c) -> adversary::Claim& { return c.adversary.claim; }));
    t.push_back(choice_key<adversary::LieTarget>(
        "adversary.lie_target", "which neighbour a lie names",
        {{"random", adversary::LieTarget::Random}, {"fixed", adversary::LieTarget::FixedPerWindow}},
        [](ScenarioConfig& c) -> adversary::LieTarget& { return c.adversary.lie_target; }));
    t.push_back({{"adversary.events_per_window", ValueKind::Integer,
                  "forged transmissions allowed per window; 0 means unlimited"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) {
                     c.adversary.events_per_window = static_cast<std::uint32_t>(to_uint(k, v));
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.adversary.events_per_window); }});
    t.push_back({{"adversary.window", ValueKind::Real, "budget window, seconds"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.adversary.window = to_real(k, v); },
                 [](const ScenarioConfig& c) { return real_text(c.adversary.window); }});
    t.push_back({{"adversary.start", ValueKind::Real, "attack start, seconds"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) { c.adversary.start_s = to_real(k, v); },
                 [](const ScenarioConfig& c) { return real_text(c.adversary.start_s); }});
    t.push_back({{"adversary.selective_fraction", ValueKind::Real, "share of data dropped by selective forwarding"},
                 [](ScenarioConfig& c, std::string_view k, std::string_view v) {
                     double x = to_real(k, v);
                     if (x < 0 || x > 1) bad_value(k, v, "a fraction in [0, 1]");
                     c.adversary.selective_fraction = x;
                 },
                 [](const ScenarioConfig& c) { return real_text(c.adversary.selective_fraction); }});
    return t;
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> t = build_entries();
    return t;
}

const Entry* find_entry(std::string_view name) {
    for (const auto& e : entries())
        if (e.info.name == name) return &e;
    return nullptr;
}

}  // namespace

const std::vector<KeyInfo>& config_keys() {
    static const std::vector<KeyInfo> keys = [] {
        std::vector<KeyInfo> k;
        for (const auto& e : entries()) k.push_back(e.info);
        return k;
    }();
    return keys;
}

const KeyInfo* find_key(std::string_view name) {
    const Entry* e = find_entry(name);
    return e ? &e->info : nullptr;
}

bool is_numeric(const KeyInfo& k) { return k.kind == ValueKind::Integer || k.kind == ValueKind::Real; }

void apply_setting(ScenarioConfig& c, std::string_view key, std::string_view value) {
    const Entry* e = find_entry(key);
    if (!e) throw UsageError("unknown key '" + std::string(key) + "'");
    e->set(c, key, trim(value));
}

std::string get_setting(const ScenarioConfig& c, std::string_view key) {
    const Entry* e = find_entry(key);
    if (!e) throw UsageError("unknown key '" + std::string(key) + "'");
    return e->get(c);
}

ScenarioConfig parse_config(std::string_view text, ScenarioConfig base, const std::string& source) {
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (true) {
        ++line_no;
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        const char* line_start = line.data();
        auto col_of = [&](std::string_view part) { return static_cast<std::size_t>(part.data() - line_start) + 1; };

        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::string_view body = trim(line);
        if (!body.empty()) {
            auto eq = body.find('=');
            if (eq == std::string_view::npos)
                throw ConfigParseError(source, line_no, col_of(body) + body.size(), "expected '=' after key");
            std::string_view key = trim(body.substr(0, eq));
            std::string_view value = trim(body.substr(eq + 1));
            if (key.empty()) throw ConfigParseError(source, line_no, col_of(body), "missing key before '='");
            const Entry* e = find_entry(key);
            if (!e) throw ConfigParseError(source, line_no, col_of(key), "unknown key '" + std::string(key) + "'");
            if (!seen.insert(std::string(key)).second)
                throw ConfigParseError(source, line_no, col_of(key), "key '" + std::string(key) + "' set twice");
            std::size_t value_col = value.empty() ? col_of(body) + eq + 1 : col_of(value);
            try {
                e->set(base, key, value);
            } catch (const UsageError& err) {
                throw ConfigParseError(source, line_no, value_col, err.what());
            }
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return base;
}

ScenarioConfig load_config(const std::string& path, ScenarioConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base), path);
}

std::pair<std::string, std::string> split_assignment(std::string_view kv) {
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw UsageError("expected key=value, got '" + std::string(kv) + "'");
    return {std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1)))};
}

std::vector<std::string> expand_values(std::string_view spec) {
    spec = trim(spec);
    if (spec.empty()) throw UsageError("empty value list");
    std::vector<std::string> out;
    if (auto dots = spec.find(".."); dots != std::string_view::npos) {
        std::string_view a = trim(spec.substr(0, dots));
        std::string_view b = trim(spec.substr(dots + 2));
        long lo = 0, hi = 0;
        auto r1 = std::from_chars(a.data(), a.data() + a.size(), lo);
        auto r2 = std::from_chars(b.data(), b.data() + b.size(), hi);
        if (a.empty() || b.empty() || r1.ec != std::errc() || r2.ec != std::errc() || r1.ptr != a.data() + a.size() ||
            r2.ptr != b.data() + b.size() || hi < lo)
            throw UsageError("bad range '" + std::string(spec) + "'");
        for (long v = lo; v <= hi; ++v) out.push_back(std::to_string(v));
        return out;
    }
    std::string_view rest = spec;
    while (true) {
        auto comma = rest.find(',');
        std::string_view item = trim(rest.substr(0, comma));
        if (item.empty()) throw UsageError("empty item in value list '" + std::string(spec) + "'");
        out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

}  // namespace srps::app
