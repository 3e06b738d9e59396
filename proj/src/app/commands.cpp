#include "srps/commands.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "srps/config.hpp"

namespace srps::app {

namespace fs = std::filesystem;

std::string csv_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

namespace {

double real_override(const std::string& k, const std::string& v) {
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw UsageError("bad value '" + v + "' for key '" + k + "': expected a number");
    return x;
}

std::uint32_t uint_override(const std::string& k, const std::string& v) {
    std::uint32_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw UsageError("bad value '" + v + "' for key '" + k + "': expected a non-negative integer");
    return x;
}

}  // namespace

analysis::CurveOptions curve_options(const Overrides& overrides) {
    analysis::CurveOptions o;
    for (const auto& [k, v] : overrides) {
        if (k == "mu") o.mu = uint_override(k, v);
        else if (k == "beta") o.beta = uint_override(k, v);
        else if (k == "gamma") o.gamma = uint_override(k, v);
        else if (k == "pc_base") o.pc_base = real_override(k, v);
        else if (k == "pc_anchor_nb") o.pc_anchor_nb = real_override(k, v);
        else if (k == "nb") o.nb_fixed = real_override(k, v);
        else if (k == "nb_min") o.nb_min = uint_override(k, v);
        else if (k == "nb_max") o.nb_max = uint_override(k, v);
        else if (k == "gamma_min") o.gamma_min = uint_override(k, v);
        else if (k == "gamma_max") o.gamma_max = uint_override(k, v);
        else throw UsageError("unknown key '" + k + "'");
    }
    if (o.nb_min > o.nb_max || o.gamma_min > o.gamma_max) throw UsageError("empty sweep range");
    return o;
}

analysis::CostParams cost_params(const Overrides& overrides) {
    analysis::CostParams c{20, 10, 20, 10};
    for (const auto& [k, v] : overrides) {
        if (k == "nn") c.nn = uint_override(k, v);
        else if (k == "lc") c.lc = uint_override(k, v);
        else if (k == "rte") c.rte = uint_override(k, v);
        else if (k == "nbe") c.nbe = uint_override(k, v);
        else throw UsageError("unknown key '" + k + "'");
    }
    return c;
}

std::string analyze_csv(const std::string& figure, const Overrides& overrides) {
    if (figure == "fig9a") return analysis::fig9a_csv(curve_options(overrides));
    if (figure == "fig9b") return analysis::fig9b_csv(curve_options(overrides));
    if (figure == "fig12") return analysis::fig12_csv(curve_options(overrides));
    if (figure == "costs") return analysis::costs_csv(cost_params(overrides));
    throw UsageError("unknown figure '" + figure + "' (fig9a, fig9b, fig12, costs)");
}

std::vector<std::string> summary_columns() {
    std::vector<std::string> cols = {"runs"};
    sim::RunMetrics empty;
    for (const auto& [name, v] : sim::scalar_metrics(empty, sim::ScenarioConfig{})) {
        cols.push_back(name + "_mean");
        cols.push_back(name + "_std");
    }
    return cols;
}

std::vector<std::string> summary_cells(const sim::Aggregate& a) {
    std::vector<std::string> cells = {std::to_string(a.runs.size())};
    sim::RunMetrics empty;
    for (const auto& [name, v] : sim::scalar_metrics(empty, sim::ScenarioConfig{})) {
        auto it = a.stats.find(name);
        sim::Stat s = it == a.stats.end() ? sim::Stat{} : it->second;
        cells.push_back(csv_number(s.mean));
        cells.push_back(csv_number(s.stddev));
    }
    return cells;
}

namespace {

std::string join(const std::vector<std::string>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
    return s;
}

std::string run_stem(std::uint32_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%03u", i);
    return buf;
}

}  // namespace

std::string drops_timeline_csv(const sim::RunMetrics& m) {
    std::string s = "time,wormhole_drops\n";
    for (const auto& [t, n] : m.drops_timeline) s += csv_number(t) + "," + std::to_string(n) + "\n";
    return s;
}

std::string runs_csv(const std::vector<sim::RunMetrics>& runs, const sim::ScenarioConfig& c) {
    std::vector<std::string> head = {"run", "seed"};
    sim::RunMetrics empty;
    for (const auto& [name, v] : sim::scalar_metrics(empty, c)) head.push_back(name);
    std::string s = join(head) + "\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::vector<std::string> row = {std::to_string(i), std::to_string(runs[i].seed)};
        for (const auto& [name, v] : sim::scalar_metrics(runs[i], c)) row.push_back(csv_number(v));
        s += join(row) + "\n";
    }
    return s;
}

std::string summary_csv(const sim::Aggregate& a, const sim::ScenarioConfig& c) {
    std::vector<std::string> head = {"srps"};
    for (auto& col : summary_columns()) head.push_back(col);
    std::vector<std::string> row = {c.srps ? "on" : "off"};
    for (auto& cell : summary_cells(a)) row.push_back(cell);
    return join(head) + "\n" + join(row) + "\n";
}

namespace {

// Runs every seed on a small pool; `each` sees results as they finish, the returned vector is in run order.
template <class F>
std::vector<sim::RunMetrics> run_all(const sim::ScenarioConfig& c, unsigned jobs, F each) {
    std::vector<sim::RunMetrics> runs(c.runs);
    std::atomic<std::uint32_t> next{0};
    jobs = std::max(1u, std::min(jobs, c.runs));
    std::vector<std::exception_ptr> errors(jobs);
    auto work = [&](unsigned w) {
        try {
            for (std::uint32_t i = next++; i < c.runs; i = next++) {
                sim::RunOutput out = sim::run_scenario(c, i);
                each(i, out);
                runs[i] = std::move(out.metrics);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return runs;
}

}  // namespace

sim::Aggregate simulate(const sim::ScenarioConfig& c, const fs::path& out, unsigned jobs) {
    fs::create_directories(out);
    auto runs = run_all(c, jobs, [&](std::uint32_t i, const sim::RunOutput& r) {
        write_file(out / (run_stem(i) + "_drops.csv"), drops_timeline_csv(r.metrics));
        if (c.trace) {
            std::string t = "time\tnode\tevent\taction\treason\n";
            for (const auto& line : r.trace) t += line + "\n";
            write_file(out / (run_stem(i) + ".trace"), t);
        }
    });
    sim::Aggregate a = sim::aggregate(runs, c);
    write_file(out / "runs.csv", runs_csv(runs, c));
    write_file(out / "summary.csv", summary_csv(a, c));
    return a;
}

std::string sweep_csv(const sim::ScenarioConfig& base, const std::string& key, const std::vector<std::string>& values,
                      unsigned jobs) {
    const KeyInfo* info = find_key(key);
    if (!info) throw UsageError("unknown sweep key '" + key + "'");
    if (key == "srps") throw UsageError("srps is swept implicitly; pick another key");
    if (values.empty()) throw UsageError("empty value list");
    // Validate every value before any run starts.
    std::vector<sim::ScenarioConfig> points;
    for (const auto& v : values) {
        sim::ScenarioConfig c = base;
        apply_setting(c, key, v);
        points.push_back(c);
    }
    std::vector<std::string> head = {"variable", "value", "srps"};
    for (auto& col : summary_columns()) head.push_back(col);
    std::string s = join(head) + "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (bool on : {true, false}) {
            sim::ScenarioConfig c = points[i];
            c.srps = on;
            c.trace = false;
            auto runs = run_all(c, jobs, [](std::uint32_t, const sim::RunOutput&) {});
            std::vector<std::string> row = {key, get_setting(c, key), on ? "on" : "off"};
            for (auto& cell : summary_cells(sim::aggregate(runs, c))) row.push_back(cell);
            s += join(row) + "\n";
        }
    }
    return s;
}

}  // namespace srps::app
