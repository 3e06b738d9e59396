// srps: analytic curves, simulations, parameter sweeps and the validation suite.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <thread>

#include "srps/commands.hpp"
#include "srps/config.hpp"
#include "srps/validation.hpp"

using namespace srps;

namespace {

// Config file first, then --seed/--runs, then --set in order.
sim::ScenarioConfig build_config(const std::string& path, const std::vector<std::string>& sets, std::int64_t seed,
                                 std::int64_t runs) {
    sim::ScenarioConfig c = path.empty() ? sim::ScenarioConfig{} : app::load_config(path);
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    if (runs >= 0) c.runs = static_cast<std::uint32_t>(runs);
    for (const auto& kv : sets) {
        auto [k, v] = app::split_assignment(kv);
        app::apply_setting(c, k, v);
    }
    return c;
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Secure route discovery: analysis, simulation and validation"};
    cli.require_subcommand(1);

    auto* analyze = cli.add_subcommand("analyze", "Emit analytic curves as CSV");
    std::string figure;
    std::vector<std::string> analyze_sets;
    std::string analyze_out;
    analyze->add_option("--figure", figure, "fig9a, fig9b, fig12 or costs")->required();
    analyze->add_option("--set", analyze_sets, "Override key=value (repeatable)");
    analyze->add_option("--out", analyze_out, "Output directory; <figure>.csv is written there (default: stdout)");

    auto* simulate = cli.add_subcommand("simulate", "Run a scenario and write per-run and summary CSVs");
    std::string sim_config, sim_out = "out";
    std::vector<std::string> sim_sets;
    std::int64_t sim_seed = -1, sim_runs = -1;
    unsigned sim_jobs = default_jobs();
    simulate->add_option("--config", sim_config, "Scenario file (key = value lines)");
    simulate->add_option("--out", sim_out, "Output directory");
    simulate->add_option("--seed", sim_seed, "Master seed")->check(CLI::NonNegativeNumber);
    simulate->add_option("--runs", sim_runs, "Number of runs")->check(CLI::PositiveNumber);
    simulate->add_option("--set", sim_sets, "Override key=value (repeatable)");
    simulate->add_option("--jobs", sim_jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* sweep = cli.add_subcommand("sweep", "Vary one key, with srps on and off, into sweep.csv");
    std::string sw_config, sw_out = "out", sw_var, sw_values;
    std::vector<std::string> sw_sets;
    std::int64_t sw_seed = -1, sw_runs = -1;
    unsigned sw_jobs = default_jobs();
    sweep->add_option("--config", sw_config, "Scenario file (key = value lines)");
    sweep->add_option("--var", sw_var, "Key to vary")->required();
    sweep->add_option("--values", sw_values, "Values: lo..hi or a,b,c")->required();
    sweep->add_option("--out", sw_out, "Output directory");
    sweep->add_option("--seed", sw_seed, "Master seed")->check(CLI::NonNegativeNumber);
    sweep->add_option("--runs", sw_runs, "Runs per point")->check(CLI::PositiveNumber);
    sweep->add_option("--set", sw_sets, "Override key=value (repeatable)");
    sweep->add_option("--jobs", sw_jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* validate = cli.add_subcommand("validate", "Run the acceptance checks");
    std::string level = "fast";
    validate->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e) == 0 ? 0 : 2;  // --help is a ParseError with status 0
    }

    try {
        if (*analyze) {
            app::Overrides ov;
            for (const auto& kv : analyze_sets) ov.push_back(app::split_assignment(kv));
            const std::string csv = app::analyze_csv(figure, ov);
            if (analyze_out.empty()) std::cout << csv;
            else app::write_file(std::filesystem::path(analyze_out) / (figure + ".csv"), csv);
            return 0;
        }
        if (*simulate) {
            auto c = build_config(sim_config, sim_sets, sim_seed, sim_runs);
            app::simulate(c, sim_out, sim_jobs);
            return 0;
        }
        if (*sweep) {
            auto c = build_config(sw_config, sw_sets, sw_seed, sw_runs);
            auto values = app::expand_values(sw_values);
            app::write_file(std::filesystem::path(sw_out) / "sweep.csv", app::sweep_csv(c, sw_var, values, sw_jobs));
            return 0;
        }
        if (*validate) {
            auto results = app::run_validation(level == "full" ? app::Level::Full : app::Level::Fast,
                                               [](const app::CheckResult& r) {
                                                   std::cout << app::format_line(r) << std::endl;
                                               });
            return app::all_passed(results) ? 0 : 1;
        }
    } catch (const app::ConfigParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const app::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const sim::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
