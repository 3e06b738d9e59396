#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "srps/analysis.hpp"
#include "srps/scenario.hpp"

namespace srps::app {

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Fixed-precision number text used in every CSV cell.
std::string csv_number(double x);

// Analytic curve CSV for fig9a, fig9b, fig12 or costs. Overrides use the CurveOptions / CostParams field names.
std::string analyze_csv(const std::string& figure, const Overrides& overrides);
analysis::CurveOptions curve_options(const Overrides& overrides);
analysis::CostParams cost_params(const Overrides& overrides);

// Summary columns shared by simulate and sweep: runs, then <metric>_mean and <metric>_std.
std::vector<std::string> summary_columns();
std::vector<std::string> summary_cells(const sim::Aggregate& a);

std::string drops_timeline_csv(const sim::RunMetrics& m);
std::string runs_csv(const std::vector<sim::RunMetrics>& runs, const sim::ScenarioConfig& c);
std::string summary_csv(const sim::Aggregate& a, const sim::ScenarioConfig& c);

// Runs c.runs seeds; per run: run_NNN_drops.csv and, with tracing on, run_NNN.trace.
// Then runs.csv (one row per run) and summary.csv (one row). Returns the aggregate.
sim::Aggregate simulate(const sim::ScenarioConfig& c, const std::filesystem::path& out, unsigned jobs = 1);

// One summary row per (value, srps on/off) pair, written to sweep.csv.
std::string sweep_csv(const sim::ScenarioConfig& base, const std::string& key, const std::vector<std::string>& values,
                      unsigned jobs = 1);

void write_file(const std::filesystem::path& p, const std::string& text);

}  // namespace srps::app
