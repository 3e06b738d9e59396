#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "srps/analysis.hpp"

namespace srps::app {

enum class Level { Fast, Full };
enum class Status { Pass, Fail, Skip };

struct CheckResult {
    int id = 0;
    std::string name;
    Status status = Status::Skip;
    std::string detail;
};

std::string to_string(Status s);
// One report line: "[PASS] 3 geometry: ...".
std::string format_line(const CheckResult& r);

using MemoryModel = std::function<std::uint64_t(const analysis::CostParams&)>;

// Each check is self-contained and deterministic.
CheckResult check_costs(const MemoryModel& memory = analysis::memory_cost);
CheckResult check_beta_identity();
CheckResult check_geometry(Level level);
CheckResult check_guard_density();
CheckResult check_false_alarm();
CheckResult check_detection(Level level);
CheckResult check_isolation_latency(Level level);
CheckResult check_wormhole_shape(Level level);
CheckResult check_security(Level level);
CheckResult check_crypto(Level level);
CheckResult check_determinism(const std::filesystem::path& scratch);

// Fast skips the simulation criteria and Monte Carlo loops beyond 10^4 trials.
std::vector<CheckResult> run_validation(Level level, const std::function<void(const CheckResult&)>& on_result = {},
                                        const std::filesystem::path& scratch = {});
bool all_passed(const std::vector<CheckResult>& rs);

}  // namespace srps::app
