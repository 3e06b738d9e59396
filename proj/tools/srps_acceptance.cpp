// Acceptance report: one PASS/FAIL line per criterion at full level.
// Exit status is nonzero when any criterion fails.
#include <cstring>
#include <iostream>

#include "srps/validation.hpp"

int main(int argc, char** argv) {
    using namespace srps::app;
    Level level = Level::Full;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--fast") == 0) level = Level::Fast;
    int passed = 0, failed = 0, skipped = 0;
    run_validation(level, [&](const CheckResult& r) {
        std::cout << format_line(r) << std::endl;
        (r.status == Status::Pass ? passed : r.status == Status::Fail ? failed : skipped)++;
    });
    std::cout << "summary: " << passed << " passed, " << failed << " failed, " << skipped << " skipped" << std::endl;
    return failed == 0 ? 0 : 1;
}
