// Acceptance harness: runs every release criterion at its stated tolerance
// and prints one pass/fail line each. Exit status is nonzero if any fails.

#include "ciflex/verify.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

namespace {

struct Criterion {
    std::string title;
    std::vector<ciflex::CheckResult> (*run)();
    double time_budget_seconds;  // 0 = no stated budget
};

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    const std::vector<Criterion> criteria = {
        {"cache algebra: branch/evict identity and checkpoint immutability",
         &ciflex::verify_cache_algebra, 10.0},
        {"rollback equivalence within 1e-5 of from-scratch prefill",
         &ciflex::verify_rollback_equivalence, 30.0},
        {"incremental prefill equivalence within 1e-5",
         &ciflex::verify_prefill_chunking, 0.0},
        {"router enumeration over all verdict vectors", &ciflex::verify_router, 0.0},
        {"token accounting matches the naive replay oracle",
         &ciflex::verify_oracle_sweep, 60.0},
        {"main-cache length recurrence", &ciflex::verify_recurrence, 0.0},
        {"cost ordering and scaled prefill/generation reproduction",
         &ciflex::verify_cost_ordering, 5.0},
        {"recent re-load window coverage", &ciflex::verify_recent_window, 0.0},
        {"segment-role hygiene across strategies", &ciflex::verify_role_hygiene, 0.0},
        {"batched classification latency direction",
         &ciflex::verify_latency_direction, 0.0},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& criterion : criteria) {
        ++index;
        const auto start = clock::now();
        std::vector<ciflex::CheckResult> results;
        bool threw = false;
        std::string what;
        try {
            results = criterion.run();
        } catch (const std::exception& e) {
            threw = true;
            what = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(clock::now() - start).count();

        bool passed = !threw;
        std::string detail;
        for (const ciflex::CheckResult& result : results) {
            passed = passed && result.passed;
            if (!detail.empty()) {
                detail += "; ";
            }
            detail += result.name + ": " + result.detail;
        }
        if (threw) {
            detail = "exception: " + what;
        }
        if (criterion.time_budget_seconds > 0.0 &&
            elapsed > criterion.time_budget_seconds) {
            passed = false;
            detail += " [exceeded " + std::to_string(criterion.time_budget_seconds) +
                      "s budget]";
        }
        std::printf("[%s] %2d. %s (%.2fs)\n    %s\n", passed ? "PASS" : "FAIL", index,
                    criterion.title.c_str(), elapsed, detail.c_str());
        if (!passed) {
            ++failures;
        }
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
