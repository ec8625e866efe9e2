#pragma once

#include <string>
#include <vector>

namespace ciflex {

struct CheckResult {
    std::string suite;
    std::string name;
    bool passed = false;
    std::string detail;
};

// Property suites behind `verify` and the acceptance harness. Each returns
// one result per named property; all are deterministic.
std::vector<CheckResult> verify_cache_algebra();
std::vector<CheckResult> verify_rollback_equivalence();
std::vector<CheckResult> verify_prefill_chunking();
std::vector<CheckResult> verify_router();
std::vector<CheckResult> verify_oracle_sweep();
std::vector<CheckResult> verify_recurrence();
std::vector<CheckResult> verify_cost_ordering();
std::vector<CheckResult> verify_recent_window();
std::vector<CheckResult> verify_role_hygiene();
std::vector<CheckResult> verify_latency_direction();

const std::vector<std::string>& verify_suite_names();

// Runs one suite by name ("all" runs everything). Throws Error for unknown
// names.
std::vector<CheckResult> run_verify_suite(const std::string& name);

}  // namespace ciflex
