#pragma once

#include "ciflex/metrics.hpp"
#include "ciflex/script.hpp"
#include "ciflex/strategy.hpp"
#include "ciflex/tokenizer.hpp"

#include <string>
#include <vector>

namespace ciflex {

// Session-level cost breakdown shared by the engine report and the oracle.
struct RunCosts {
    std::size_t bootstrap_prefill = 0;
    std::vector<TurnMetrics> turns;
};

// Ground truth by naive replay: for every stage, constructs what the given
// strategy would feed the model as fresh input, tokenizes, and counts. Never
// touches the engine's caches or operations.
RunCosts oracle_counts(const ConversationScript& script, const StrategyConfig& config,
                       const Tokenizer& tokenizer, const PriorityOrder& order =
                           PriorityOrder::standard());

struct MatchVerdict {
    bool ok = true;
    std::string divergence;  // first divergent (turn, stage, field) when !ok
};

// Exact comparison, zero tolerance, every stage count. Reports the first
// divergence.
MatchVerdict assert_engine_matches_oracle(const RunCosts& engine, const RunCosts& oracle);

}  // namespace ciflex
