#pragma once

#include "ciflex/backend.hpp"
#include "ciflex/cache_ops.hpp"
#include "ciflex/metrics.hpp"
#include "ciflex/oracle.hpp"
#include "ciflex/router.hpp"
#include "ciflex/script.hpp"
#include "ciflex/strategy.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ciflex {

struct TurnRecord {
    int turn = 0;
    std::string query;
    std::optional<std::string> retrieval;
    std::string answer;
    SubTaskKind selected_subtask = SubTaskKind::None;
    std::optional<std::string> subtask_output;
    // Prior turns reconstructed into the main-stage context; -1 for
    // cache-carrying strategies (nothing is reconstructed).
    int reload_context_turns = -1;
};

struct SummaryEntry {
    int turn = 0;
    std::string text;
};

struct SessionReport {
    std::string script_id;
    StrategyConfig config;
    std::string backend_name;
    std::size_t bootstrap_prefill = 0;
    std::vector<TurnRecord> transcript;
    std::vector<TurnMetrics> metrics;
    std::vector<CumulativePoint> cumulative;
    int final_cache_length = 0;
    std::size_t final_cache_segments = 0;
    std::map<std::string, std::size_t> final_cache_role_tokens;
    std::vector<SummaryEntry> summaries;

    RunCosts counts() const { return {bootstrap_prefill, metrics}; }
};

std::string report_to_json_text(const SessionReport& report);

// One conversation under one strategy. Turns run strictly in order; the
// session owns the scripted-behavior table it attaches to the backend.
class Session {
public:
    Session(const ConversationScript& script, StrategyConfig config,
            ModelBackend& backend,
            PriorityOrder order = PriorityOrder::standard());
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    bool done() const { return next_turn_ > script_.turn_count(); }
    TurnRecord run_turn();
    SessionReport finish();

    const KvCache& main_cache() const { return main_; }

private:
    TurnRecord run_cached_turn(int turn);
    TurnRecord run_reload_turn(int turn);

    // Fresh cache holding instruction + visible history + current query,
    // built from the transcript. Returns the prefill cost and how many
    // prior turns the window covered.
    KvCache build_reload_context(int turn, std::size_t& prefill_cost,
                                 int& context_turns);

    SegmentDraft draft(SegmentRole role, const std::string& text, int turn) const;
    void bootstrap_main_path();
    ClassificationResult classify_on_checkpoint(const Checkpoint& cp, int turn);
    void apply_classification_costs(TurnMetrics& m, const ClassificationResult& result);

    const ConversationScript& script_;
    StrategyConfig config_;
    ModelBackend& backend_;
    PriorityOrder order_;
    ScriptedBehavior scripted_;

    KvCache main_;
    int next_turn_ = 1;
    std::size_t bootstrap_prefill_ = 0;
    std::vector<TurnRecord> transcript_;
    std::vector<TurnMetrics> metrics_;
    std::vector<SummaryEntry> summaries_;
};

// Validates, runs every turn, and assembles the report.
SessionReport run_conversation(const ConversationScript& script,
                               const StrategyConfig& config, ModelBackend& backend,
                               PriorityOrder order = PriorityOrder::standard());

using BackendFactory = std::function<std::unique_ptr<ModelBackend>()>;

struct ComparisonTable {
    std::vector<std::string> labels;
    std::vector<SessionReport> reports;

    // One row per (strategy, turn, stage): turn, strategy, stage, prefill,
    // generated, cum_prefill, cum_generated. Bootstrap appears as a turn-0
    // row when nonzero. Cumulative columns run within (strategy, stage).
    std::string to_csv() const;

    std::size_t final_cumulative_prefill(std::size_t index) const;
    std::size_t final_cumulative_generated(std::size_t index) const;
};

// Structured companion to the CSV: a JSON array of the labeled per-strategy
// session reports.
std::string comparison_to_json_text(const ComparisonTable& table);

// Runs the script once per config on a fresh backend from the factory.
// Requires at least two configs.
ComparisonTable compare_strategies(const ConversationScript& script,
                                   const std::vector<StrategyConfig>& configs,
                                   const BackendFactory& factory,
                                   PriorityOrder order = PriorityOrder::standard());

}  // namespace ciflex
