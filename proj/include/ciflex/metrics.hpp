#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace ciflex {

// The four per-turn accounting stages. The initial main-instruction and
// first-query prefill of cache-carrying strategies happens before turn 1
// and is recorded separately as the session bootstrap.
enum class Stage { Classification, Subtask, MainAnswer, TurnUpdate };

inline constexpr std::array<Stage, 4> kStages = {
    Stage::Classification, Stage::Subtask, Stage::MainAnswer, Stage::TurnUpdate};

std::string_view to_string(Stage stage);

struct StageCost {
    std::size_t prefill = 0;
    std::size_t generated = 0;

    bool operator==(const StageCost&) const = default;
};

struct TurnMetrics {
    int turn = 0;
    std::array<StageCost, 4> stages{};
    int classifier_calls = 0;
    bool classification_batched = false;
    std::vector<StageCost> classifier_costs;  // one per evaluated classifier

    StageCost& at(Stage stage) { return stages[static_cast<std::size_t>(stage)]; }
    const StageCost& at(Stage stage) const {
        return stages[static_cast<std::size_t>(stage)];
    }
    std::size_t total_prefill() const;
    std::size_t total_generated() const;

    bool operator==(const TurnMetrics&) const = default;
};

// Per-turn running totals; monotone non-decreasing by construction.
struct CumulativePoint {
    std::size_t prefill = 0;
    std::size_t generated = 0;
};

std::vector<CumulativePoint> cumulative_curve(const std::vector<TurnMetrics>& turns,
                                              std::size_t bootstrap_prefill);

// Two-rate linear latency model. Rates are tokens per second and must be
// positive. Batched classification contributes the maximum over its
// classifier branches instead of their sum.
struct LatencyCalibration {
    double prefill_tokens_per_sec = 0.0;
    double decode_tokens_per_sec = 0.0;
};

double turn_latency_seconds(const TurnMetrics& turn, const LatencyCalibration& rates);
std::vector<double> latency_proxy(const std::vector<TurnMetrics>& turns,
                                  const LatencyCalibration& rates);

// Classification stage only (max over branches when batched).
double classification_latency_seconds(const TurnMetrics& turn,
                                      const LatencyCalibration& rates);

}  // namespace ciflex
