#include "ciflex/metrics.hpp"

#include "ciflex/errors.hpp"

#include <algorithm>

namespace ciflex {

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Classification: return "classification";
        case Stage::Subtask: return "subtask";
        case Stage::MainAnswer: return "main_answer";
        case Stage::TurnUpdate: return "turn_update";
    }
    return "unknown";
}

std::size_t TurnMetrics::total_prefill() const {
    std::size_t total = 0;
    for (const auto& cost : stages) {
        total += cost.prefill;
    }
    return total;
}

std::size_t TurnMetrics::total_generated() const {
    std::size_t total = 0;
    for (const auto& cost : stages) {
        total += cost.generated;
    }
    return total;
}

std::vector<CumulativePoint> cumulative_curve(const std::vector<TurnMetrics>& turns,
                                              std::size_t bootstrap_prefill) {
    std::vector<CumulativePoint> curve;
    curve.reserve(turns.size());
    CumulativePoint running{bootstrap_prefill, 0};
    for (const auto& turn : turns) {
        running.prefill += turn.total_prefill();
        running.generated += turn.total_generated();
        curve.push_back(running);
    }
    return curve;
}

namespace {

void check_rates(const LatencyCalibration& rates) {
    if (rates.prefill_tokens_per_sec <= 0.0 || rates.decode_tokens_per_sec <= 0.0) {
        throw PreconditionError("latency_proxy: rates must be positive");
    }
}

double stage_seconds(const StageCost& cost, const LatencyCalibration& rates) {
    return static_cast<double>(cost.prefill) / rates.prefill_tokens_per_sec +
           static_cast<double>(cost.generated) / rates.decode_tokens_per_sec;
}

}  // namespace

double classification_latency_seconds(const TurnMetrics& turn,
                                      const LatencyCalibration& rates) {
    check_rates(rates);
    if (turn.classification_batched) {
        double slowest = 0.0;
        for (const StageCost& branch : turn.classifier_costs) {
            slowest = std::max(slowest, stage_seconds(branch, rates));
        }
        return slowest;
    }
    return stage_seconds(turn.at(Stage::Classification), rates);
}

double turn_latency_seconds(const TurnMetrics& turn, const LatencyCalibration& rates) {
    check_rates(rates);
    double total = classification_latency_seconds(turn, rates);
    for (Stage stage : kStages) {
        if (stage != Stage::Classification) {
            total += stage_seconds(turn.at(stage), rates);
        }
    }
    return total;
}

std::vector<double> latency_proxy(const std::vector<TurnMetrics>& turns,
                                  const LatencyCalibration& rates) {
    std::vector<double> seconds;
    seconds.reserve(turns.size());
    for (const auto& turn : turns) {
        seconds.push_back(turn_latency_seconds(turn, rates));
    }
    return seconds;
}

}  // namespace ciflex
