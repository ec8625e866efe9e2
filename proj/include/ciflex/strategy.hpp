#pragma once

#include "ciflex/cache_ops.hpp"

#include <optional>
#include <string_view>

namespace ciflex {

enum class Strategy { Ciflex, FullReload, RecentReload, Seamless };
enum class ClassificationMode { Hierarchical, Batched, Multichoice };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);
std::string_view to_string(ClassificationMode mode);
std::optional<ClassificationMode> classification_mode_from_string(std::string_view name);

struct StrategyConfig {
    Strategy strategy = Strategy::Ciflex;
    int recent_window = 5;
    RetentionMode retention_mode = RetentionMode::PreservePositions;
    // Unset picks the strategy default: multichoice for seamless (per-task
    // binary blocks inline would pollute the visible flow), hierarchical
    // otherwise.
    std::optional<ClassificationMode> classification_mode;

    ClassificationMode resolved_classification_mode() const {
        if (classification_mode) {
            return *classification_mode;
        }
        return strategy == Strategy::Seamless ? ClassificationMode::Multichoice
                                              : ClassificationMode::Hierarchical;
    }

    void validate() const;  // throws ValidationError

    // Stable label for tables: "<strategy>/<classification mode>".
    std::string label() const;
};

}  // namespace ciflex
