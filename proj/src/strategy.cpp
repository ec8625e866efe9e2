#include "ciflex/strategy.hpp"

#include "ciflex/errors.hpp"

namespace ciflex {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Ciflex: return "ciflex";
        case Strategy::FullReload: return "full_reload";
        case Strategy::RecentReload: return "recent_reload";
        case Strategy::Seamless: return "seamless";
    }
    return "unknown";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
    if (name == "ciflex") return Strategy::Ciflex;
    if (name == "full_reload" || name == "full-reload") return Strategy::FullReload;
    if (name == "recent_reload" || name == "recent-reload") return Strategy::RecentReload;
    if (name == "seamless") return Strategy::Seamless;
    return std::nullopt;
}

std::string_view to_string(ClassificationMode mode) {
    switch (mode) {
        case ClassificationMode::Hierarchical: return "hierarchical";
        case ClassificationMode::Batched: return "batched";
        case ClassificationMode::Multichoice: return "multichoice";
    }
    return "unknown";
}

std::optional<ClassificationMode> classification_mode_from_string(std::string_view name) {
    if (name == "hierarchical") return ClassificationMode::Hierarchical;
    if (name == "batched") return ClassificationMode::Batched;
    if (name == "multichoice") return ClassificationMode::Multichoice;
    return std::nullopt;
}

void StrategyConfig::validate() const {
    std::vector<std::string> issues;
    if (recent_window < 1) {
        issues.push_back("recent_window: must be >= 1");
    }
    if (strategy == Strategy::Seamless && classification_mode &&
        *classification_mode == ClassificationMode::Batched) {
        issues.push_back("classification_mode: batched needs side paths and is not "
                         "available under seamless");
    }
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
}

std::string StrategyConfig::label() const {
    return std::string(to_string(strategy)) + "/" +
           std::string(to_string(resolved_classification_mode()));
}

}  // namespace ciflex
