#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ciflex {

// The five turn categories. `None` means the turn needs no side work.
enum class SubTaskKind {
    ApiCall,
    Math,
    QueryRewrite,
    ChatSummary,
    None,
};

inline constexpr std::array<SubTaskKind, 4> kActionableKinds = {
    SubTaskKind::ApiCall,
    SubTaskKind::Math,
    SubTaskKind::QueryRewrite,
    SubTaskKind::ChatSummary,
};

std::string_view to_string(SubTaskKind kind);
std::optional<SubTaskKind> subtask_from_string(std::string_view name);

// Multi-choice option letters: A=query rewrite, B=API call, C=chat summary,
// D=math, E=none.
char option_letter(SubTaskKind kind);
std::optional<SubTaskKind> kind_from_option_letter(char letter);

// Evaluation order for the per-task binary classifiers. Must be a
// permutation of the four actionable kinds.
class PriorityOrder {
public:
    // API call, math, query rewrite, chat summary.
    static PriorityOrder standard();

    // Throws ValidationError unless `kinds` is a permutation of the four
    // actionable kinds.
    explicit PriorityOrder(std::vector<SubTaskKind> kinds);

    const std::vector<SubTaskKind>& kinds() const { return kinds_; }

    // Highest-priority kind whose flag is set; None if none are.
    SubTaskKind argmax(const std::array<bool, 4>& yes_by_position) const;

private:
    std::vector<SubTaskKind> kinds_;
};

}  // namespace ciflex
