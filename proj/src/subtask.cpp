#include "ciflex/subtask.hpp"

#include "ciflex/errors.hpp"

#include <algorithm>

namespace ciflex {

std::string_view to_string(SubTaskKind kind) {
    switch (kind) {
        case SubTaskKind::ApiCall: return "api_call";
        case SubTaskKind::Math: return "math";
        case SubTaskKind::QueryRewrite: return "query_rewrite";
        case SubTaskKind::ChatSummary: return "chat_summary";
        case SubTaskKind::None: return "none";
    }
    return "unknown";
}

std::optional<SubTaskKind> subtask_from_string(std::string_view name) {
    if (name == "api_call") return SubTaskKind::ApiCall;
    if (name == "math") return SubTaskKind::Math;
    if (name == "query_rewrite") return SubTaskKind::QueryRewrite;
    if (name == "chat_summary") return SubTaskKind::ChatSummary;
    if (name == "none") return SubTaskKind::None;
    return std::nullopt;
}

char option_letter(SubTaskKind kind) {
    switch (kind) {
        case SubTaskKind::QueryRewrite: return 'A';
        case SubTaskKind::ApiCall: return 'B';
        case SubTaskKind::ChatSummary: return 'C';
        case SubTaskKind::Math: return 'D';
        case SubTaskKind::None: return 'E';
    }
    throw Error("option_letter: bad kind");
}

std::optional<SubTaskKind> kind_from_option_letter(char letter) {
    switch (letter) {
        case 'A': case 'a': return SubTaskKind::QueryRewrite;
        case 'B': case 'b': return SubTaskKind::ApiCall;
        case 'C': case 'c': return SubTaskKind::ChatSummary;
        case 'D': case 'd': return SubTaskKind::Math;
        case 'E': case 'e': return SubTaskKind::None;
        default: return std::nullopt;
    }
}

PriorityOrder PriorityOrder::standard() {
    return PriorityOrder({SubTaskKind::ApiCall, SubTaskKind::Math,
                          SubTaskKind::QueryRewrite, SubTaskKind::ChatSummary});
}

PriorityOrder::PriorityOrder(std::vector<SubTaskKind> kinds) : kinds_(std::move(kinds)) {
    if (kinds_.size() != kActionableKinds.size()) {
        throw ValidationError({"priority order: expected 4 kinds, got " +
                               std::to_string(kinds_.size())});
    }
    for (SubTaskKind kind : kActionableKinds) {
        if (std::count(kinds_.begin(), kinds_.end(), kind) != 1) {
            throw ValidationError({std::string("priority order: must contain ") +
                                   std::string(to_string(kind)) + " exactly once"});
        }
    }
}

SubTaskKind PriorityOrder::argmax(const std::array<bool, 4>& yes_by_position) const {
    for (std::size_t i = 0; i < kinds_.size(); ++i) {
        if (yes_by_position[i]) {
            return kinds_[i];
        }
    }
    return SubTaskKind::None;
}

}  // namespace ciflex
