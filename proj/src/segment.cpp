#include "ciflex/segment.hpp"

#include <cstring>

namespace ciflex {

std::string_view to_string(SegmentRole role) {
    switch (role) {
        case SegmentRole::MainInstruction: return "main-instruction";
        case SegmentRole::TurnQuery: return "turn-query";
        case SegmentRole::RetrievalContext: return "retrieval-context";
        case SegmentRole::MainAnswer: return "main-answer";
        case SegmentRole::SubtaskInstruction: return "subtask-instruction";
        case SegmentRole::SubtaskReasoning: return "subtask-reasoning";
        case SegmentRole::SubtaskOutput: return "subtask-output";
        case SegmentRole::ClassifierInstruction: return "classifier-instruction";
        case SegmentRole::ClassifierOutput: return "classifier-output";
    }
    return "unknown";
}

std::optional<SegmentRole> role_from_string(std::string_view name) {
    if (name == "main-instruction") return SegmentRole::MainInstruction;
    if (name == "turn-query") return SegmentRole::TurnQuery;
    if (name == "retrieval-context") return SegmentRole::RetrievalContext;
    if (name == "main-answer") return SegmentRole::MainAnswer;
    if (name == "subtask-instruction") return SegmentRole::SubtaskInstruction;
    if (name == "subtask-reasoning") return SegmentRole::SubtaskReasoning;
    if (name == "subtask-output") return SegmentRole::SubtaskOutput;
    if (name == "classifier-instruction") return SegmentRole::ClassifierInstruction;
    if (name == "classifier-output") return SegmentRole::ClassifierOutput;
    return std::nullopt;
}

bool is_instruction_role(SegmentRole role) {
    return role == SegmentRole::MainInstruction ||
           role == SegmentRole::SubtaskInstruction ||
           role == SegmentRole::ClassifierInstruction;
}

namespace {

bool float_rows_equal(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    if (a.empty()) {
        return true;
    }
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

bool segments_equal(const Segment& a, const Segment& b) {
    if (a.role != b.role || a.turn != b.turn) {
        return false;
    }
    if (a.tokens != b.tokens || a.positions != b.positions) {
        return false;
    }
    if (a.kv.has_value() != b.kv.has_value()) {
        return false;
    }
    if (!a.kv.has_value()) {
        return true;
    }
    const SegmentKv& ka = *a.kv;
    const SegmentKv& kb = *b.kv;
    if (ka.layers.size() != kb.layers.size()) {
        return false;
    }
    for (std::size_t l = 0; l < ka.layers.size(); ++l) {
        if (!float_rows_equal(ka.layers[l].keys, kb.layers[l].keys) ||
            !float_rows_equal(ka.layers[l].values, kb.layers[l].values)) {
            return false;
        }
    }
    return true;
}

}  // namespace ciflex
