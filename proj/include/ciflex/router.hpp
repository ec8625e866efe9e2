#pragma once

#include "ciflex/backend.hpp"
#include "ciflex/cache_ops.hpp"
#include "ciflex/subtask.hpp"

#include <map>
#include <string>
#include <vector>

namespace ciflex {

struct ClassifierVerdict {
    SubTaskKind kind = SubTaskKind::None;
    bool yes = false;
    std::size_t prefill_cost = 0;
    std::size_t generation_cost = 0;
    std::string raw_text;
};

struct ClassificationResult {
    SubTaskKind selected = SubTaskKind::None;
    std::vector<ClassifierVerdict> verdicts;  // in evaluation (priority) order
    bool batched = false;
};

struct MultichoiceResult {
    SubTaskKind selected = SubTaskKind::None;
    std::size_t prefill_cost = 0;
    std::size_t generation_cost = 0;
    std::string raw_text;
};

// Strict verdict parse: the first alphabetic run of the text must read
// "Yes" or "No" (case-insensitive). Anything else raises
// ClassificationFormatError naming the kind.
bool parse_verdict(std::string_view text, SubTaskKind kind);

// Strict option parse: the first "(X)" with X in A..E decides; no match
// raises ClassificationFormatError.
SubTaskKind parse_option_letter(std::string_view text);

// Per-task binary classification in priority order with early exit: each
// evaluation branches from the checkpoint, prefills only that classifier's
// instruction, decodes a verdict, and evicts the side path. Stops at the
// first yes; returns None when every classifier says no.
ClassificationResult classify_hierarchical(
    const Checkpoint& cp, const PriorityOrder& order,
    const std::map<SubTaskKind, std::string>& instructions, ModelBackend& backend);

// All four classifiers evaluated on independent forks of the checkpoint
// (concurrently; results joined in priority order regardless of completion
// order). Selects the same kind as the sequential mode for any verdict
// function; always returns 4 verdicts.
ClassificationResult classify_batched(
    const Checkpoint& cp, const PriorityOrder& order,
    const std::map<SubTaskKind, std::string>& instructions, ModelBackend& backend);

// Single branch with the combined (A)-(E) instruction; parses one option
// letter.
MultichoiceResult classify_multichoice(const Checkpoint& cp,
                                       const std::string& combined_instruction,
                                       ModelBackend& backend);

}  // namespace ciflex
