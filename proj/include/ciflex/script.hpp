#pragma once

#include "ciflex/backend.hpp"
#include "ciflex/subtask.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ciflex {

// One scripted turn: the user query, the gold routing label, and every
// output the backends may be asked to produce while executing it.
struct TurnSpec {
    std::string query;
    SubTaskKind gold_subtask = SubTaskKind::None;
    std::map<SubTaskKind, bool> scripted_verdicts;  // one entry per actionable kind
    char scripted_multichoice = 'E';
    std::optional<std::string> scripted_reasoning;
    std::optional<std::string> scripted_subtask_output;
    std::optional<std::string> scripted_retrieval;
    std::string scripted_answer;
};

struct ScriptMeta {
    std::string id;
    std::uint64_t seed = 0;
    std::string profile;
};

// Declarative multi-turn scenario. Versioned JSON on disk (format version 1).
struct ConversationScript {
    ScriptMeta meta;
    std::string main_instruction;
    std::map<SubTaskKind, std::string> subtask_instructions;     // 4 actionable kinds
    std::map<SubTaskKind, std::string> classifier_instructions;  // 4 actionable kinds
    std::string multichoice_instruction;
    std::vector<TurnSpec> turns;

    int turn_count() const { return static_cast<int>(turns.size()); }
    const TurnSpec& turn(int t) const { return turns[static_cast<std::size_t>(t - 1)]; }
};

// Returns every violation as "field path: rule"; empty means valid. A script
// that validates is guaranteed to run to completion on the counting backend
// without scripting errors.
std::vector<std::string> validate_script(const ConversationScript& script);

// Loads, parses, and validates; throws ValidationError holding every issue.
ConversationScript load_and_validate(const std::string& path);
ConversationScript script_from_json_text(const std::string& text);

std::string script_to_json_text(const ConversationScript& script);
void save_script(const ConversationScript& script, const std::string& path);

// Scripted decode outputs for the backends, keyed by (turn, stage).
ScriptedBehavior make_scripted_behavior(const ConversationScript& script);

// Tokenizes every script text once, in a canonical order, so interning
// tokenizers assign ids independent of execution interleaving.
void warm_tokenizer(const ConversationScript& script, const Tokenizer& tokenizer);

}  // namespace ciflex
