#pragma once

#include "ciflex/subtask.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ciflex {

// Registry of the inference prompt templates. Template text is byte-stable:
// rendering with identical inputs yields identical bytes.

// Registered template names: "main", "classifier", "subtask", "multichoice".
const std::vector<std::string>& template_names();

// Raw template text with `{placeholder}` slots intact. Throws TemplateError
// for unknown names.
const std::string& template_text(const std::string& name);

// Substitutes every `{key}` occurrence. Any placeholder left unbound (or a
// variable that matches no placeholder) raises TemplateError naming it.
std::string render_template(const std::string& name,
                            const std::map<std::string, std::string>& variables);

// Sub-task option descriptions, one per kind (None included). These are the
// descriptions used by both the per-task binary and multi-choice setups.
const std::string& option_title(SubTaskKind kind);
const std::string& option_text(SubTaskKind kind);

// Instruction builders used by the synthetic generator.
std::string default_classifier_instruction(SubTaskKind kind);
std::string default_subtask_instruction(SubTaskKind kind);
std::string default_multichoice_instruction();
std::string default_main_instruction();

// Full main-task prompt: instruction paragraph, each completed turn as a
// numbered question/answer block, then the final question block.
std::string render_main_prompt(
    const std::vector<std::pair<std::string, std::string>>& history,
    const std::string& final_question);

}  // namespace ciflex
