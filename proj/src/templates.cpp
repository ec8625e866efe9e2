#include "ciflex/templates.hpp"

#include "ciflex/errors.hpp"

#include <array>

namespace ciflex {

namespace {

const std::string kMainTemplate =
    "A multi-trun or single-turn conversation between user and AI assistant is "
    "given. Answer the last user question. Ensure that only answer the last user "
    "question. If a context is provided for the last question, use the context as "
    "the major source for the answer. Answer should be less than 50 words. Do not "
    "output conversation history or other unnecessary words as \"Here is...\"";

const std::string kClassifierTemplate =
    "Your new goal: for the target last user question, discern if the following "
    "sub-task is required or not.\n"
    "\n"
    "Answer format: Ensure to provide your answer as ONLY \"Yes\" or \"No\" "
    "without adding unnecessary words or reasons, descriptions.\n"
    "i.e. \"#Answer: [\"Yes\" or \"No\"]\"\n"
    "\n"
    "Sub-task:\n"
    "{Sub-task description}.";

const std::string kSubtaskTemplate =
    "Note that, now you are a helpful, respectful and honest assistant for a "
    "following sub-task.\n"
    "\n"
    "Sub-task:\n"
    "{Sub-task description}.";

const std::string kMultichoiceTemplate =
    "Your new goal: for the target last user question, select which single "
    "sub-task is required.\n"
    "\n"
    "Answer format: Ensure to provide your answer as ONLY one option letter among "
    "\"(A)\", \"(B)\", \"(C)\", \"(D)\", \"(E)\" without adding unnecessary words "
    "or reasons, descriptions.\n"
    "i.e. \"#Answer: [option letter]\"\n"
    "\n"
    "Options:\n"
    "(A) {option_a}\n"
    "(B) {option_b}\n"
    "(C) {option_c}\n"
    "(D) {option_d}\n"
    "(E) {option_e}";

struct OptionEntry {
    SubTaskKind kind;
    std::string title;
    std::string text;
};

const std::array<OptionEntry, 5>& options() {
    static const std::array<OptionEntry, 5> entries = {{
        {SubTaskKind::QueryRewrite, "Query rewrite",
         "Select this option if the target user question contains any "
         "context-dependent words (e.g., \"this,\" \"that,\" \"it,\" \"these\", "
         "\"the xxxx\") that rely on previous turns to be fully understood. Even "
         "if the query is grammatically correct, it must be rewritten for clarity "
         "when its meaning is ambiguous without prior context."},
        {SubTaskKind::ApiCall, "API Call",
         "Select this option if the response to the target user question can be "
         "made by performing an API Call of image, audio, speech models."},
        {SubTaskKind::ChatSummary, "Finish several turns of casual chat",
         "Select this option if the conversation included multiple turns of "
         "casual chat or small talk, and in the target user question intends to "
         "conclude this talk."},
        {SubTaskKind::Math, "Math Problem",
         "Select this option if the last user interaction involves solving a "
         "math problem or requires mathematical computation."},
        {SubTaskKind::None, "Clear user interaction and casual chat",
         "Select this option if the intent of the target user question is "
         "keeping casual chat with AI Assistant with no needs of (A), (B), (C). "
         "e.g. \"Hi\", \"I'm tired\". In specific, the target user question is "
         "stand-alone understandable without previous turns. The target user "
         "question does not need API call of image, audio, speech models. The "
         "intent of the target user question does not conclusion of the "
         "conversation."},
    }};
    return entries;
}

const OptionEntry& option_entry(SubTaskKind kind) {
    for (const auto& entry : options()) {
        if (entry.kind == kind) {
            return entry;
        }
    }
    throw TemplateError("no option entry for kind " + std::string(to_string(kind)));
}

}  // namespace

const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = {"main", "classifier", "subtask",
                                                   "multichoice"};
    return names;
}

const std::string& template_text(const std::string& name) {
    if (name == "main") return kMainTemplate;
    if (name == "classifier") return kClassifierTemplate;
    if (name == "subtask") return kSubtaskTemplate;
    if (name == "multichoice") return kMultichoiceTemplate;
    throw TemplateError("unknown template: " + name);
}

std::string render_template(const std::string& name,
                            const std::map<std::string, std::string>& variables) {
    const std::string& text = template_text(name);
    std::string out;
    out.reserve(text.size());
    std::map<std::string, bool> used;
    for (const auto& [key, _] : variables) {
        used[key] = false;
    }
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            out += text[i++];
            continue;
        }
        auto close = text.find('}', i);
        if (close == std::string::npos) {
            out += text[i++];
            continue;
        }
        std::string key = text.substr(i + 1, close - i - 1);
        auto it = variables.find(key);
        if (it == variables.end()) {
            throw TemplateError("template " + name + ": unbound placeholder {" + key + "}");
        }
        used[key] = true;
        out += it->second;
        i = close + 1;
    }
    for (const auto& [key, was_used] : used) {
        if (!was_used) {
            throw TemplateError("template " + name + ": variable " + key +
                                " matches no placeholder");
        }
    }
    return out;
}

const std::string& option_title(SubTaskKind kind) { return option_entry(kind).title; }
const std::string& option_text(SubTaskKind kind) { return option_entry(kind).text; }

namespace {

std::string option_description(SubTaskKind kind) {
    const auto& entry = option_entry(kind);
    return entry.title + " - " + entry.text;
}

}  // namespace

std::string default_classifier_instruction(SubTaskKind kind) {
    return render_template("classifier", {{"Sub-task description", option_description(kind)}});
}

std::string default_subtask_instruction(SubTaskKind kind) {
    return render_template("subtask", {{"Sub-task description", option_description(kind)}});
}

std::string default_multichoice_instruction() {
    return render_template("multichoice",
                           {{"option_a", option_description(SubTaskKind::QueryRewrite)},
                            {"option_b", option_description(SubTaskKind::ApiCall)},
                            {"option_c", option_description(SubTaskKind::ChatSummary)},
                            {"option_d", option_description(SubTaskKind::Math)},
                            {"option_e", option_description(SubTaskKind::None)}});
}

std::string default_main_instruction() { return kMainTemplate; }

std::string render_main_prompt(
    const std::vector<std::pair<std::string, std::string>>& history,
    const std::string& final_question) {
    std::string out = kMainTemplate;
    out += "\n";
    int i = 1;
    for (const auto& [question, answer] : history) {
        out += "\n#question" + std::to_string(i) + ": " + question;
        out += "\n#answer" + std::to_string(i) + ": " + answer;
        ++i;
    }
    out += "\n#question" + std::to_string(i) + ": " + final_question;
    return out;
}

}  // namespace ciflex
