#include "ciflex/script.hpp"

#include "ciflex/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace ciflex {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string turn_path(std::size_t index, const std::string& field) {
    return "turns[" + std::to_string(index) + "]." + field;
}

}  // namespace

std::vector<std::string> validate_script(const ConversationScript& script) {
    std::vector<std::string> issues;
    if (script.main_instruction.empty()) {
        issues.push_back("main_instruction: must be nonempty");
    }
    for (SubTaskKind kind : kActionableKinds) {
        const std::string name(to_string(kind));
        auto sit = script.subtask_instructions.find(kind);
        if (sit == script.subtask_instructions.end() || sit->second.empty()) {
            issues.push_back("subtask_instructions." + name + ": missing or empty");
        }
        auto cit = script.classifier_instructions.find(kind);
        if (cit == script.classifier_instructions.end() || cit->second.empty()) {
            issues.push_back("classifier_instructions." + name + ": missing or empty");
        }
    }
    if (script.multichoice_instruction.empty()) {
        issues.push_back("multichoice_instruction: must be nonempty");
    }
    if (script.turns.empty()) {
        issues.push_back("turns: must be nonempty");
    }

    const PriorityOrder order = PriorityOrder::standard();
    for (std::size_t i = 0; i < script.turns.size(); ++i) {
        const TurnSpec& turn = script.turns[i];
        if (turn.query.empty()) {
            issues.push_back(turn_path(i, "query") + ": must be nonempty");
        }
        if (turn.scripted_answer.empty()) {
            issues.push_back(turn_path(i, "scripted_answer") + ": must be nonempty");
        }

        bool verdicts_complete = true;
        std::array<bool, 4> yes{};
        for (std::size_t k = 0; k < order.kinds().size(); ++k) {
            auto it = turn.scripted_verdicts.find(order.kinds()[k]);
            if (it == turn.scripted_verdicts.end()) {
                issues.push_back(turn_path(i, "scripted_verdicts." +
                                                  std::string(to_string(order.kinds()[k]))) +
                                 ": missing");
                verdicts_complete = false;
            } else {
                yes[k] = it->second;
            }
        }
        if (verdicts_complete && order.argmax(yes) != turn.gold_subtask) {
            issues.push_back(turn_path(i, "scripted_verdicts") +
                             ": priority argmax does not select gold_subtask " +
                             std::string(to_string(turn.gold_subtask)));
        }
        auto letter_kind = kind_from_option_letter(turn.scripted_multichoice);
        if (!letter_kind) {
            issues.push_back(turn_path(i, "scripted_multichoice") +
                             ": not an option letter A-E");
        } else if (*letter_kind != turn.gold_subtask) {
            issues.push_back(turn_path(i, "scripted_multichoice") +
                             ": letter does not map to gold_subtask " +
                             std::string(to_string(turn.gold_subtask)));
        }

        if (turn.gold_subtask == SubTaskKind::QueryRewrite &&
            (!turn.scripted_retrieval || turn.scripted_retrieval->empty())) {
            issues.push_back(turn_path(i, "scripted_retrieval") +
                             ": required when gold_subtask is query_rewrite");
        }
        if (turn.gold_subtask != SubTaskKind::None &&
            (!turn.scripted_subtask_output || turn.scripted_subtask_output->empty())) {
            issues.push_back(turn_path(i, "scripted_subtask_output") +
                             ": required when gold_subtask is actionable");
        }
    }
    return issues;
}

namespace {

ConversationScript parse_script(const json& doc, std::vector<std::string>& issues) {
    ConversationScript script;
    if (!doc.is_object()) {
        issues.push_back("document: must be a JSON object");
        return script;
    }
    const int version = doc.value("version", 0);
    if (version != 1) {
        issues.push_back("version: expected 1, got " + std::to_string(version));
    }
    if (doc.contains("meta") && doc["meta"].is_object()) {
        const auto& meta = doc["meta"];
        script.meta.id = meta.value("id", "");
        script.meta.seed = meta.value("seed", std::uint64_t{0});
        script.meta.profile = meta.value("profile", "");
    }
    script.main_instruction = doc.value("main_instruction", "");
    script.multichoice_instruction = doc.value("multichoice_instruction", "");

    auto read_instruction_map = [&](const char* field,
                                    std::map<SubTaskKind, std::string>& out) {
        if (!doc.contains(field) || !doc[field].is_object()) {
            issues.push_back(std::string(field) + ": missing or not an object");
            return;
        }
        for (const auto& [key, value] : doc[field].items()) {
            auto kind = subtask_from_string(key);
            if (!kind || *kind == SubTaskKind::None) {
                issues.push_back(std::string(field) + "." + key + ": unknown sub-task kind");
                continue;
            }
            out[*kind] = value.is_string() ? value.get<std::string>() : "";
        }
    };
    read_instruction_map("subtask_instructions", script.subtask_instructions);
    read_instruction_map("classifier_instructions", script.classifier_instructions);

    if (!doc.contains("turns") || !doc["turns"].is_array()) {
        issues.push_back("turns: missing or not an array");
        return script;
    }
    std::size_t index = 0;
    for (const auto& turn_doc : doc["turns"]) {
        TurnSpec turn;
        if (!turn_doc.is_object()) {
            issues.push_back(turn_path(index, "") + ": must be an object");
            script.turns.push_back(std::move(turn));
            ++index;
            continue;
        }
        turn.query = turn_doc.value("query", "");
        turn.scripted_answer = turn_doc.value("scripted_answer", "");
        const std::string gold = turn_doc.value("gold_subtask", "");
        auto kind = subtask_from_string(gold);
        if (!kind) {
            issues.push_back(turn_path(index, "gold_subtask") + ": unknown kind '" +
                             gold + "'");
        } else {
            turn.gold_subtask = *kind;
        }
        if (turn_doc.contains("scripted_verdicts") && turn_doc["scripted_verdicts"].is_object()) {
            for (const auto& [key, value] : turn_doc["scripted_verdicts"].items()) {
                auto vkind = subtask_from_string(key);
                if (!vkind || *vkind == SubTaskKind::None) {
                    issues.push_back(turn_path(index, "scripted_verdicts." + key) +
                                     ": unknown sub-task kind");
                    continue;
                }
                turn.scripted_verdicts[*vkind] = value.is_boolean() && value.get<bool>();
            }
        }
        const std::string letter = turn_doc.value("scripted_multichoice", "");
        turn.scripted_multichoice = letter.size() == 1 ? letter[0] : '?';
        if (turn_doc.contains("scripted_reasoning")) {
            turn.scripted_reasoning = turn_doc.value("scripted_reasoning", "");
        }
        if (turn_doc.contains("scripted_subtask_output")) {
            turn.scripted_subtask_output = turn_doc.value("scripted_subtask_output", "");
        }
        if (turn_doc.contains("scripted_retrieval")) {
            turn.scripted_retrieval = turn_doc.value("scripted_retrieval", "");
        }
        script.turns.push_back(std::move(turn));
        ++index;
    }
    return script;
}

}  // namespace

ConversationScript script_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("malformed document: ") + e.what()});
    }
    std::vector<std::string> issues;
    ConversationScript script = parse_script(doc, issues);
    auto semantic = validate_script(script);
    issues.insert(issues.end(), semantic.begin(), semantic.end());
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    return script;
}

ConversationScript load_and_validate(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open script file: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return script_from_json_text(text);
}

std::string script_to_json_text(const ConversationScript& script) {
    ordered_json doc;
    doc["version"] = 1;
    doc["meta"] = {{"id", script.meta.id},
                   {"seed", script.meta.seed},
                   {"profile", script.meta.profile}};
    doc["main_instruction"] = script.main_instruction;
    ordered_json sub = ordered_json::object();
    ordered_json cls = ordered_json::object();
    for (SubTaskKind kind : kActionableKinds) {
        const std::string name(to_string(kind));
        auto sit = script.subtask_instructions.find(kind);
        if (sit != script.subtask_instructions.end()) {
            sub[name] = sit->second;
        }
        auto cit = script.classifier_instructions.find(kind);
        if (cit != script.classifier_instructions.end()) {
            cls[name] = cit->second;
        }
    }
    doc["subtask_instructions"] = std::move(sub);
    doc["classifier_instructions"] = std::move(cls);
    doc["multichoice_instruction"] = script.multichoice_instruction;
    doc["turns"] = ordered_json::array();
    for (const TurnSpec& turn : script.turns) {
        ordered_json t;
        t["query"] = turn.query;
        t["gold_subtask"] = std::string(to_string(turn.gold_subtask));
        ordered_json verdicts = ordered_json::object();
        for (SubTaskKind kind : kActionableKinds) {
            auto it = turn.scripted_verdicts.find(kind);
            verdicts[std::string(to_string(kind))] =
                it != turn.scripted_verdicts.end() && it->second;
        }
        t["scripted_verdicts"] = std::move(verdicts);
        t["scripted_multichoice"] = std::string(1, turn.scripted_multichoice);
        if (turn.scripted_reasoning) {
            t["scripted_reasoning"] = *turn.scripted_reasoning;
        }
        if (turn.scripted_subtask_output) {
            t["scripted_subtask_output"] = *turn.scripted_subtask_output;
        }
        if (turn.scripted_retrieval) {
            t["scripted_retrieval"] = *turn.scripted_retrieval;
        }
        t["scripted_answer"] = turn.scripted_answer;
        doc["turns"].push_back(std::move(t));
    }
    return doc.dump(2) + "\n";
}

void save_script(const ConversationScript& script, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write script file: " + path);
    }
    out << script_to_json_text(script);
}

ScriptedBehavior make_scripted_behavior(const ConversationScript& script) {
    ScriptedBehavior scripted;
    for (int t = 1; t <= script.turn_count(); ++t) {
        const TurnSpec& turn = script.turn(t);
        for (SubTaskKind kind : kActionableKinds) {
            auto it = turn.scripted_verdicts.find(kind);
            const bool yes = it != turn.scripted_verdicts.end() && it->second;
            scripted.set(t, stage_key::classifier(kind), yes ? "Yes" : "No");
        }
        scripted.set(t, stage_key::kMultichoice,
                     "(" + std::string(1, turn.scripted_multichoice) + ")");
        if (turn.scripted_reasoning) {
            scripted.set(t, stage_key::kSubtaskReasoning, *turn.scripted_reasoning);
        }
        if (turn.scripted_subtask_output) {
            scripted.set(t, stage_key::kSubtaskOutput, *turn.scripted_subtask_output);
        }
        scripted.set(t, stage_key::kMainAnswer, turn.scripted_answer);
    }
    return scripted;
}

void warm_tokenizer(const ConversationScript& script, const Tokenizer& tokenizer) {
    auto warm = [&](const std::string& text) { (void)tokenizer.tokenize(text); };
    warm(script.main_instruction);
    for (SubTaskKind kind : kActionableKinds) {
        auto cit = script.classifier_instructions.find(kind);
        if (cit != script.classifier_instructions.end()) {
            warm(cit->second);
        }
        auto sit = script.subtask_instructions.find(kind);
        if (sit != script.subtask_instructions.end()) {
            warm(sit->second);
        }
    }
    warm(script.multichoice_instruction);
    warm("Yes");
    warm("No");
    for (const TurnSpec& turn : script.turns) {
        warm(turn.query);
        if (turn.scripted_reasoning) warm(*turn.scripted_reasoning);
        if (turn.scripted_subtask_output) warm(*turn.scripted_subtask_output);
        if (turn.scripted_retrieval) warm(*turn.scripted_retrieval);
        warm(turn.scripted_answer);
        warm("(" + std::string(1, turn.scripted_multichoice) + ")");
    }
}

}  // namespace ciflex
