#include "ciflex/synthetic.hpp"

#include "ciflex/errors.hpp"
#include "ciflex/templates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace ciflex {

namespace {

const std::array<std::string_view, 64> kFillerWords = {
    "amber",  "basin",  "cedar",  "delta",  "ember",  "fjord",  "grove",  "harbor",
    "inlet",  "jetty",  "knoll",  "ledge",  "marsh",  "north",  "ocean",  "prairie",
    "quarry", "ridge",  "summit", "thicket","upland", "valley", "willow", "expanse",
    "yonder", "zenith", "arch",   "bluff",  "creek",  "dune",   "eddy",   "flume",
    "glen",   "heath",  "isle",   "jungle", "kelp",   "lagoon", "mesa",   "nook",
    "oasis",  "pond",   "quay",   "reef",   "shoal",  "tarn",   "undertow","vista",
    "wharf",  "xeric",  "yard",   "zephyr", "atoll",  "brook",  "cliff",  "drift",
    "estuary","fen",    "gorge",  "hollow", "icefield","juniper","karst",  "loch",
};

int sample_length(const LengthRange& range, std::mt19937_64& rng) {
    if (range.max <= range.min) {
        return range.min;
    }
    return range.min + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                            range.max - range.min + 1));
}

std::string filler_text(int words, std::mt19937_64& rng) {
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += kFillerWords[rng() % kFillerWords.size()];
    }
    return out;
}

template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[rng() % i]);
    }
}

// Largest-remainder apportionment of turn_count across the mix, with a
// fixed kind order for tie-breaking.
std::map<SubTaskKind, int> apportion(const std::map<SubTaskKind, double>& mix,
                                     int turn_count) {
    const std::array<SubTaskKind, 5> order = {SubTaskKind::ApiCall, SubTaskKind::Math,
                                              SubTaskKind::QueryRewrite,
                                              SubTaskKind::ChatSummary, SubTaskKind::None};
    std::map<SubTaskKind, int> counts;
    std::vector<std::pair<double, SubTaskKind>> remainders;
    int assigned = 0;
    for (SubTaskKind kind : order) {
        auto it = mix.find(kind);
        const double share = it == mix.end() ? 0.0 : it->second * turn_count;
        const int base = static_cast<int>(std::floor(share));
        counts[kind] = base;
        assigned += base;
        remainders.push_back({share - base, kind});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; assigned < turn_count; ++i) {
        counts[remainders[static_cast<std::size_t>(i) % remainders.size()].second] += 1;
        ++assigned;
    }
    return counts;
}

void check_range(std::vector<std::string>& issues, const char* name,
                 const LengthRange& range, int floor_min) {
    if (range.min < floor_min) {
        issues.push_back(std::string(name) + ": min must be >= " +
                         std::to_string(floor_min));
    }
    if (range.max < range.min) {
        issues.push_back(std::string(name) + ": max must be >= min");
    }
}

}  // namespace

void SyntheticProfile::validate() const {
    std::vector<std::string> issues;
    if (turn_count < 1) {
        issues.push_back("turn_count: must be >= 1");
    }
    double total = 0.0;
    for (const auto& [kind, ratio] : mix) {
        (void)kind;
        if (ratio < 0.0) {
            issues.push_back("mix: ratios must be non-negative");
        }
        total += ratio;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        issues.push_back("mix: ratios must sum to 1, got " + std::to_string(total));
    }
    check_range(issues, "query_len", query_len, 1);
    check_range(issues, "answer_len", answer_len, 1);
    check_range(issues, "passage_len", passage_len, 1);
    check_range(issues, "reasoning_len", reasoning_len, 0);
    check_range(issues, "rewrite_output_len", rewrite_output_len, 1);
    check_range(issues, "task_output_len", task_output_len, 1);
    check_range(issues, "summary_output_len", summary_output_len, 1);
    check_range(issues, "instruction_len", instruction_len, 0);
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    const auto counts = apportion(mix, turn_count);
    const int summaries = counts.at(SubTaskKind::ChatSummary);
    const int casuals = counts.at(SubTaskKind::None);
    if (summaries > casuals) {
        throw ProfileError("infeasible mix: " + std::to_string(summaries) +
                           " chat_summary turns need at least as many preceding "
                           "casual turns, have " + std::to_string(casuals));
    }
}

SyntheticProfile paper_like_22_profile() {
    SyntheticProfile profile;
    profile.name = "paper-like-22";
    profile.turn_count = 22;
    profile.seed = 1;
    profile.mix = {
        {SubTaskKind::QueryRewrite, 9.0 / 22.0},
        {SubTaskKind::Math, 4.0 / 22.0},
        {SubTaskKind::ApiCall, 3.0 / 22.0},
        {SubTaskKind::None, 5.0 / 22.0},
        {SubTaskKind::ChatSummary, 1.0 / 22.0},
    };
    // Token lengths calibrated with the counting oracle so that full re-load
    // total prefill dwarfs task-level reuse and its prefill/generation ratio
    // at turn 20 sits in the low hundreds.
    profile.query_len = {22, 28};
    profile.answer_len = {430, 456};
    profile.passage_len = {4200, 4380};
    profile.reasoning_len = {55, 65};
    profile.rewrite_output_len = {16, 20};
    profile.task_output_len = {8, 12};
    profile.summary_output_len = {28, 32};
    return profile;
}

SyntheticProfile minimal_profile() {
    SyntheticProfile profile;
    profile.name = "minimal";
    profile.turn_count = 1;
    profile.seed = 1;
    profile.mix = {{SubTaskKind::None, 1.0}};
    profile.query_len = {4, 6};
    profile.answer_len = {6, 10};
    return profile;
}

std::optional<SyntheticProfile> builtin_profile(const std::string& name) {
    if (name == "paper-like-22") return paper_like_22_profile();
    if (name == "minimal") return minimal_profile();
    return std::nullopt;
}

SyntheticProfile SyntheticProfile::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("profile: cannot open " + path);
    }
    SyntheticProfile profile;
    profile.mix.clear();
    std::string line;
    int lineno = 0;
    auto parse_range = [&](const std::string& value) -> LengthRange {
        auto dots = value.find("..");
        if (dots == std::string::npos) {
            const int n = std::stoi(value);
            return {n, n};
        }
        return {std::stoi(value.substr(0, dots)), std::stoi(value.substr(dots + 2))};
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        std::string key, eq, value;
        if (!(fields >> key)) {
            continue;
        }
        fields >> eq;
        if (eq == "=") {
            fields >> value;
        } else {
            value = eq;
        }
        if (value.empty()) {
            throw ValidationError({path + ":" + std::to_string(lineno) +
                                   ": missing value for " + key});
        }
        try {
            if (key == "name") profile.name = value;
            else if (key == "turn_count") profile.turn_count = std::stoi(value);
            else if (key == "seed") profile.seed = std::stoull(value);
            else if (key.rfind("mix.", 0) == 0) {
                auto kind = subtask_from_string(key.substr(4));
                if (!kind) {
                    throw ValidationError({path + ": unknown mix kind " + key.substr(4)});
                }
                profile.mix[*kind] = std::stod(value);
            } else if (key == "query_len") profile.query_len = parse_range(value);
            else if (key == "answer_len") profile.answer_len = parse_range(value);
            else if (key == "passage_len") profile.passage_len = parse_range(value);
            else if (key == "reasoning_len") profile.reasoning_len = parse_range(value);
            else if (key == "rewrite_output_len") profile.rewrite_output_len = parse_range(value);
            else if (key == "task_output_len") profile.task_output_len = parse_range(value);
            else if (key == "summary_output_len") profile.summary_output_len = parse_range(value);
            else if (key == "instruction_len") profile.instruction_len = parse_range(value);
            else throw ValidationError({path + ": unknown key " + key});
        } catch (const std::invalid_argument&) {
            throw ValidationError({path + ": bad value for " + key + ": " + value});
        }
    }
    profile.validate();
    return profile;
}

ConversationScript generate_synthetic(const SyntheticProfile& profile) {
    profile.validate();
    std::mt19937_64 rng(profile.seed);
    const auto counts = apportion(profile.mix, profile.turn_count);

    // Task-oriented turns first (conversational search opens the session,
    // API turns never lead), then runs of casual chat, each closed by a
    // summary turn when the mix asks for one.
    std::vector<SubTaskKind> tasks;
    tasks.insert(tasks.end(), counts.at(SubTaskKind::QueryRewrite), SubTaskKind::QueryRewrite);
    tasks.insert(tasks.end(), counts.at(SubTaskKind::Math), SubTaskKind::Math);
    tasks.insert(tasks.end(), counts.at(SubTaskKind::ApiCall), SubTaskKind::ApiCall);
    fisher_yates(tasks, rng);
    auto first_of = [&](SubTaskKind kind) {
        return std::find(tasks.begin(), tasks.end(), kind);
    };
    if (auto it = first_of(SubTaskKind::QueryRewrite); it != tasks.end()) {
        std::iter_swap(tasks.begin(), it);
    }
    for (std::size_t i = 0; i < tasks.size() && i < 2; ++i) {
        if (tasks[i] == SubTaskKind::ApiCall) {
            for (std::size_t j = 2; j < tasks.size(); ++j) {
                if (tasks[j] != SubTaskKind::ApiCall) {
                    std::swap(tasks[i], tasks[j]);
                    break;
                }
            }
        }
    }

    std::vector<SubTaskKind> sequence = tasks;
    const int summaries = counts.at(SubTaskKind::ChatSummary);
    const int casuals = counts.at(SubTaskKind::None);
    if (summaries == 0) {
        sequence.insert(sequence.end(), casuals, SubTaskKind::None);
    } else {
        int remaining = casuals;
        for (int s = 0; s < summaries; ++s) {
            const int run = (remaining + (summaries - s) - 1) / (summaries - s);
            sequence.insert(sequence.end(), run, SubTaskKind::None);
            sequence.push_back(SubTaskKind::ChatSummary);
            remaining -= run;
        }
    }

    ConversationScript script;
    script.meta.id = profile.name + "-seed" + std::to_string(profile.seed);
    script.meta.seed = profile.seed;
    script.meta.profile = profile.name;

    const bool filler_instructions = profile.instruction_len.max > 0;
    if (filler_instructions) {
        script.main_instruction = filler_text(sample_length(profile.instruction_len, rng), rng);
        for (SubTaskKind kind : kActionableKinds) {
            script.classifier_instructions[kind] =
                filler_text(sample_length(profile.instruction_len, rng), rng);
            script.subtask_instructions[kind] =
                filler_text(sample_length(profile.instruction_len, rng), rng);
        }
        script.multichoice_instruction =
            filler_text(sample_length(profile.instruction_len, rng), rng);
    } else {
        script.main_instruction = default_main_instruction();
        for (SubTaskKind kind : kActionableKinds) {
            script.classifier_instructions[kind] = default_classifier_instruction(kind);
            script.subtask_instructions[kind] = default_subtask_instruction(kind);
        }
        script.multichoice_instruction = default_multichoice_instruction();
    }

    for (SubTaskKind gold : sequence) {
        TurnSpec turn;
        turn.gold_subtask = gold;
        turn.query = filler_text(sample_length(profile.query_len, rng), rng);
        for (SubTaskKind kind : kActionableKinds) {
            turn.scripted_verdicts[kind] = (kind == gold);
        }
        turn.scripted_multichoice = option_letter(gold);
        switch (gold) {
            case SubTaskKind::QueryRewrite:
                turn.scripted_subtask_output =
                    filler_text(sample_length(profile.rewrite_output_len, rng), rng);
                turn.scripted_retrieval =
                    filler_text(sample_length(profile.passage_len, rng), rng);
                break;
            case SubTaskKind::Math:
                turn.scripted_reasoning =
                    filler_text(sample_length(profile.reasoning_len, rng), rng);
                turn.scripted_subtask_output =
                    filler_text(sample_length(profile.task_output_len, rng), rng);
                break;
            case SubTaskKind::ApiCall:
                turn.scripted_subtask_output =
                    filler_text(sample_length(profile.task_output_len, rng), rng);
                break;
            case SubTaskKind::ChatSummary:
                turn.scripted_subtask_output =
                    filler_text(sample_length(profile.summary_output_len, rng), rng);
                break;
            case SubTaskKind::None:
                break;
        }
        turn.scripted_answer = filler_text(sample_length(profile.answer_len, rng), rng);
        script.turns.push_back(std::move(turn));
    }

    auto issues = validate_script(script);
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    return script;
}

}  // namespace ciflex
