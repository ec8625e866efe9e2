#include "ciflex/oracle.hpp"

#include "ciflex/errors.hpp"

namespace ciflex {

namespace {

// Replays the routing decision from scripted data alone.
SubTaskKind replay_selection(const TurnSpec& turn, ClassificationMode mode,
                             const PriorityOrder& order) {
    if (mode == ClassificationMode::Multichoice) {
        auto kind = kind_from_option_letter(turn.scripted_multichoice);
        if (!kind) {
            throw ValidationError({"scripted_multichoice: not an option letter"});
        }
        return *kind;
    }
    std::array<bool, 4> yes{};
    for (std::size_t i = 0; i < order.kinds().size(); ++i) {
        auto it = turn.scripted_verdicts.find(order.kinds()[i]);
        yes[i] = it != turn.scripted_verdicts.end() && it->second;
    }
    return order.argmax(yes);
}

}  // namespace

RunCosts oracle_counts(const ConversationScript& script, const StrategyConfig& config,
                       const Tokenizer& tokenizer, const PriorityOrder& order) {
    config.validate();
    const auto count = [&](const std::string& text) { return tokenizer.count(text); };
    const ClassificationMode mode = config.resolved_classification_mode();
    const Strategy strategy = config.strategy;
    const bool reload =
        strategy == Strategy::FullReload || strategy == Strategy::RecentReload;
    const int total_turns = script.turn_count();

    // Routing decisions for every turn up front; history reconstruction
    // needs to know which prior turns carried retrieval.
    std::vector<SubTaskKind> selected(static_cast<std::size_t>(total_turns));
    for (int t = 1; t <= total_turns; ++t) {
        selected[static_cast<std::size_t>(t - 1)] =
            replay_selection(script.turn(t), mode, order);
    }
    const auto retrieval_used = [&](int t) {
        return selected[static_cast<std::size_t>(t - 1)] == SubTaskKind::QueryRewrite;
    };

    // Tokens a reload strategy re-prefills before any stage instruction at
    // turn t: main instruction, the visible window of (q, r, a) history, and
    // the current query.
    const auto context_tokens = [&](int t) -> std::size_t {
        std::size_t total = count(script.main_instruction);
        int first = 1;
        if (strategy == Strategy::RecentReload) {
            first = std::max(1, t - config.recent_window);
        }
        for (int past = first; past < t; ++past) {
            const TurnSpec& prior = script.turn(past);
            total += count(prior.query);
            if (retrieval_used(past) && prior.scripted_retrieval) {
                total += count(*prior.scripted_retrieval);
            }
            total += count(prior.scripted_answer);
        }
        total += count(script.turn(t).query);
        return total;
    };

    RunCosts costs;
    if (!reload) {
        costs.bootstrap_prefill =
            count(script.main_instruction) + count(script.turn(1).query);
    }

    for (int t = 1; t <= total_turns; ++t) {
        const TurnSpec& turn = script.turn(t);
        const SubTaskKind kind = selected[static_cast<std::size_t>(t - 1)];
        TurnMetrics m;
        m.turn = t;
        m.classification_batched = mode == ClassificationMode::Batched;

        if (mode == ClassificationMode::Multichoice) {
            StageCost call;
            call.prefill = count(script.multichoice_instruction);
            if (reload) {
                call.prefill += context_tokens(t);
            }
            call.generated =
                count("(" + std::string(1, turn.scripted_multichoice) + ")");
            m.classifier_costs.push_back(call);
            m.classifier_calls = 1;
        } else {
            for (SubTaskKind classifier : order.kinds()) {
                auto vit = turn.scripted_verdicts.find(classifier);
                const bool yes = vit != turn.scripted_verdicts.end() && vit->second;
                StageCost call;
                call.prefill = count(script.classifier_instructions.at(classifier));
                if (reload) {
                    call.prefill += context_tokens(t);
                }
                call.generated = count(yes ? "Yes" : "No");
                m.classifier_costs.push_back(call);
                ++m.classifier_calls;
                if (yes && mode == ClassificationMode::Hierarchical) {
                    break;
                }
            }
        }
        for (const StageCost& call : m.classifier_costs) {
            m.at(Stage::Classification).prefill += call.prefill;
            m.at(Stage::Classification).generated += call.generated;
        }

        if (kind != SubTaskKind::None) {
            StageCost& sub = m.at(Stage::Subtask);
            sub.prefill = count(script.subtask_instructions.at(kind));
            if (reload) {
                sub.prefill += context_tokens(t);
            }
            if (turn.scripted_reasoning) {
                sub.generated += count(*turn.scripted_reasoning);
            }
            const std::string output = turn.scripted_subtask_output.value_or("");
            sub.generated += count(output);
            const bool retained =
                kind == SubTaskKind::Math || kind == SubTaskKind::ApiCall;
            if (strategy == Strategy::Ciflex && retained &&
                config.retention_mode == RetentionMode::Recompute) {
                sub.prefill += count(output);
            }
        }

        StageCost& main = m.at(Stage::MainAnswer);
        if (reload) {
            main.prefill += context_tokens(t);
            if ((kind == SubTaskKind::Math || kind == SubTaskKind::ApiCall) &&
                turn.scripted_subtask_output) {
                main.prefill += count(*turn.scripted_subtask_output);
            }
        }
        if (kind == SubTaskKind::QueryRewrite && turn.scripted_retrieval) {
            main.prefill += count(*turn.scripted_retrieval);
        }
        main.generated = count(turn.scripted_answer);

        if (!reload && t < total_turns) {
            m.at(Stage::TurnUpdate).prefill = count(script.turn(t + 1).query);
        }

        costs.turns.push_back(std::move(m));
    }
    return costs;
}

namespace {

std::string describe(int turn, const std::string& what, std::size_t engine,
                     std::size_t oracle) {
    return "turn " + std::to_string(turn) + " " + what +
           ": engine=" + std::to_string(engine) + " oracle=" + std::to_string(oracle);
}

}  // namespace

MatchVerdict assert_engine_matches_oracle(const RunCosts& engine, const RunCosts& oracle) {
    MatchVerdict verdict;
    if (engine.bootstrap_prefill != oracle.bootstrap_prefill) {
        verdict.ok = false;
        verdict.divergence = describe(0, "bootstrap prefill", engine.bootstrap_prefill,
                                      oracle.bootstrap_prefill);
        return verdict;
    }
    if (engine.turns.size() != oracle.turns.size()) {
        verdict.ok = false;
        verdict.divergence =
            describe(0, "turn count", engine.turns.size(), oracle.turns.size());
        return verdict;
    }
    for (std::size_t i = 0; i < engine.turns.size(); ++i) {
        const TurnMetrics& e = engine.turns[i];
        const TurnMetrics& o = oracle.turns[i];
        const int turn = o.turn;
        for (Stage stage : kStages) {
            const std::string name = "stage " + std::string(to_string(stage));
            if (e.at(stage).prefill != o.at(stage).prefill) {
                verdict.ok = false;
                verdict.divergence = describe(turn, name + " prefill",
                                              e.at(stage).prefill, o.at(stage).prefill);
                return verdict;
            }
            if (e.at(stage).generated != o.at(stage).generated) {
                verdict.ok = false;
                verdict.divergence = describe(turn, name + " generated",
                                              e.at(stage).generated, o.at(stage).generated);
                return verdict;
            }
        }
        if (e.classifier_calls != o.classifier_calls) {
            verdict.ok = false;
            verdict.divergence = describe(turn, "classifier calls",
                                          static_cast<std::size_t>(e.classifier_calls),
                                          static_cast<std::size_t>(o.classifier_calls));
            return verdict;
        }
        if (e.classification_batched != o.classification_batched) {
            verdict.ok = false;
            verdict.divergence = describe(turn, "batched flag", e.classification_batched,
                                          o.classification_batched);
            return verdict;
        }
        if (e.classifier_costs.size() != o.classifier_costs.size()) {
            verdict.ok = false;
            verdict.divergence = describe(turn, "classifier cost entries",
                                          e.classifier_costs.size(),
                                          o.classifier_costs.size());
            return verdict;
        }
        for (std::size_t c = 0; c < e.classifier_costs.size(); ++c) {
            if (e.classifier_costs[c] != o.classifier_costs[c]) {
                verdict.ok = false;
                verdict.divergence =
                    describe(turn, "classifier " + std::to_string(c) + " cost",
                             e.classifier_costs[c].prefill + e.classifier_costs[c].generated,
                             o.classifier_costs[c].prefill + o.classifier_costs[c].generated);
                return verdict;
            }
        }
    }
    return verdict;
}

}  // namespace ciflex
