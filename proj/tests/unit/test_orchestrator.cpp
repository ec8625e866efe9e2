#include <doctest.h>

#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/orchestrator.hpp"
#include "ciflex/synthetic.hpp"
#include "ciflex/toy_transformer.hpp"

using namespace ciflex;

namespace {

SyntheticProfile mixed_profile(int turns, std::uint64_t seed) {
    SyntheticProfile profile;
    profile.name = "mixed";
    profile.turn_count = turns;
    profile.seed = seed;
    profile.mix = {
        {SubTaskKind::ApiCall, 0.1},      {SubTaskKind::Math, 0.2},
        {SubTaskKind::QueryRewrite, 0.3}, {SubTaskKind::ChatSummary, 0.1},
        {SubTaskKind::None, 0.3},
    };
    return profile;
}

std::vector<std::string> transcript_answers(const SessionReport& report) {
    std::vector<std::string> answers;
    for (const TurnRecord& record : report.transcript) {
        answers.push_back(std::to_string(record.turn) + "|" +
                          std::string(to_string(record.selected_subtask)) + "|" +
                          record.answer);
    }
    return answers;
}

}  // namespace

TEST_CASE("a one-turn casual script yields a single none record") {
    const ConversationScript script = generate_synthetic(minimal_profile());
    CountingBackend backend;
    StrategyConfig config;
    const SessionReport report = run_conversation(script, config, backend);
    REQUIRE(report.transcript.size() == 1);
    CHECK(report.transcript[0].selected_subtask == SubTaskKind::None);
    CHECK(report.transcript[0].answer == script.turn(1).scripted_answer);
    CHECK(report.metrics[0].classifier_calls == 4);
    CHECK(report.metrics[0].at(Stage::TurnUpdate).prefill == 0);
}

TEST_CASE("a math turn retains only the final output in the main cache") {
    SyntheticProfile profile;
    profile.turn_count = 2;
    profile.seed = 12;
    profile.mix = {{SubTaskKind::Math, 0.5}, {SubTaskKind::None, 0.5}};
    const ConversationScript script = generate_synthetic(profile);
    REQUIRE(script.turn(1).gold_subtask == SubTaskKind::Math);

    CountingBackend backend;
    StrategyConfig config;
    Session session(script, config, backend);
    const TurnRecord record = session.run_turn();
    CHECK(record.selected_subtask == SubTaskKind::Math);
    CHECK(record.subtask_output == script.turn(1).scripted_subtask_output);

    const Tokenizer& tok = backend.tokenizer();
    const std::size_t expected =
        tok.count(script.main_instruction) + tok.count(script.turn(1).query) +
        tok.count(*script.turn(1).scripted_subtask_output) +
        tok.count(script.turn(1).scripted_answer) + tok.count(script.turn(2).query);
    CHECK(static_cast<std::size_t>(session.main_cache().logical_length()) == expected);
    for (const auto& segment : session.main_cache().segments()) {
        CHECK(segment->role != SegmentRole::SubtaskReasoning);
        CHECK(segment->role != SegmentRole::SubtaskInstruction);
        CHECK(segment->role != SegmentRole::ClassifierInstruction);
        CHECK(segment->role != SegmentRole::ClassifierOutput);
    }
}

TEST_CASE("turn-update prefill equals the next query length across a run") {
    const ConversationScript script = generate_synthetic(mixed_profile(10, 14));
    CountingBackend backend;
    StrategyConfig config;
    const SessionReport report = run_conversation(script, config, backend);
    const Tokenizer& tok = backend.tokenizer();
    for (int t = 1; t <= 10; ++t) {
        const std::size_t expected =
            t < 10 ? tok.count(script.turn(t + 1).query) : 0;
        CHECK(report.metrics[static_cast<std::size_t>(t - 1)]
                  .at(Stage::TurnUpdate)
                  .prefill == expected);
    }
}

TEST_CASE("rewrite turns prefill the scripted passage before answering") {
    SyntheticProfile profile;
    profile.turn_count = 1;
    profile.seed = 16;
    profile.mix = {{SubTaskKind::QueryRewrite, 1.0}};
    const ConversationScript script = generate_synthetic(profile);
    CountingBackend backend;
    StrategyConfig config;
    const SessionReport report = run_conversation(script, config, backend);
    const TurnRecord& record = report.transcript[0];
    CHECK(record.retrieval == script.turn(1).scripted_retrieval);
    CHECK(report.metrics[0].at(Stage::MainAnswer).prefill ==
          backend.tokenizer().count(*script.turn(1).scripted_retrieval));
    CHECK(report.final_cache_role_tokens.count("retrieval-context") == 1);
}

TEST_CASE("summary turns feed the summary sink, not the cache") {
    SyntheticProfile profile;
    profile.turn_count = 3;
    profile.seed = 18;
    profile.mix = {{SubTaskKind::None, 2.0 / 3.0}, {SubTaskKind::ChatSummary, 1.0 / 3.0}};
    const ConversationScript script = generate_synthetic(profile);
    CountingBackend backend;
    StrategyConfig config;
    const SessionReport report = run_conversation(script, config, backend);
    REQUIRE(report.summaries.size() == 1);
    CHECK(report.summaries[0].turn == 3);
    CHECK(report.summaries[0].text == *script.turn(3).scripted_subtask_output);
    CHECK(report.final_cache_role_tokens.count("subtask-output") == 0);
}

TEST_CASE("every strategy produces the same transcript") {
    const ConversationScript script = generate_synthetic(mixed_profile(8, 20));
    std::vector<std::vector<std::string>> all_answers;
    for (Strategy strategy : {Strategy::Ciflex, Strategy::FullReload,
                              Strategy::RecentReload, Strategy::Seamless}) {
        StrategyConfig config;
        config.strategy = strategy;
        CountingBackend backend;
        all_answers.push_back(
            transcript_answers(run_conversation(script, config, backend)));
    }
    for (std::size_t i = 1; i < all_answers.size(); ++i) {
        CHECK(all_answers[i] == all_answers[0]);
    }
}

TEST_CASE("reports are byte-identical across runs") {
    const ConversationScript script = generate_synthetic(mixed_profile(6, 22));
    StrategyConfig config;
    config.strategy = Strategy::Ciflex;
    config.classification_mode = ClassificationMode::Batched;
    std::string first, second;
    {
        CountingBackend backend;
        first = report_to_json_text(run_conversation(script, config, backend));
    }
    {
        CountingBackend backend;
        second = report_to_json_text(run_conversation(script, config, backend));
    }
    CHECK(first == second);
}

TEST_CASE("seamless reuses the cache but keeps every side token inline") {
    const ConversationScript script = generate_synthetic(mixed_profile(8, 24));
    StrategyConfig ciflex_config;
    StrategyConfig seamless_config;
    seamless_config.strategy = Strategy::Seamless;

    CountingBackend ciflex_backend;
    const SessionReport ciflex_report =
        run_conversation(script, ciflex_config, ciflex_backend);
    CountingBackend seamless_backend;
    const SessionReport seamless_report =
        run_conversation(script, seamless_config, seamless_backend);

    CHECK(seamless_report.final_cache_length > ciflex_report.final_cache_length);
    CHECK(seamless_report.final_cache_role_tokens.at("classifier-instruction") > 0);
    CHECK(seamless_report.final_cache_role_tokens.at("classifier-output") > 0);

    // No history re-prefill: per-turn prefill is bounded by instruction,
    // retrieval, and query lengths, never by the growing history.
    const RunCosts oracle = oracle_counts(script, seamless_config,
                                          seamless_backend.tokenizer());
    CHECK(assert_engine_matches_oracle(seamless_report.counts(), oracle).ok);
}

TEST_CASE("seamless rejects batched classification") {
    StrategyConfig config;
    config.strategy = Strategy::Seamless;
    config.classification_mode = ClassificationMode::Batched;
    CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_CASE("ciflex recompute retention re-prefills retained outputs") {
    SyntheticProfile profile;
    profile.turn_count = 1;
    profile.seed = 26;
    profile.mix = {{SubTaskKind::Math, 1.0}};
    const ConversationScript script = generate_synthetic(profile);

    StrategyConfig preserve;
    StrategyConfig recompute;
    recompute.retention_mode = RetentionMode::Recompute;
    CountingBackend backend_a, backend_b;
    const SessionReport preserved = run_conversation(script, preserve, backend_a);
    const SessionReport recomputed = run_conversation(script, recompute, backend_b);
    const std::size_t output_tokens =
        backend_a.tokenizer().count(*script.turn(1).scripted_subtask_output);
    CHECK(recomputed.metrics[0].at(Stage::Subtask).prefill ==
          preserved.metrics[0].at(Stage::Subtask).prefill + output_tokens);
    CHECK(preserved.final_cache_length == recomputed.final_cache_length);
}

TEST_CASE("full and recent re-load match the oracle on a mixed script") {
    const ConversationScript script = generate_synthetic(mixed_profile(9, 28));
    for (Strategy strategy : {Strategy::FullReload, Strategy::RecentReload}) {
        for (ClassificationMode mode :
             {ClassificationMode::Hierarchical, ClassificationMode::Multichoice}) {
            StrategyConfig config;
            config.strategy = strategy;
            config.classification_mode = mode;
            config.recent_window = 3;
            CountingBackend backend;
            const SessionReport report = run_conversation(script, config, backend);
            const RunCosts oracle = oracle_counts(script, config, backend.tokenizer());
            const MatchVerdict verdict =
                assert_engine_matches_oracle(report.counts(), oracle);
            INFO(config.label(), ": ", verdict.divergence);
            CHECK(verdict.ok);
        }
    }
}

TEST_CASE("recent re-load windows shrink the reconstructed context") {
    const ConversationScript script = generate_synthetic(mixed_profile(9, 30));
    StrategyConfig config;
    config.strategy = Strategy::RecentReload;
    config.recent_window = 5;
    CountingBackend backend;
    const SessionReport report = run_conversation(script, config, backend);
    for (const TurnRecord& record : report.transcript) {
        CHECK(record.reload_context_turns == std::min(record.turn - 1, 5));
    }
}

TEST_CASE("a scripted session runs on the toy backend with exact accounting") {
    SyntheticProfile profile;
    profile.turn_count = 2;
    profile.seed = 32;
    profile.mix = {{SubTaskKind::Math, 0.5}, {SubTaskKind::None, 0.5}};
    profile.query_len = {2, 4};
    profile.answer_len = {3, 5};
    profile.reasoning_len = {3, 6};
    profile.task_output_len = {2, 3};
    profile.instruction_len = {3, 6};
    const ConversationScript script = generate_synthetic(profile);

    ToyBackend backend(ToyTransformerConfig{});
    StrategyConfig config;
    const SessionReport report = run_conversation(script, config, backend);
    CHECK(report.transcript[0].answer == script.turn(1).scripted_answer);
    const RunCosts oracle = oracle_counts(script, config, backend.tokenizer());
    const MatchVerdict verdict = assert_engine_matches_oracle(report.counts(), oracle);
    INFO(verdict.divergence);
    CHECK(verdict.ok);
    CHECK(report.backend_name == "toy");
}

TEST_CASE("the byte tokenizer accounts exactly too") {
    const ConversationScript script = generate_synthetic(mixed_profile(5, 36));
    StrategyConfig config;
    config.strategy = Strategy::FullReload;
    CountingBackend backend(TokenizerKind::Byte);
    const SessionReport report = run_conversation(script, config, backend);
    const RunCosts oracle = oracle_counts(script, config, backend.tokenizer());
    const MatchVerdict verdict = assert_engine_matches_oracle(report.counts(), oracle);
    INFO(verdict.divergence);
    CHECK(verdict.ok);
}

TEST_CASE("comparison tables cover every turn and strategy") {
    const ConversationScript script = generate_synthetic(mixed_profile(5, 34));
    const auto factory = []() { return std::make_unique<CountingBackend>(); };
    StrategyConfig ciflex_config;
    StrategyConfig full_config;
    full_config.strategy = Strategy::FullReload;

    const ComparisonTable table =
        compare_strategies(script, {ciflex_config, full_config}, factory);
    REQUIRE(table.reports.size() == 2);
    CHECK(table.labels[0] == "ciflex/hierarchical");
    CHECK(table.labels[1] == "full_reload/hierarchical");
    CHECK(table.final_cumulative_prefill(1) > table.final_cumulative_prefill(0));

    const std::string csv = table.to_csv();
    const std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
    // header + bootstrap row + 4 stages x 5 turns x 2 strategies
    CHECK(rows == 1 + 1 + 4 * 5 * 2);
    CHECK(csv.rfind("turn,strategy,stage,prefill,generated,cum_prefill,cum_generated\n",
                    0) == 0);

    CHECK(compare_strategies(script, {ciflex_config, full_config}, factory).to_csv() ==
          csv);
    CHECK_THROWS_AS(compare_strategies(script, {ciflex_config}, factory),
                    PreconditionError);
}

TEST_CASE("validation failures surface before any execution") {
    ConversationScript script = generate_synthetic(minimal_profile());
    script.turns[0].scripted_answer.clear();
    CountingBackend backend;
    StrategyConfig config;
    CHECK_THROWS_AS(run_conversation(script, config, backend), ValidationError);
    CHECK(backend.ledger().prefill_tokens() == 0);
}

TEST_CASE("turns past the end are rejected") {
    const ConversationScript script = generate_synthetic(minimal_profile());
    CountingBackend backend;
    Session session(script, StrategyConfig{}, backend);
    session.run_turn();
    CHECK(session.done());
    CHECK_THROWS_AS(session.run_turn(), PreconditionError);
}
