#include "ciflex/verify.hpp"

#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/orchestrator.hpp"
#include "ciflex/synthetic.hpp"
#include "ciflex/templates.hpp"
#include "ciflex/toy_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ciflex {

namespace {

std::vector<TokenId> random_bytes(std::mt19937_64& rng, int n) {
    std::vector<TokenId> tokens(static_cast<std::size_t>(n));
    for (auto& t : tokens) {
        t = static_cast<TokenId>(rng() % 256);
    }
    return tokens;
}

// Deep value snapshot of a checkpoint, immune to pointer sharing.
std::vector<Segment> snapshot_segments(const Checkpoint& cp) {
    std::vector<Segment> out;
    for (const auto& segment : cp.segments()) {
        out.push_back(*segment);
    }
    return out;
}

bool checkpoint_matches_snapshot(const Checkpoint& cp,
                                 const std::vector<Segment>& snapshot) {
    if (cp.segments().size() != snapshot.size()) {
        return false;
    }
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        if (!segments_equal(*cp.segments()[i], snapshot[i])) {
            return false;
        }
    }
    return true;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) {
        return 1e30;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
    }
    return worst;
}

// Builds a small random main path ending in a turn-query and checkpoints it.
Checkpoint random_checkpoint(ToyBackend& backend, KvCache& cache,
                             std::mt19937_64& rng, int max_context) {
    const int instruction_len = 2 + static_cast<int>(rng() % 16);
    const int query_len = 1 + static_cast<int>(rng() % 8);
    int body_len = max_context - instruction_len - query_len;
    if (body_len < 0) {
        body_len = 0;
    }
    SegmentDraft main_instruction{SegmentRole::MainInstruction,
                                  random_bytes(rng, instruction_len), 0};
    backend.prefill(cache, main_instruction);
    if (body_len > 0) {
        SegmentDraft body{SegmentRole::MainAnswer, random_bytes(rng, body_len), 0};
        backend.prefill(cache, body);
    }
    SegmentDraft query{SegmentRole::TurnQuery, random_bytes(rng, query_len), 1};
    backend.prefill(cache, query);
    return checkpoint(cache, 1);
}

SyntheticProfile random_profile(std::mt19937_64& rng) {
    SyntheticProfile profile;
    profile.name = "sweep";
    profile.turn_count = 3 + static_cast<int>(rng() % 6);
    profile.seed = rng();
    double weights[5];
    double total = 0.0;
    for (double& w : weights) {
        w = 1 + static_cast<double>(rng() % 100);
        total += w;
    }
    profile.mix = {
        {SubTaskKind::ApiCall, weights[0] / total},
        {SubTaskKind::Math, weights[1] / total},
        {SubTaskKind::QueryRewrite, weights[2] / total},
        {SubTaskKind::ChatSummary, weights[3] / total},
        {SubTaskKind::None, weights[4] / total},
    };
    profile.query_len = {3, 9};
    profile.answer_len = {5, 14};
    profile.passage_len = {10, 30};
    profile.reasoning_len = {6, 18};
    profile.rewrite_output_len = {3, 8};
    profile.task_output_len = {2, 6};
    profile.summary_output_len = {4, 10};
    if (rng() % 2 == 0) {
        profile.instruction_len = {5, 5 + static_cast<int>(rng() % 20)};
    }

    // Keep the mix feasible: summaries need at least as many casual turns.
    auto counts_ok = [&]() {
        try {
            profile.validate();
            return true;
        } catch (const ProfileError&) {
            return false;
        }
    };
    if (!counts_ok()) {
        const double moved = profile.mix[SubTaskKind::ChatSummary];
        profile.mix[SubTaskKind::ChatSummary] = 0.0;
        profile.mix[SubTaskKind::None] += moved;
    }
    return profile;
}

std::string ratio_string(double value) {
    std::ostringstream out;
    out.precision(3);
    out << std::fixed << value;
    return out.str();
}

}  // namespace

std::vector<CheckResult> verify_cache_algebra() {
    std::vector<CheckResult> results;
    ToyTransformerConfig config;
    config.seed = 9;
    ToyBackend backend(config);
    std::mt19937_64 rng(7);

    int evict_ok = 0;
    const int evict_cases = 100;
    for (int i = 0; i < evict_cases; ++i) {
        KvCache cache;
        const Checkpoint cp = random_checkpoint(backend, cache, rng, 40);
        SegmentDraft instruction{
            rng() % 2 == 0 ? SegmentRole::SubtaskInstruction
                           : SegmentRole::ClassifierInstruction,
            random_bytes(rng, static_cast<int>(rng() % 17)), 1};
        KvCache side = branch(cp, instruction, backend);
        const bool length_ok =
            side.logical_length() ==
            cp.length() + static_cast<int>(instruction.tokens.size());
        if (rng() % 2 == 0) {
            DecodeRequest request;
            request.role = SegmentRole::SubtaskOutput;
            request.turn = 1;
            request.max_tokens = 1 + static_cast<int>(rng() % 6);
            backend.decode(side, request);
        }
        KvCache restored = evict_to_checkpoint(side, cp);
        if (length_ok && cache_equals_checkpoint(restored, cp) &&
            caches_equal(restored, cp.to_cache())) {
            ++evict_ok;
        }
    }
    results.push_back({"cache-algebra", "evict identity", evict_ok == evict_cases,
                       std::to_string(evict_ok) + "/" + std::to_string(evict_cases) +
                           " branch+evict cases restore the checkpoint bit-exactly"});

    int immutable_ok = 0;
    const int immutable_cases = 30;
    for (int i = 0; i < immutable_cases; ++i) {
        KvCache cache;
        const Checkpoint cp = random_checkpoint(backend, cache, rng, 32);
        const auto snapshot = snapshot_segments(cp);
        KvCache side = cp.to_cache();
        SegmentPtr last_output;
        const int ops = 4 + static_cast<int>(rng() % 10);
        for (int op = 0; op < ops; ++op) {
            switch (rng() % 5) {
                case 0: {
                    SegmentDraft instruction{SegmentRole::SubtaskInstruction,
                                             random_bytes(rng, 1 + static_cast<int>(rng() % 8)),
                                             1};
                    side = branch(cp, instruction, backend);
                    break;
                }
                case 1: {
                    DecodeRequest request;
                    request.role = SegmentRole::SubtaskOutput;
                    request.turn = 1;
                    request.max_tokens = 1 + static_cast<int>(rng() % 4);
                    DecodeResult out = backend.decode(side, request);
                    if (out.segment && out.segment->role == SegmentRole::SubtaskOutput &&
                        out.segment->positions.front() >= cp.next_position()) {
                        last_output = out.segment;
                    }
                    break;
                }
                case 2:
                    if (side.has_prefix(cp.segments())) {
                        side = evict_to_checkpoint(side, cp);
                    }
                    break;
                case 3:
                    side = rollback(cp, last_output,
                                    rng() % 2 == 0 ? RetentionMode::PreservePositions
                                                   : RetentionMode::Recompute,
                                    backend);
                    last_output = nullptr;
                    break;
                default: {
                    SegmentDraft query{SegmentRole::TurnQuery,
                                       random_bytes(rng, 1 + static_cast<int>(rng() % 5)),
                                       2};
                    backend.prefill(side, query);
                    break;
                }
            }
        }
        if (checkpoint_matches_snapshot(cp, snapshot)) {
            ++immutable_ok;
        }
    }
    results.push_back({"cache-algebra", "checkpoint immutability",
                       immutable_ok == immutable_cases,
                       std::to_string(immutable_ok) + "/" +
                           std::to_string(immutable_cases) +
                           " random operation sequences left the checkpoint unchanged"});
    return results;
}

std::vector<CheckResult> verify_rollback_equivalence() {
    ToyTransformerConfig config;
    config.seed = 11;
    ToyBackend backend(config);
    std::mt19937_64 rng(13);

    int ok = 0;
    double worst = 0.0;
    const int cases = 50;
    for (int i = 0; i < cases; ++i) {
        const int context_len = 16 + static_cast<int>(rng() % 497);  // up to 512
        KvCache cache;
        const std::vector<TokenId> context = random_bytes(rng, context_len);
        const int query_len = std::min(context_len, 1 + static_cast<int>(rng() % 8));
        SegmentDraft body{SegmentRole::MainInstruction,
                          {context.begin(), context.end() - query_len}, 0};
        if (!body.tokens.empty()) {
            backend.prefill(cache, body);
        }
        SegmentDraft query{SegmentRole::TurnQuery,
                           {context.end() - query_len, context.end()}, 1};
        backend.prefill(cache, query);
        const Checkpoint cp = checkpoint(cache, 1);

        KvCache side = branch(cp, {SegmentRole::SubtaskInstruction, {}, 1}, backend);
        DecodeRequest request;
        request.role = SegmentRole::SubtaskOutput;
        request.turn = 1;
        request.max_tokens = 4 + static_cast<int>(rng() % 9);
        DecodeResult out = backend.decode(side, request);
        (void)evict_to_checkpoint(side, cp);
        KvCache rolled = rollback(cp, out.segment, RetentionMode::Recompute, backend);
        const std::vector<float> engine_logits = backend.next_logits(rolled);

        KvCache scratch;
        SegmentDraft full_context{SegmentRole::MainInstruction, context, 0};
        backend.prefill(scratch, full_context);
        SegmentDraft output_draft{SegmentRole::SubtaskOutput, out.segment->tokens, 1};
        backend.prefill(scratch, output_draft);
        const std::vector<float> scratch_logits = backend.next_logits(scratch);

        const double diff = max_abs_diff(engine_logits, scratch_logits);
        worst = std::max(worst, diff);
        if (diff <= 1e-5) {
            ++ok;
        }
    }
    return {{"rollback", "rollback equivalence", ok == cases,
             std::to_string(ok) + "/" + std::to_string(cases) +
                 " contexts within 1e-5 of from-scratch prefill (worst " +
                 ratio_string(worst) + ")"}};
}

std::vector<CheckResult> verify_prefill_chunking() {
    ToyTransformerConfig config;
    config.seed = 21;
    ToyBackend backend(config);
    std::mt19937_64 rng(23);

    const std::vector<TokenId> stream = random_bytes(rng, 256);
    KvCache reference;
    backend.prefill(reference, {SegmentRole::MainInstruction, stream, 0});
    const std::vector<float> reference_logits = backend.next_logits(reference);

    int ok = 0;
    double worst = 0.0;
    const int cases = 20;
    for (int i = 0; i < cases; ++i) {
        KvCache cache;
        std::size_t offset = 0;
        while (offset < stream.size()) {
            const std::size_t chunk = 1 + rng() % (stream.size() - offset);
            SegmentDraft draft{SegmentRole::MainInstruction,
                               {stream.begin() + static_cast<long>(offset),
                                stream.begin() + static_cast<long>(offset + chunk)},
                               0};
            backend.prefill(cache, draft);
            offset += chunk;
        }
        const double diff = max_abs_diff(backend.next_logits(cache), reference_logits);
        worst = std::max(worst, diff);
        if (diff <= 1e-5) {
            ++ok;
        }
    }
    return {{"chunking", "incremental prefill equivalence", ok == cases,
             std::to_string(ok) + "/" + std::to_string(cases) +
                 " random chunkings within 1e-5 of single-shot prefill (worst " +
                 ratio_string(worst) + ")"}};
}

std::vector<CheckResult> verify_router() {
    std::vector<CheckResult> results;
    const PriorityOrder order = PriorityOrder::standard();
    const std::vector<SubTaskKind> expected_order = {
        SubTaskKind::ApiCall, SubTaskKind::Math, SubTaskKind::QueryRewrite,
        SubTaskKind::ChatSummary};
    results.push_back({"router", "default priority order",
                       order.kinds() == expected_order,
                       "api_call -> math -> query_rewrite -> chat_summary"});

    std::map<SubTaskKind, std::string> instructions;
    for (SubTaskKind kind : kActionableKinds) {
        instructions[kind] = "decide " + std::string(to_string(kind)) + " now";
    }

    int sequential_ok = 0;
    int batched_ok = 0;
    for (int mask = 0; mask < 16; ++mask) {
        CountingBackend backend;
        ScriptedBehavior scripted;
        std::array<bool, 4> yes{};
        for (std::size_t i = 0; i < 4; ++i) {
            yes[i] = (mask >> i) & 1;
            scripted.set(1, stage_key::classifier(order.kinds()[i]), yes[i] ? "Yes" : "No");
        }
        backend.attach_script(&scripted);
        KvCache cache;
        backend.prefill(cache, {SegmentRole::MainInstruction,
                                backend.tokenizer().tokenize("system prompt"), 0});
        backend.prefill(cache, {SegmentRole::TurnQuery,
                                backend.tokenizer().tokenize("the user query"), 1});
        const Checkpoint cp = checkpoint(cache, 1);
        const SubTaskKind expected = order.argmax(yes);

        int first_yes = 4;
        for (int i = 0; i < 4; ++i) {
            if (yes[static_cast<std::size_t>(i)]) {
                first_yes = i;
                break;
            }
        }
        const std::size_t expected_evaluated =
            first_yes == 4 ? 4 : static_cast<std::size_t>(first_yes) + 1;

        ClassificationResult sequential =
            classify_hierarchical(cp, order, instructions, backend);
        if (sequential.selected == expected &&
            sequential.verdicts.size() == expected_evaluated) {
            ++sequential_ok;
        }
        ClassificationResult batched = classify_batched(cp, order, instructions, backend);
        if (batched.selected == expected && batched.verdicts.size() == 4 &&
            batched.selected == sequential.selected) {
            ++batched_ok;
        }
    }
    results.push_back({"router", "sequential enumeration", sequential_ok == 16,
                       std::to_string(sequential_ok) +
                           "/16 verdict vectors select the priority argmax with "
                           "early exit"});
    results.push_back({"router", "batched enumeration", batched_ok == 16,
                       std::to_string(batched_ok) +
                           "/16 verdict vectors match the sequential selection"});
    return results;
}

std::vector<CheckResult> verify_oracle_sweep() {
    std::mt19937_64 rng(31);
    const int script_count = 100;
    int matches = 0;
    std::string first_failure;

    for (int i = 0; i < script_count; ++i) {
        const SyntheticProfile profile = random_profile(rng);
        const ConversationScript script = generate_synthetic(profile);

        std::vector<StrategyConfig> configs(4);
        configs[0].strategy = Strategy::Ciflex;
        configs[1].strategy = Strategy::FullReload;
        configs[2].strategy = Strategy::RecentReload;
        configs[2].recent_window = 1 + static_cast<int>(rng() % 6);
        configs[3].strategy = Strategy::Seamless;

        const std::array<ClassificationMode, 3> modes = {ClassificationMode::Hierarchical,
                                                         ClassificationMode::Batched,
                                                         ClassificationMode::Multichoice};
        configs[0].classification_mode = modes[rng() % 3];
        configs[0].retention_mode = rng() % 2 == 0 ? RetentionMode::PreservePositions
                                                   : RetentionMode::Recompute;
        configs[1].classification_mode = modes[rng() % 3];
        configs[2].classification_mode = modes[rng() % 3];
        if (rng() % 2 == 0) {
            configs[3].classification_mode = ClassificationMode::Hierarchical;
        }

        for (const StrategyConfig& config : configs) {
            CountingBackend backend;
            const SessionReport report = run_conversation(script, config, backend);
            const RunCosts oracle =
                oracle_counts(script, config, backend.tokenizer());
            const MatchVerdict verdict =
                assert_engine_matches_oracle(report.counts(), oracle);
            if (verdict.ok) {
                ++matches;
            } else if (first_failure.empty()) {
                first_failure = script.meta.id + " " + config.label() + ": " +
                                verdict.divergence;
            }
        }
    }
    const int total = script_count * 4;
    std::string detail = std::to_string(matches) + "/" + std::to_string(total) +
                         " strategy runs match the naive replay oracle exactly";
    if (!first_failure.empty()) {
        detail += " (first divergence: " + first_failure + ")";
    }
    return {{"oracle", "token accounting exactness", matches == total, detail}};
}

std::vector<CheckResult> verify_recurrence() {
    std::mt19937_64 rng(41);
    std::vector<ConversationScript> fixtures;
    fixtures.push_back(generate_synthetic(minimal_profile()));
    fixtures.push_back(generate_synthetic(paper_like_22_profile()));
    for (int i = 0; i < 3; ++i) {
        fixtures.push_back(generate_synthetic(random_profile(rng)));
    }

    int checked = 0;
    int ok = 0;
    std::string first_failure;
    for (const ConversationScript& script : fixtures) {
        for (RetentionMode mode :
             {RetentionMode::PreservePositions, RetentionMode::Recompute}) {
            CountingBackend backend;
            const Tokenizer& tokenizer = backend.tokenizer();
            StrategyConfig config;
            config.strategy = Strategy::Ciflex;
            config.retention_mode = mode;
            Session session(script, config, backend);
            std::size_t expected = tokenizer.count(script.main_instruction) +
                                   tokenizer.count(script.turn(1).query);
            for (int t = 1; t <= script.turn_count(); ++t) {
                const TurnRecord record = session.run_turn();
                const TurnSpec& spec = script.turn(t);
                if (record.selected_subtask == SubTaskKind::Math ||
                    record.selected_subtask == SubTaskKind::ApiCall) {
                    expected += tokenizer.count(spec.scripted_subtask_output.value_or(""));
                }
                if (record.selected_subtask == SubTaskKind::QueryRewrite) {
                    expected += tokenizer.count(spec.scripted_retrieval.value_or(""));
                }
                expected += tokenizer.count(spec.scripted_answer);
                if (t < script.turn_count()) {
                    expected += tokenizer.count(script.turn(t + 1).query);
                }
                ++checked;
                if (static_cast<std::size_t>(session.main_cache().logical_length()) ==
                    expected) {
                    ++ok;
                } else if (first_failure.empty()) {
                    first_failure = script.meta.id + " turn " + std::to_string(t) +
                                    ": cache length " +
                                    std::to_string(session.main_cache().logical_length()) +
                                    " != closed form " + std::to_string(expected);
                }
            }
        }
    }
    std::string detail = std::to_string(ok) + "/" + std::to_string(checked) +
                         " turns match the closed-form cache-length recurrence";
    if (!first_failure.empty()) {
        detail += " (" + first_failure + ")";
    }
    return {{"recurrence", "turn-update recurrence", ok == checked, detail}};
}

std::vector<CheckResult> verify_cost_ordering() {
    std::vector<CheckResult> results;
    const ConversationScript script = generate_synthetic(paper_like_22_profile());
    const auto factory = []() { return std::make_unique<CountingBackend>(); };

    StrategyConfig ciflex_config;
    ciflex_config.strategy = Strategy::Ciflex;
    StrategyConfig full_multichoice;
    full_multichoice.strategy = Strategy::FullReload;
    full_multichoice.classification_mode = ClassificationMode::Multichoice;
    StrategyConfig full_binary;
    full_binary.strategy = Strategy::FullReload;

    const ComparisonTable table = compare_strategies(
        script, {ciflex_config, full_multichoice, full_binary}, factory);
    const SessionReport& ciflex_report = table.reports[0];
    const SessionReport& multichoice_report = table.reports[1];
    const SessionReport& binary_report = table.reports[2];

    bool ordering_ok = true;
    std::string ordering_detail;
    std::size_t ciflex_cls = 0, multichoice_cls = 0, binary_cls = 0;
    for (int t = 1; t <= script.turn_count(); ++t) {
        const std::size_t i = static_cast<std::size_t>(t - 1);
        ciflex_cls += ciflex_report.metrics[i].at(Stage::Classification).prefill;
        multichoice_cls += multichoice_report.metrics[i].at(Stage::Classification).prefill;
        binary_cls += binary_report.metrics[i].at(Stage::Classification).prefill;
        if (t >= 2 && !(ciflex_cls < multichoice_cls && multichoice_cls < binary_cls)) {
            ordering_ok = false;
            if (ordering_detail.empty()) {
                ordering_detail = "turn " + std::to_string(t) + ": " +
                                  std::to_string(ciflex_cls) + " / " +
                                  std::to_string(multichoice_cls) + " / " +
                                  std::to_string(binary_cls);
            }
        }
    }
    if (ordering_detail.empty()) {
        ordering_detail = "cumulative classification prefill at turn 22: " +
                          std::to_string(ciflex_cls) + " < " +
                          std::to_string(multichoice_cls) + " < " +
                          std::to_string(binary_cls);
    }
    results.push_back({"cost", "classification cost ordering", ordering_ok,
                       ordering_detail});

    const double ciflex_total =
        static_cast<double>(table.final_cumulative_prefill(0));
    const double full_total = static_cast<double>(table.final_cumulative_prefill(2));
    const double advantage = full_total / ciflex_total;
    results.push_back({"cost", "task-level reuse advantage", advantage >= 50.0,
                       "full re-load prefill is " + ratio_string(advantage) +
                           "x the reuse strategy's (needs >= 50x)"});

    const CumulativePoint& at20 = binary_report.cumulative[19];
    const double ratio = static_cast<double>(at20.prefill) /
                         static_cast<double>(at20.generated);
    results.push_back({"cost", "prefill/generation ratio", ratio >= 200.0 && ratio <= 400.0,
                       "full re-load prefill/generation at turn 20 is " +
                           ratio_string(ratio) + " (target [200, 400])"});
    return results;
}

std::vector<CheckResult> verify_recent_window() {
    SyntheticProfile profile;
    profile.name = "window";
    profile.turn_count = 12;
    profile.seed = 5;
    profile.mix = {
        {SubTaskKind::ApiCall, 0.1},
        {SubTaskKind::Math, 0.2},
        {SubTaskKind::QueryRewrite, 0.3},
        {SubTaskKind::ChatSummary, 0.0},
        {SubTaskKind::None, 0.4},
    };
    const ConversationScript script = generate_synthetic(profile);
    StrategyConfig config;
    config.strategy = Strategy::RecentReload;
    config.recent_window = 5;
    CountingBackend backend;
    const SessionReport report = run_conversation(script, config, backend);

    int ok = 0;
    int checked = 0;
    std::string detail;
    for (const TurnRecord& record : report.transcript) {
        const int expected = std::min(record.turn - 1, 5);
        ++checked;
        if (record.reload_context_turns == expected) {
            ++ok;
        } else if (detail.empty()) {
            detail = "turn " + std::to_string(record.turn) + ": window covered " +
                     std::to_string(record.reload_context_turns) + " turns, expected " +
                     std::to_string(expected);
        }
    }
    if (detail.empty()) {
        detail = std::to_string(ok) + "/" + std::to_string(checked) +
                 " turns reconstruct exactly min(t-1, 5) prior turns";
    }
    return {{"window", "recent re-load window", ok == checked, detail}};
}

std::vector<CheckResult> verify_role_hygiene() {
    std::vector<CheckResult> results;
    const ConversationScript script = generate_synthetic(paper_like_22_profile());
    const std::vector<std::string> side_roles = {
        "classifier-instruction", "classifier-output", "subtask-instruction",
        "subtask-reasoning"};

    {
        StrategyConfig config;
        config.strategy = Strategy::Ciflex;
        CountingBackend backend;
        const SessionReport report = run_conversation(script, config, backend);
        bool clean = true;
        std::string offender;
        for (const std::string& role : side_roles) {
            auto it = report.final_cache_role_tokens.find(role);
            if (it != report.final_cache_role_tokens.end() && it->second > 0) {
                clean = false;
                offender = role;
            }
        }
        results.push_back({"hygiene", "task-level reuse keeps the main path clean",
                           clean,
                           clean ? "no classifier/sub-task instruction or reasoning "
                                   "tokens in the final main cache"
                                 : "found " + offender + " tokens in the main cache"});
    }
    {
        StrategyConfig config;
        config.strategy = Strategy::Seamless;
        config.classification_mode = ClassificationMode::Hierarchical;
        CountingBackend backend;
        const SessionReport report = run_conversation(script, config, backend);
        bool all_present = true;
        std::string missing;
        std::vector<std::string> inline_roles = side_roles;
        inline_roles.push_back("subtask-output");
        for (const std::string& role : inline_roles) {
            auto it = report.final_cache_role_tokens.find(role);
            if (it == report.final_cache_role_tokens.end() || it->second == 0) {
                all_present = false;
                missing = role;
            }
        }
        results.push_back({"hygiene", "seamless keeps side-path tokens inline",
                           all_present,
                           all_present ? "classifier and sub-task tokens all present "
                                         "in the final cache"
                                       : "role " + missing + " missing from the cache"});
    }
    return results;
}

std::vector<CheckResult> verify_latency_direction() {
    SyntheticProfile profile;
    profile.name = "latency";
    profile.turn_count = 8;
    profile.seed = 3;
    profile.mix = {
        {SubTaskKind::ApiCall, 0.125},
        {SubTaskKind::Math, 0.125},
        {SubTaskKind::QueryRewrite, 0.25},
        {SubTaskKind::ChatSummary, 0.125},
        {SubTaskKind::None, 0.375},
    };
    profile.instruction_len = LengthRange::fixed(24);  // equal-length classifiers
    const ConversationScript script = generate_synthetic(profile);

    StrategyConfig sequential_config;
    sequential_config.strategy = Strategy::Ciflex;
    sequential_config.classification_mode = ClassificationMode::Hierarchical;
    StrategyConfig batched_config;
    batched_config.strategy = Strategy::Ciflex;
    batched_config.classification_mode = ClassificationMode::Batched;

    CountingBackend sequential_backend;
    const SessionReport sequential =
        run_conversation(script, sequential_config, sequential_backend);
    CountingBackend batched_backend;
    const SessionReport batched =
        run_conversation(script, batched_config, batched_backend);

    // Generation runs ~50x slower per token than prefill.
    const LatencyCalibration rates{1000.0, 20.0};
    double sequential_seconds = 0.0;
    double batched_seconds = 0.0;
    for (std::size_t i = 0; i < sequential.metrics.size(); ++i) {
        sequential_seconds += classification_latency_seconds(sequential.metrics[i], rates);
        batched_seconds += classification_latency_seconds(batched.metrics[i], rates);
    }
    const double ratio = batched_seconds / sequential_seconds;
    return {{"latency", "batched classification halves latency", ratio <= 0.55,
             "batched/sequential classification latency ratio " + ratio_string(ratio) +
                 " (needs <= 0.55)"}};
}

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names = {
        "cache-algebra", "rollback", "chunking", "router",  "oracle",
        "recurrence",    "cost",     "window",   "hygiene", "latency"};
    return names;
}

std::vector<CheckResult> run_verify_suite(const std::string& name) {
    if (name == "cache-algebra") return verify_cache_algebra();
    if (name == "rollback") return verify_rollback_equivalence();
    if (name == "chunking") return verify_prefill_chunking();
    if (name == "router") return verify_router();
    if (name == "oracle") return verify_oracle_sweep();
    if (name == "recurrence") return verify_recurrence();
    if (name == "cost") return verify_cost_ordering();
    if (name == "window") return verify_recent_window();
    if (name == "hygiene") return verify_role_hygiene();
    if (name == "latency") return verify_latency_direction();
    if (name == "all") {
        std::vector<CheckResult> results;
        for (const std::string& suite : verify_suite_names()) {
            auto part = run_verify_suite(suite);
            results.insert(results.end(), part.begin(), part.end());
        }
        return results;
    }
    throw Error("unknown verify suite: " + name);
}

}  // namespace ciflex
