#include "ciflex/orchestrator.hpp"

#include "ciflex/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace ciflex {

namespace {

bool retains_output(SubTaskKind kind) {
    return kind == SubTaskKind::Math || kind == SubTaskKind::ApiCall;
}

}  // namespace

Session::Session(const ConversationScript& script, StrategyConfig config,
                 ModelBackend& backend, PriorityOrder order)
    : script_(script),
      config_(std::move(config)),
      backend_(backend),
      order_(std::move(order)) {
    config_.validate();
    auto issues = validate_script(script_);
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    scripted_ = make_scripted_behavior(script_);
    backend_.attach_script(&scripted_);
    warm_tokenizer(script_, backend_.tokenizer());
}

Session::~Session() {
    backend_.attach_script(nullptr);
}

SegmentDraft Session::draft(SegmentRole role, const std::string& text, int turn) const {
    SegmentDraft d;
    d.role = role;
    d.tokens = backend_.tokenizer().tokenize(text);
    d.turn = turn;
    return d;
}

void Session::bootstrap_main_path() {
    bootstrap_prefill_ +=
        backend_.prefill(main_, draft(SegmentRole::MainInstruction,
                                      script_.main_instruction, 0));
    bootstrap_prefill_ +=
        backend_.prefill(main_, draft(SegmentRole::TurnQuery, script_.turn(1).query, 1));
}

ClassificationResult Session::classify_on_checkpoint(const Checkpoint& cp, int turn) {
    switch (config_.resolved_classification_mode()) {
        case ClassificationMode::Hierarchical:
            return classify_hierarchical(cp, order_, script_.classifier_instructions,
                                         backend_);
        case ClassificationMode::Batched:
            return classify_batched(cp, order_, script_.classifier_instructions,
                                    backend_);
        case ClassificationMode::Multichoice: {
            MultichoiceResult mc =
                classify_multichoice(cp, script_.multichoice_instruction, backend_);
            ClassificationResult result;
            result.selected = mc.selected;
            ClassifierVerdict verdict;
            verdict.kind = mc.selected;
            verdict.yes = mc.selected != SubTaskKind::None;
            verdict.prefill_cost = mc.prefill_cost;
            verdict.generation_cost = mc.generation_cost;
            verdict.raw_text = mc.raw_text;
            result.verdicts.push_back(std::move(verdict));
            return result;
        }
    }
    throw Error("unreachable classification mode");
    (void)turn;
}

void Session::apply_classification_costs(TurnMetrics& m,
                                         const ClassificationResult& result) {
    m.classification_batched = result.batched;
    for (const ClassifierVerdict& verdict : result.verdicts) {
        StageCost call{verdict.prefill_cost, verdict.generation_cost};
        m.classifier_costs.push_back(call);
        m.at(Stage::Classification).prefill += call.prefill;
        m.at(Stage::Classification).generated += call.generated;
        ++m.classifier_calls;
    }
}

TurnRecord Session::run_turn() {
    if (done()) {
        throw PreconditionError("run_turn: conversation is complete");
    }
    const int turn = next_turn_++;
    TurnRecord record;
    try {
        if (config_.strategy == Strategy::FullReload ||
            config_.strategy == Strategy::RecentReload) {
            record = run_reload_turn(turn);
        } else {
            record = run_cached_turn(turn);
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError("turn " + std::to_string(turn), e.what());
    }
    transcript_.push_back(record);
    return record;
}

TurnRecord Session::run_cached_turn(int turn) {
    const TurnSpec& spec = script_.turn(turn);
    if (turn == 1) {
        bootstrap_main_path();
    }
    TurnMetrics m;
    m.turn = turn;
    TurnRecord record;
    record.turn = turn;
    record.query = spec.query;

    std::optional<std::string> retrieval_text;

    if (config_.strategy == Strategy::Ciflex) {
        const Checkpoint cp = checkpoint(main_, turn);
        ClassificationResult cls = classify_on_checkpoint(cp, turn);
        apply_classification_costs(m, cls);
        record.selected_subtask = cls.selected;

        if (cls.selected != SubTaskKind::None) {
            StageCost& sub = m.at(Stage::Subtask);
            SegmentDraft instruction =
                draft(SegmentRole::SubtaskInstruction,
                      script_.subtask_instructions.at(cls.selected), turn);
            KvCache side = branch(cp, instruction, backend_);
            sub.prefill += instruction.tokens.size();

            if (spec.scripted_reasoning) {
                DecodeRequest reasoning;
                reasoning.role = SegmentRole::SubtaskReasoning;
                reasoning.turn = turn;
                reasoning.stage = stage_key::kSubtaskReasoning;
                reasoning.max_tokens = 1 << 20;
                sub.generated += backend_.decode(side, reasoning).token_count;
            }
            DecodeRequest output;
            output.role = SegmentRole::SubtaskOutput;
            output.turn = turn;
            output.stage = stage_key::kSubtaskOutput;
            output.max_tokens = 1 << 20;
            DecodeResult out = backend_.decode(side, output);
            sub.generated += out.token_count;
            record.subtask_output = out.text;

            // Side path ends: restore the checkpoint, then resume the main
            // path with only the output retained (when its kind calls for it).
            (void)evict_to_checkpoint(side, cp);
            SegmentPtr retained = retains_output(cls.selected) ? out.segment : nullptr;
            main_ = rollback(cp, retained, config_.retention_mode, backend_);
            if (retained && config_.retention_mode == RetentionMode::Recompute) {
                sub.prefill += retained->tokens.size();
            }

            if (cls.selected == SubTaskKind::QueryRewrite) {
                if (!spec.scripted_retrieval) {
                    throw ScriptingError(turn, "retrieval");
                }
                retrieval_text = spec.scripted_retrieval;
            } else if (cls.selected == SubTaskKind::ChatSummary) {
                summaries_.push_back({turn, out.text});
            }
        }
    } else {  // Seamless: instructions and outputs live inline, never evicted.
        const ClassificationMode mode = config_.resolved_classification_mode();
        SubTaskKind selected = SubTaskKind::None;
        if (mode == ClassificationMode::Multichoice) {
            StageCost call;
            call.prefill += backend_.prefill(
                main_, draft(SegmentRole::ClassifierInstruction,
                             script_.multichoice_instruction, turn));
            DecodeRequest request;
            request.role = SegmentRole::ClassifierOutput;
            request.turn = turn;
            request.stage = stage_key::kMultichoice;
            request.max_tokens = 8;
            DecodeResult decoded = backend_.decode(main_, request);
            call.generated += decoded.token_count;
            selected = parse_option_letter(decoded.text);
            m.classifier_costs.push_back(call);
            m.classifier_calls = 1;
            m.at(Stage::Classification).prefill += call.prefill;
            m.at(Stage::Classification).generated += call.generated;
        } else {
            for (SubTaskKind kind : order_.kinds()) {
                StageCost call;
                call.prefill += backend_.prefill(
                    main_, draft(SegmentRole::ClassifierInstruction,
                                 script_.classifier_instructions.at(kind), turn));
                DecodeRequest request;
                request.role = SegmentRole::ClassifierOutput;
                request.turn = turn;
                request.stage = stage_key::classifier(kind);
                request.max_tokens = 8;
                DecodeResult decoded = backend_.decode(main_, request);
                call.generated += decoded.token_count;
                const bool yes = parse_verdict(decoded.text, kind);
                m.classifier_costs.push_back(call);
                ++m.classifier_calls;
                m.at(Stage::Classification).prefill += call.prefill;
                m.at(Stage::Classification).generated += call.generated;
                if (yes) {
                    selected = kind;
                    break;
                }
            }
        }
        record.selected_subtask = selected;

        if (selected != SubTaskKind::None) {
            StageCost& sub = m.at(Stage::Subtask);
            sub.prefill += backend_.prefill(
                main_, draft(SegmentRole::SubtaskInstruction,
                             script_.subtask_instructions.at(selected), turn));
            if (spec.scripted_reasoning) {
                DecodeRequest reasoning;
                reasoning.role = SegmentRole::SubtaskReasoning;
                reasoning.turn = turn;
                reasoning.stage = stage_key::kSubtaskReasoning;
                reasoning.max_tokens = 1 << 20;
                sub.generated += backend_.decode(main_, reasoning).token_count;
            }
            DecodeRequest output;
            output.role = SegmentRole::SubtaskOutput;
            output.turn = turn;
            output.stage = stage_key::kSubtaskOutput;
            output.max_tokens = 1 << 20;
            DecodeResult out = backend_.decode(main_, output);
            sub.generated += out.token_count;
            record.subtask_output = out.text;
            if (selected == SubTaskKind::QueryRewrite) {
                if (!spec.scripted_retrieval) {
                    throw ScriptingError(turn, "retrieval");
                }
                retrieval_text = spec.scripted_retrieval;
            } else if (selected == SubTaskKind::ChatSummary) {
                summaries_.push_back({turn, out.text});
            }
        }
    }

    StageCost& main_stage = m.at(Stage::MainAnswer);
    if (retrieval_text) {
        main_stage.prefill += backend_.prefill(
            main_, draft(SegmentRole::RetrievalContext, *retrieval_text, turn));
        record.retrieval = retrieval_text;
    }
    DecodeRequest answer;
    answer.role = SegmentRole::MainAnswer;
    answer.turn = turn;
    answer.stage = stage_key::kMainAnswer;
    answer.max_tokens = 1 << 20;
    DecodeResult decoded_answer = backend_.decode(main_, answer);
    main_stage.generated += decoded_answer.token_count;
    record.answer = decoded_answer.text;

    if (turn < script_.turn_count()) {
        m.at(Stage::TurnUpdate).prefill += backend_.prefill(
            main_,
            draft(SegmentRole::TurnQuery, script_.turn(turn + 1).query, turn + 1));
    }

    metrics_.push_back(std::move(m));
    return record;
}

KvCache Session::build_reload_context(int turn, std::size_t& prefill_cost,
                                      int& context_turns) {
    KvCache cache;
    prefill_cost += backend_.prefill(
        cache, draft(SegmentRole::MainInstruction, script_.main_instruction, 0));
    int first = 1;
    if (config_.strategy == Strategy::RecentReload) {
        first = std::max(1, turn - config_.recent_window);
    }
    context_turns = turn - first;
    for (int past = first; past < turn; ++past) {
        const TurnRecord& prior = transcript_[static_cast<std::size_t>(past - 1)];
        prefill_cost +=
            backend_.prefill(cache, draft(SegmentRole::TurnQuery, prior.query, past));
        if (prior.retrieval) {
            prefill_cost += backend_.prefill(
                cache, draft(SegmentRole::RetrievalContext, *prior.retrieval, past));
        }
        prefill_cost +=
            backend_.prefill(cache, draft(SegmentRole::MainAnswer, prior.answer, past));
    }
    prefill_cost += backend_.prefill(
        cache, draft(SegmentRole::TurnQuery, script_.turn(turn).query, turn));
    return cache;
}

TurnRecord Session::run_reload_turn(int turn) {
    const TurnSpec& spec = script_.turn(turn);
    const ClassificationMode mode = config_.resolved_classification_mode();
    TurnMetrics m;
    m.turn = turn;
    m.classification_batched = mode == ClassificationMode::Batched;
    TurnRecord record;
    record.turn = turn;
    record.query = spec.query;

    int context_turns = 0;
    SubTaskKind selected = SubTaskKind::None;

    auto run_classifier = [&](SubTaskKind kind) {
        StageCost call;
        KvCache cache = build_reload_context(turn, call.prefill, context_turns);
        call.prefill += backend_.prefill(
            cache, draft(SegmentRole::ClassifierInstruction,
                         script_.classifier_instructions.at(kind), turn));
        DecodeRequest request;
        request.role = SegmentRole::ClassifierOutput;
        request.turn = turn;
        request.stage = stage_key::classifier(kind);
        request.max_tokens = 8;
        DecodeResult decoded = backend_.decode(cache, request);
        call.generated += decoded.token_count;
        const bool yes = parse_verdict(decoded.text, kind);
        m.classifier_costs.push_back(call);
        ++m.classifier_calls;
        return yes;
    };

    if (mode == ClassificationMode::Multichoice) {
        StageCost call;
        KvCache cache = build_reload_context(turn, call.prefill, context_turns);
        call.prefill += backend_.prefill(
            cache, draft(SegmentRole::ClassifierInstruction,
                         script_.multichoice_instruction, turn));
        DecodeRequest request;
        request.role = SegmentRole::ClassifierOutput;
        request.turn = turn;
        request.stage = stage_key::kMultichoice;
        request.max_tokens = 8;
        DecodeResult decoded = backend_.decode(cache, request);
        call.generated += decoded.token_count;
        selected = parse_option_letter(decoded.text);
        m.classifier_costs.push_back(call);
        m.classifier_calls = 1;
    } else {
        std::array<bool, 4> yes{};
        std::size_t evaluated = 0;
        for (SubTaskKind kind : order_.kinds()) {
            yes[evaluated] = run_classifier(kind);
            ++evaluated;
            if (yes[evaluated - 1] && mode == ClassificationMode::Hierarchical) {
                break;
            }
        }
        std::array<bool, 4> padded{};
        for (std::size_t i = 0; i < evaluated; ++i) {
            padded[i] = yes[i];
        }
        selected = order_.argmax(padded);
    }
    for (const StageCost& call : m.classifier_costs) {
        m.at(Stage::Classification).prefill += call.prefill;
        m.at(Stage::Classification).generated += call.generated;
    }
    record.selected_subtask = selected;

    std::optional<std::string> subtask_output_text;
    if (selected != SubTaskKind::None) {
        StageCost& sub = m.at(Stage::Subtask);
        KvCache cache = build_reload_context(turn, sub.prefill, context_turns);
        sub.prefill += backend_.prefill(
            cache, draft(SegmentRole::SubtaskInstruction,
                         script_.subtask_instructions.at(selected), turn));
        if (spec.scripted_reasoning) {
            DecodeRequest reasoning;
            reasoning.role = SegmentRole::SubtaskReasoning;
            reasoning.turn = turn;
            reasoning.stage = stage_key::kSubtaskReasoning;
            reasoning.max_tokens = 1 << 20;
            sub.generated += backend_.decode(cache, reasoning).token_count;
        }
        DecodeRequest output;
        output.role = SegmentRole::SubtaskOutput;
        output.turn = turn;
        output.stage = stage_key::kSubtaskOutput;
        output.max_tokens = 1 << 20;
        DecodeResult out = backend_.decode(cache, output);
        sub.generated += out.token_count;
        subtask_output_text = out.text;
        record.subtask_output = out.text;
        if (selected == SubTaskKind::ChatSummary) {
            summaries_.push_back({turn, out.text});
        }
    }

    StageCost& main_stage = m.at(Stage::MainAnswer);
    KvCache answer_cache = build_reload_context(turn, main_stage.prefill, context_turns);
    record.reload_context_turns = context_turns;
    if (retains_output(selected) && subtask_output_text) {
        main_stage.prefill += backend_.prefill(
            answer_cache,
            draft(SegmentRole::SubtaskOutput, *subtask_output_text, turn));
    }
    if (selected == SubTaskKind::QueryRewrite) {
        if (!spec.scripted_retrieval) {
            throw ScriptingError(turn, "retrieval");
        }
        main_stage.prefill += backend_.prefill(
            answer_cache,
            draft(SegmentRole::RetrievalContext, *spec.scripted_retrieval, turn));
        record.retrieval = spec.scripted_retrieval;
    }
    DecodeRequest answer;
    answer.role = SegmentRole::MainAnswer;
    answer.turn = turn;
    answer.stage = stage_key::kMainAnswer;
    answer.max_tokens = 1 << 20;
    DecodeResult decoded_answer = backend_.decode(answer_cache, answer);
    main_stage.generated += decoded_answer.token_count;
    record.answer = decoded_answer.text;
    main_ = std::move(answer_cache);

    metrics_.push_back(std::move(m));
    return record;
}

SessionReport Session::finish() {
    if (!done()) {
        throw PreconditionError("finish: conversation has unprocessed turns");
    }
    SessionReport report;
    report.script_id = script_.meta.id;
    report.config = config_;
    report.backend_name = backend_.name();
    report.bootstrap_prefill = bootstrap_prefill_;
    report.transcript = transcript_;
    report.metrics = metrics_;
    report.cumulative = cumulative_curve(metrics_, bootstrap_prefill_);
    report.final_cache_length = main_.logical_length();
    report.final_cache_segments = main_.segment_count();
    for (const auto& segment : main_.segments()) {
        report.final_cache_role_tokens[std::string(to_string(segment->role))] +=
            segment->tokens.size();
    }
    report.summaries = summaries_;
    return report;
}

SessionReport run_conversation(const ConversationScript& script,
                               const StrategyConfig& config, ModelBackend& backend,
                               PriorityOrder order) {
    Session session(script, config, backend, std::move(order));
    while (!session.done()) {
        session.run_turn();
    }
    return session.finish();
}

std::string report_to_json_text(const SessionReport& report) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["version"] = 1;
    doc["script_id"] = report.script_id;
    doc["strategy"] = std::string(to_string(report.config.strategy));
    doc["classification_mode"] =
        std::string(to_string(report.config.resolved_classification_mode()));
    doc["retention_mode"] = std::string(to_string(report.config.retention_mode));
    doc["recent_window"] = report.config.recent_window;
    doc["backend"] = report.backend_name;
    doc["bootstrap_prefill"] = report.bootstrap_prefill;
    doc["turns"] = ordered_json::array();
    for (std::size_t i = 0; i < report.transcript.size(); ++i) {
        const TurnRecord& record = report.transcript[i];
        const TurnMetrics& m = report.metrics[i];
        ordered_json turn;
        turn["turn"] = record.turn;
        turn["query"] = record.query;
        turn["selected_subtask"] = std::string(to_string(record.selected_subtask));
        if (record.subtask_output) {
            turn["subtask_output"] = *record.subtask_output;
        }
        if (record.retrieval) {
            turn["retrieval"] = *record.retrieval;
        }
        turn["answer"] = record.answer;
        if (record.reload_context_turns >= 0) {
            turn["reload_context_turns"] = record.reload_context_turns;
        }
        ordered_json stages;
        for (Stage stage : kStages) {
            stages[std::string(to_string(stage))] = {
                {"prefill", m.at(stage).prefill},
                {"generated", m.at(stage).generated},
            };
        }
        turn["stages"] = std::move(stages);
        turn["classifier_calls"] = m.classifier_calls;
        turn["classification_batched"] = m.classification_batched;
        ordered_json calls = ordered_json::array();
        for (const StageCost& call : m.classifier_costs) {
            calls.push_back({{"prefill", call.prefill}, {"generated", call.generated}});
        }
        turn["classifier_costs"] = std::move(calls);
        const CumulativePoint& cum = report.cumulative[i];
        turn["cumulative"] = {{"prefill", cum.prefill}, {"generated", cum.generated}};
        doc["turns"].push_back(std::move(turn));
    }
    doc["final_cache"] = {
        {"length", report.final_cache_length},
        {"segments", report.final_cache_segments},
        {"role_tokens", report.final_cache_role_tokens},
    };
    doc["summaries"] = ordered_json::array();
    for (const SummaryEntry& entry : report.summaries) {
        doc["summaries"].push_back({{"turn", entry.turn}, {"text", entry.text}});
    }
    return doc.dump(2) + "\n";
}

std::string ComparisonTable::to_csv() const {
    std::ostringstream out;
    out << "turn,strategy,stage,prefill,generated,cum_prefill,cum_generated\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const SessionReport& report = reports[i];
        const std::string& label = labels[i];
        std::map<std::string, StageCost> running;
        if (report.bootstrap_prefill > 0) {
            running["bootstrap"].prefill = report.bootstrap_prefill;
            out << "0," << label << ",bootstrap," << report.bootstrap_prefill
                << ",0," << report.bootstrap_prefill << ",0\n";
        }
        for (const TurnMetrics& m : report.metrics) {
            for (Stage stage : kStages) {
                const std::string stage_name(to_string(stage));
                StageCost& total = running[stage_name];
                total.prefill += m.at(stage).prefill;
                total.generated += m.at(stage).generated;
                out << m.turn << ',' << label << ',' << stage_name << ','
                    << m.at(stage).prefill << ',' << m.at(stage).generated << ','
                    << total.prefill << ',' << total.generated << "\n";
            }
        }
    }
    return out.str();
}

std::size_t ComparisonTable::final_cumulative_prefill(std::size_t index) const {
    const SessionReport& report = reports.at(index);
    return report.cumulative.empty() ? report.bootstrap_prefill
                                     : report.cumulative.back().prefill;
}

std::size_t ComparisonTable::final_cumulative_generated(std::size_t index) const {
    const SessionReport& report = reports.at(index);
    return report.cumulative.empty() ? 0 : report.cumulative.back().generated;
}

std::string comparison_to_json_text(const ComparisonTable& table) {
    using nlohmann::ordered_json;
    ordered_json doc = ordered_json::array();
    for (std::size_t i = 0; i < table.reports.size(); ++i) {
        ordered_json entry;
        entry["strategy"] = table.labels[i];
        entry["report"] = ordered_json::parse(report_to_json_text(table.reports[i]));
        doc.push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
}

ComparisonTable compare_strategies(const ConversationScript& script,
                                   const std::vector<StrategyConfig>& configs,
                                   const BackendFactory& factory, PriorityOrder order) {
    if (configs.size() < 2) {
        throw PreconditionError("compare_strategies: need at least 2 strategies");
    }
    ComparisonTable table;
    for (const StrategyConfig& config : configs) {
        std::unique_ptr<ModelBackend> backend = factory();
        table.reports.push_back(run_conversation(script, config, *backend, order));
        std::string label = config.label();
        int suffix = 2;
        while (std::count(table.labels.begin(), table.labels.end(), label) > 0) {
            label = config.label() + "#" + std::to_string(suffix++);
        }
        table.labels.push_back(std::move(label));
    }
    return table;
}

}  // namespace ciflex
