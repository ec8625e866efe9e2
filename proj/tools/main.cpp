// ciflex command-line tool: run scripted conversations under a chosen
// execution strategy, compare strategies, generate synthetic conversations,
// and run the verification suites.
//
// Exit status: 0 success, 1 domain failure, 2 usage error.

#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/orchestrator.hpp"
#include "ciflex/synthetic.hpp"
#include "ciflex/toy_transformer.hpp"
#include "ciflex/verify.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace ciflex;

// Relative paths resolve against the working directory first, then the
// CIFLEX_FIXTURES directory when set.
std::string resolve_input_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) {
        return path;
    }
    if (const char* fixtures = std::getenv("CIFLEX_FIXTURES")) {
        const fs::path candidate = fs::path(fixtures) / path;
        if (fs::exists(candidate)) {
            return candidate.string();
        }
    }
    return path;
}

struct BackendOptions {
    std::string backend = "counting";
    std::string tokenizer = "whitespace";
    std::string toy_config_path;
    std::uint64_t seed = 42;

    std::unique_ptr<ModelBackend> make() const {
        if (backend == "counting") {
            const TokenizerKind kind = tokenizer == "byte" ? TokenizerKind::Byte
                                                           : TokenizerKind::Whitespace;
            return std::make_unique<CountingBackend>(kind);
        }
        ToyTransformerConfig config;
        if (!toy_config_path.empty()) {
            config = ToyTransformerConfig::from_file(resolve_input_path(toy_config_path));
        }
        config.seed = seed;
        return std::make_unique<ToyBackend>(config);
    }
};

void add_backend_flags(CLI::App* cmd, BackendOptions& options) {
    cmd->add_option("--backend", options.backend, "Model backend")
        ->check(CLI::IsMember({"counting", "toy"}))
        ->capture_default_str();
    cmd->add_option("--tokenizer", options.tokenizer,
                    "Counting-backend tokenizer")
        ->check(CLI::IsMember({"whitespace", "byte"}))
        ->capture_default_str();
    cmd->add_option("--toy-config", options.toy_config_path,
                    "Toy transformer key-value config file");
    cmd->add_option("--seed", options.seed, "Toy transformer weight seed")
        ->capture_default_str();
}

StrategyConfig parse_strategy_spec(const std::string& spec, int window,
                                   const std::string& retention) {
    StrategyConfig config;
    std::string strategy_name = spec;
    std::string mode_name;
    if (const auto colon = spec.find(':'); colon != std::string::npos) {
        strategy_name = spec.substr(0, colon);
        mode_name = spec.substr(colon + 1);
    }
    const auto strategy = strategy_from_string(strategy_name);
    if (!strategy) {
        throw CLI::ValidationError("--strategies", "unknown strategy: " + strategy_name);
    }
    config.strategy = *strategy;
    if (!mode_name.empty()) {
        const auto mode = classification_mode_from_string(mode_name);
        if (!mode) {
            throw CLI::ValidationError("--strategies",
                                       "unknown classification mode: " + mode_name);
        }
        config.classification_mode = *mode;
    }
    config.recent_window = window;
    const auto retention_mode = retention_mode_from_string(retention);
    if (!retention_mode) {
        throw CLI::ValidationError("--retention", "unknown retention mode: " + retention);
    }
    config.retention_mode = *retention_mode;
    return config;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << content;
}

void print_turn_summary(const SessionReport& report) {
    for (std::size_t i = 0; i < report.transcript.size(); ++i) {
        const TurnRecord& record = report.transcript[i];
        const TurnMetrics& m = report.metrics[i];
        std::cout << "turn " << record.turn << "  subtask="
                  << to_string(record.selected_subtask) << "  prefill[classification="
                  << m.at(Stage::Classification).prefill
                  << " subtask=" << m.at(Stage::Subtask).prefill
                  << " main_answer=" << m.at(Stage::MainAnswer).prefill
                  << " turn_update=" << m.at(Stage::TurnUpdate).prefill
                  << "]  generated=" << m.total_generated() << "\n";
    }
}

void append_summary_sink(const std::string& path, const SessionReport& report) {
    if (path.empty() || report.summaries.empty()) {
        return;
    }
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw Error("cannot append to summary sink " + path);
    }
    for (const SummaryEntry& entry : report.summaries) {
        out << report.script_id << '\t' << entry.text << '\n';
    }
}

int cmd_run(const std::string& script_path, const std::string& strategy,
            const std::string& classification, const std::string& retention,
            int window, const BackendOptions& backend_options,
            const std::string& out_path, const std::string& sink_path) {
    const ConversationScript script = load_and_validate(resolve_input_path(script_path));
    StrategyConfig config = parse_strategy_spec(strategy, window, retention);
    if (!classification.empty()) {
        const auto mode = classification_mode_from_string(classification);
        if (!mode) {
            throw CLI::ValidationError("--classification",
                                       "unknown classification mode: " + classification);
        }
        config.classification_mode = *mode;
    }
    auto backend = backend_options.make();
    const SessionReport report = run_conversation(script, config, *backend);
    print_turn_summary(report);
    write_file(out_path, report_to_json_text(report));
    append_summary_sink(sink_path, report);
    std::cout << "report written to " << out_path << " (total prefill="
              << (report.cumulative.empty() ? report.bootstrap_prefill
                                            : report.cumulative.back().prefill)
              << ", generated="
              << (report.cumulative.empty() ? 0 : report.cumulative.back().generated)
              << ")\n";
    return 0;
}

int cmd_compare(const std::string& script_path,
                const std::vector<std::string>& strategy_specs, int window,
                const std::string& retention, const BackendOptions& backend_options,
                const std::string& out_path, const std::string& reports_path) {
    const ConversationScript script = load_and_validate(resolve_input_path(script_path));
    std::vector<StrategyConfig> configs;
    for (const std::string& spec : strategy_specs) {
        configs.push_back(parse_strategy_spec(spec, window, retention));
    }
    const ComparisonTable table = compare_strategies(
        script, configs, [&]() { return backend_options.make(); });
    write_file(out_path, table.to_csv());
    if (!reports_path.empty()) {
        write_file(reports_path, comparison_to_json_text(table));
    }
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
        std::cout << table.labels[i] << ": cumulative prefill="
                  << table.final_cumulative_prefill(i)
                  << " generated=" << table.final_cumulative_generated(i) << "\n";
    }
    std::cout << "table written to " << out_path << "\n";
    return 0;
}

int cmd_synth(const std::string& profile_name, std::uint64_t seed, bool seed_set,
              const std::string& out_path) {
    SyntheticProfile profile;
    if (auto builtin = builtin_profile(profile_name)) {
        profile = *builtin;
    } else {
        profile = SyntheticProfile::from_file(resolve_input_path(profile_name));
    }
    if (seed_set) {
        profile.seed = seed;
    }
    const ConversationScript script = generate_synthetic(profile);
    save_script(script, out_path);
    std::cout << "wrote " << script.turn_count() << "-turn script " << script.meta.id
              << " to " << out_path << "\n";
    return 0;
}

int cmd_verify(const std::string& suite) {
    const auto results = run_verify_suite(suite);
    int failures = 0;
    for (const CheckResult& result : results) {
        std::cout << (result.passed ? "[ok]   " : "[FAIL] ") << result.suite << "/"
                  << result.name << ": " << result.detail << "\n";
        if (!result.passed) {
            ++failures;
        }
    }
    if (failures > 0) {
        std::cout << failures << " check(s) failed\n";
        return 1;
    }
    std::cout << "all " << results.size() << " check(s) passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-level KV-cache reuse engine for multi-turn conversations"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one script under one strategy");
    std::string run_script;
    std::string run_strategy = "ciflex";
    std::string run_classification;
    std::string run_retention = "preserve-positions";
    int run_window = 5;
    std::string run_out = "report.json";
    std::string run_sink;
    BackendOptions run_backend;
    run->add_option("--script", run_script, "Conversation script (JSON)")->required();
    run->add_option("--strategy", run_strategy, "Execution strategy")
        ->check(CLI::IsMember({"ciflex", "full_reload", "recent_reload", "seamless"}))
        ->capture_default_str();
    run->add_option("--classification", run_classification,
                    "Classification mode override")
        ->check(CLI::IsMember({"hierarchical", "batched", "multichoice"}));
    run->add_option("--retention", run_retention, "Retention mode for rolled-back outputs")
        ->check(CLI::IsMember({"preserve-positions", "recompute"}))
        ->capture_default_str();
    run->add_option("--window", run_window, "Recent re-load window (turns)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--out", run_out, "Report output path")->capture_default_str();
    run->add_option("--summary-sink", run_sink,
                    "Append chat summaries to this file (id TAB text)");
    add_backend_flags(run, run_backend);

    // compare
    auto* compare = app.add_subcommand("compare", "Run several strategies side by side");
    std::string compare_script;
    std::vector<std::string> compare_strategy_specs;
    std::string compare_retention = "preserve-positions";
    int compare_window = 5;
    std::string compare_out = "comparison.csv";
    std::string compare_reports_out;
    BackendOptions compare_backend;
    compare->add_option("--script", compare_script, "Conversation script (JSON)")
        ->required();
    compare
        ->add_option("--strategies", compare_strategy_specs,
                     "Comma-separated strategies, each strategy[:classification-mode]")
        ->required()
        ->delimiter(',');
    compare->add_option("--retention", compare_retention, "Retention mode")
        ->check(CLI::IsMember({"preserve-positions", "recompute"}))
        ->capture_default_str();
    compare->add_option("--window", compare_window, "Recent re-load window (turns)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    compare->add_option("--out", compare_out, "CSV output path")->capture_default_str();
    compare->add_option("--reports-out", compare_reports_out,
                        "Also write the per-strategy session reports as JSON");
    add_backend_flags(compare, compare_backend);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic conversation script");
    std::string synth_profile = "paper-like-22";
    std::uint64_t synth_seed = 1;
    std::string synth_out = "script.json";
    synth
        ->add_option("--profile", synth_profile,
                     "Built-in profile name (paper-like-22, minimal) or profile file")
        ->capture_default_str();
    auto* seed_option =
        synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Script output path")->capture_default_str();

    // verify
    auto* verify = app.add_subcommand("verify", "Run the verification suites");
    std::string verify_suite = "all";
    std::string suites_help = "Suite to run: all";
    for (const std::string& name : verify_suite_names()) {
        suites_help += ", " + name;
    }
    auto verify_members = verify_suite_names();
    verify_members.push_back("all");
    verify->add_option("--suite", verify_suite, suites_help)
        ->check(CLI::IsMember(verify_members))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(run_script, run_strategy, run_classification, run_retention,
                           run_window, run_backend, run_out, run_sink);
        }
        if (compare->parsed()) {
            if (compare_strategy_specs.size() < 2) {
                std::cerr << "compare: need at least 2 strategies\n";
                return 2;
            }
            return cmd_compare(compare_script, compare_strategy_specs, compare_window,
                               compare_retention, compare_backend, compare_out,
                               compare_reports_out);
        }
        if (synth->parsed()) {
            return cmd_synth(synth_profile, synth_seed, seed_option->count() > 0,
                             synth_out);
        }
        if (verify->parsed()) {
            return cmd_verify(verify_suite);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
