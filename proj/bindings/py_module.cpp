// Python bindings for the main engine operations. Structured results cross
// the boundary as JSON text; the ciflex python package parses them.

#include "ciflex/counting_backend.hpp"
#include "ciflex/errors.hpp"
#include "ciflex/orchestrator.hpp"
#include "ciflex/synthetic.hpp"
#include "ciflex/templates.hpp"
#include "ciflex/toy_transformer.hpp"
#include "ciflex/verify.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

namespace py = pybind11;

namespace {

using namespace ciflex;

std::unique_ptr<ModelBackend> make_backend(const std::string& backend,
                                           const std::string& tokenizer,
                                           std::uint64_t seed) {
    if (backend == "counting") {
        const TokenizerKind kind =
            tokenizer == "byte" ? TokenizerKind::Byte : TokenizerKind::Whitespace;
        return std::make_unique<CountingBackend>(kind);
    }
    if (backend == "toy") {
        ToyTransformerConfig config;
        config.seed = seed;
        return std::make_unique<ToyBackend>(config);
    }
    throw Error("unknown backend: " + backend);
}

StrategyConfig make_config(const std::string& strategy,
                           const std::optional<std::string>& classification,
                           const std::string& retention, int window) {
    StrategyConfig config;
    const auto parsed = strategy_from_string(strategy);
    if (!parsed) {
        throw Error("unknown strategy: " + strategy);
    }
    config.strategy = *parsed;
    if (classification) {
        const auto mode = classification_mode_from_string(*classification);
        if (!mode) {
            throw Error("unknown classification mode: " + *classification);
        }
        config.classification_mode = *mode;
    }
    const auto retention_mode = retention_mode_from_string(retention);
    if (!retention_mode) {
        throw Error("unknown retention mode: " + retention);
    }
    config.retention_mode = *retention_mode;
    config.recent_window = window;
    return config;
}

std::string run_json(const std::string& script_path, const std::string& strategy,
                     const std::optional<std::string>& classification,
                     const std::string& retention, int window,
                     const std::string& backend_name, const std::string& tokenizer,
                     std::uint64_t seed) {
    const ConversationScript script = load_and_validate(script_path);
    const StrategyConfig config = make_config(strategy, classification, retention, window);
    auto backend = make_backend(backend_name, tokenizer, seed);
    return report_to_json_text(run_conversation(script, config, *backend));
}

std::string compare_csv(const std::string& script_path,
                        const std::vector<std::string>& strategies,
                        const std::string& retention, int window,
                        const std::string& backend_name, const std::string& tokenizer,
                        std::uint64_t seed) {
    const ConversationScript script = load_and_validate(script_path);
    std::vector<StrategyConfig> configs;
    for (const std::string& spec : strategies) {
        std::string name = spec;
        std::optional<std::string> mode;
        if (const auto colon = spec.find(':'); colon != std::string::npos) {
            name = spec.substr(0, colon);
            mode = spec.substr(colon + 1);
        }
        configs.push_back(make_config(name, mode, retention, window));
    }
    const ComparisonTable table = compare_strategies(
        script, configs, [&]() { return make_backend(backend_name, tokenizer, seed); });
    return table.to_csv();
}

std::string synth_json(const std::string& profile_name,
                       std::optional<std::uint64_t> seed) {
    SyntheticProfile profile;
    if (auto builtin = builtin_profile(profile_name)) {
        profile = *builtin;
    } else {
        profile = SyntheticProfile::from_file(profile_name);
    }
    if (seed) {
        profile.seed = *seed;
    }
    return script_to_json_text(generate_synthetic(profile));
}

std::vector<std::string> validate_path(const std::string& script_path) {
    try {
        (void)load_and_validate(script_path);
        return {};
    } catch (const ValidationError& e) {
        return e.issues();
    }
}

py::tuple engine_matches_oracle(const std::string& script_path,
                                const std::string& strategy,
                                const std::optional<std::string>& classification,
                                const std::string& retention, int window,
                                const std::string& tokenizer) {
    const ConversationScript script = load_and_validate(script_path);
    const StrategyConfig config = make_config(strategy, classification, retention, window);
    auto backend = make_backend("counting", tokenizer, 0);
    const SessionReport report = run_conversation(script, config, *backend);
    const RunCosts oracle = oracle_counts(script, config, backend->tokenizer());
    const MatchVerdict verdict = assert_engine_matches_oracle(report.counts(), oracle);
    return py::make_tuple(verdict.ok, verdict.divergence);
}

py::list run_suite(const std::string& name) {
    py::list out;
    for (const CheckResult& result : run_verify_suite(name)) {
        py::dict entry;
        entry["suite"] = result.suite;
        entry["name"] = result.name;
        entry["passed"] = result.passed;
        entry["detail"] = result.detail;
        out.append(entry);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Task-level KV-cache reuse engine for multi-turn conversations";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<Error>(m, "EngineError", PyExc_RuntimeError);

    m.def("run_conversation_json", &run_json, py::arg("script_path"),
          py::arg("strategy") = "ciflex", py::arg("classification") = py::none(),
          py::arg("retention") = "preserve-positions", py::arg("window") = 5,
          py::arg("backend") = "counting", py::arg("tokenizer") = "whitespace",
          py::arg("seed") = 42,
          "Run one conversation; returns the session report as JSON text.");

    m.def("compare_strategies_csv", &compare_csv, py::arg("script_path"),
          py::arg("strategies"), py::arg("retention") = "preserve-positions",
          py::arg("window") = 5, py::arg("backend") = "counting",
          py::arg("tokenizer") = "whitespace", py::arg("seed") = 42,
          "Run several strategies; returns the comparison table as CSV text. "
          "Strategies may carry a classification mode as strategy:mode.");

    m.def("generate_synthetic_json", &synth_json, py::arg("profile") = "paper-like-22",
          py::arg("seed") = py::none(),
          "Generate a synthetic conversation script as JSON text.");

    m.def("validate_script", &validate_path, py::arg("script_path"),
          "Validate a script file; returns the list of violations (empty if valid).");

    m.def("engine_matches_oracle", &engine_matches_oracle, py::arg("script_path"),
          py::arg("strategy") = "ciflex", py::arg("classification") = py::none(),
          py::arg("retention") = "preserve-positions", py::arg("window") = 5,
          py::arg("tokenizer") = "whitespace",
          "Cross-check engine accounting against the naive replay oracle. "
          "Returns (ok, first_divergence).");

    m.def("render_template", [](const std::string& name,
                                const std::map<std::string, std::string>& variables) {
              return render_template(name, variables);
          },
          py::arg("name"), py::arg("variables"),
          "Render a registered prompt template with the given variables.");

    m.def("template_names", []() { return template_names(); });

    m.def("verify_suite", &run_suite, py::arg("suite") = "all",
          "Run a verification suite; returns a list of check results.");

    m.attr("__version__") = "0.1.0";
}
