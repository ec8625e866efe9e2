#include "ciflex/router.hpp"

#include "ciflex/errors.hpp"

#include <cctype>
#include <exception>
#include <thread>

namespace ciflex {

namespace {

std::string first_alpha_run(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) {
        ++i;
    }
    std::size_t start = i;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
        ++i;
    }
    return std::string(text.substr(start, i - start));
}

std::string lower(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

const std::string& instruction_for(const std::map<SubTaskKind, std::string>& instructions,
                                   SubTaskKind kind) {
    auto it = instructions.find(kind);
    if (it == instructions.end()) {
        throw PreconditionError("classify: no classifier instruction for kind " +
                                std::string(to_string(kind)));
    }
    return it->second;
}

ClassifierVerdict evaluate_classifier(const Checkpoint& cp, SubTaskKind kind,
                                      const std::string& instruction,
                                      ModelBackend& backend) {
    ClassifierVerdict verdict;
    verdict.kind = kind;
    SegmentDraft draft;
    draft.role = SegmentRole::ClassifierInstruction;
    draft.tokens = backend.tokenizer().tokenize(instruction);
    draft.turn = cp.turn();
    KvCache side = branch(cp, draft, backend);
    verdict.prefill_cost = draft.tokens.size();

    DecodeRequest request;
    request.role = SegmentRole::ClassifierOutput;
    request.turn = cp.turn();
    request.stage = stage_key::classifier(kind);
    request.max_tokens = 8;
    DecodeResult result = backend.decode(side, request);
    verdict.generation_cost = result.token_count;
    verdict.raw_text = result.text;
    verdict.yes = parse_verdict(result.text, kind);

    // Side path ends here; restoring the checkpoint also verifies lineage.
    (void)evict_to_checkpoint(side, cp);
    return verdict;
}

}  // namespace

bool parse_verdict(std::string_view text, SubTaskKind kind) {
    const std::string word = lower(first_alpha_run(text));
    if (word == "yes") return true;
    if (word == "no") return false;
    throw ClassificationFormatError("classifier " + std::string(to_string(kind)) +
                                    ": expected Yes or No, got \"" + std::string(text) +
                                    "\"");
}

SubTaskKind parse_option_letter(std::string_view text) {
    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        if (text[i] == '(' && text[i + 2] == ')') {
            auto kind = kind_from_option_letter(text[i + 1]);
            if (kind) {
                return *kind;
            }
        }
    }
    throw ClassificationFormatError("multichoice: no option letter (A)-(E) in \"" +
                                    std::string(text) + "\"");
}

ClassificationResult classify_hierarchical(
    const Checkpoint& cp, const PriorityOrder& order,
    const std::map<SubTaskKind, std::string>& instructions, ModelBackend& backend) {
    ClassificationResult result;
    for (SubTaskKind kind : order.kinds()) {
        const std::string& instruction = instruction_for(instructions, kind);
        ClassifierVerdict verdict = evaluate_classifier(cp, kind, instruction, backend);
        const bool yes = verdict.yes;
        result.verdicts.push_back(std::move(verdict));
        if (yes) {
            result.selected = kind;
            break;
        }
    }
    return result;
}

ClassificationResult classify_batched(
    const Checkpoint& cp, const PriorityOrder& order,
    const std::map<SubTaskKind, std::string>& instructions, ModelBackend& backend) {
    if (!backend.capabilities().supports_fork) {
        throw PreconditionError("classify_batched: backend does not support fork");
    }
    const auto& kinds = order.kinds();
    for (SubTaskKind kind : kinds) {
        (void)instruction_for(instructions, kind);  // validate before spawning
    }

    std::vector<ClassifierVerdict> verdicts(kinds.size());
    std::vector<std::exception_ptr> errors(kinds.size());
    std::vector<std::thread> workers;
    workers.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        workers.emplace_back([&, i]() {
            try {
                verdicts[i] = evaluate_classifier(cp, kinds[i],
                                                  instructions.at(kinds[i]), backend);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) {
        worker.join();
    }
    for (const auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }

    ClassificationResult result;
    result.batched = true;
    result.verdicts = std::move(verdicts);
    std::array<bool, 4> yes{};
    for (std::size_t i = 0; i < result.verdicts.size(); ++i) {
        yes[i] = result.verdicts[i].yes;
    }
    result.selected = order.argmax(yes);
    return result;
}

MultichoiceResult classify_multichoice(const Checkpoint& cp,
                                       const std::string& combined_instruction,
                                       ModelBackend& backend) {
    MultichoiceResult result;
    SegmentDraft draft;
    draft.role = SegmentRole::ClassifierInstruction;
    draft.tokens = backend.tokenizer().tokenize(combined_instruction);
    draft.turn = cp.turn();
    KvCache side = branch(cp, draft, backend);
    result.prefill_cost = draft.tokens.size();

    DecodeRequest request;
    request.role = SegmentRole::ClassifierOutput;
    request.turn = cp.turn();
    request.stage = stage_key::kMultichoice;
    request.max_tokens = 8;
    DecodeResult decoded = backend.decode(side, request);
    result.generation_cost = decoded.token_count;
    result.raw_text = decoded.text;
    result.selected = parse_option_letter(decoded.text);

    (void)evict_to_checkpoint(side, cp);
    return result;
}

}  // namespace ciflex
