#include "ciflex/cache_ops.hpp"

#include "ciflex/errors.hpp"

namespace ciflex {

std::string_view to_string(RetentionMode mode) {
    switch (mode) {
        case RetentionMode::PreservePositions: return "preserve-positions";
        case RetentionMode::Recompute: return "recompute";
    }
    return "unknown";
}

std::optional<RetentionMode> retention_mode_from_string(std::string_view name) {
    if (name == "preserve-positions") return RetentionMode::PreservePositions;
    if (name == "recompute") return RetentionMode::Recompute;
    return std::nullopt;
}

Checkpoint checkpoint(const KvCache& main_cache, int turn) {
    if (!main_cache.empty()) {
        const Segment& last = *main_cache.back();
        if (last.role != SegmentRole::TurnQuery) {
            throw PreconditionError(
                "checkpoint: cache must end with a turn-query segment, ends with " +
                std::string(to_string(last.role)));
        }
        if (last.turn != turn) {
            throw PreconditionError(
                "checkpoint: trailing query is for turn " + std::to_string(last.turn) +
                ", checkpoint requested for turn " + std::to_string(turn));
        }
    }
    return Checkpoint(main_cache.segments(), main_cache.logical_length(),
                      main_cache.next_position(), turn);
}

KvCache branch(const Checkpoint& cp, const SegmentDraft& instruction,
               ModelBackend& backend) {
    if (instruction.role != SegmentRole::SubtaskInstruction &&
        instruction.role != SegmentRole::ClassifierInstruction) {
        throw RoleError("branch: instruction role must be subtask-instruction or "
                        "classifier-instruction, got " +
                        std::string(to_string(instruction.role)));
    }
    KvCache side = cp.to_cache();
    try {
        backend.prefill(side, instruction);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError("branch", e.what());
    }
    return side;
}

KvCache evict_to_checkpoint(const KvCache& side, const Checkpoint& cp) {
    if (!side.has_prefix(cp.segments())) {
        throw LineageError("evict_to_checkpoint: side cache was not derived from "
                           "the given checkpoint");
    }
    return cp.to_cache();
}

KvCache rollback(const Checkpoint& cp, SegmentPtr retained_output,
                 RetentionMode mode, ModelBackend& backend) {
    KvCache cache = cp.to_cache();
    if (!retained_output) {
        return cache;
    }
    if (retained_output->role != SegmentRole::SubtaskOutput) {
        throw RoleError("rollback: retained segment must carry role subtask-output, "
                        "got " + std::string(to_string(retained_output->role)));
    }
    if (retained_output->positions.front() < cp.next_position()) {
        throw PreconditionError("rollback: retained output does not start past the "
                                "checkpoint; it was not produced on a side path of it");
    }
    switch (mode) {
        case RetentionMode::PreservePositions:
            cache.append(std::move(retained_output));
            break;
        case RetentionMode::Recompute: {
            SegmentDraft draft;
            draft.role = SegmentRole::SubtaskOutput;
            draft.tokens = retained_output->tokens;
            draft.turn = retained_output->turn;
            backend.prefill(cache, draft);
            break;
        }
    }
    return cache;
}

std::size_t advance_turn(KvCache& cache, SegmentPtr answer,
                         const SegmentDraft& next_query, ModelBackend& backend) {
    if (!answer) {
        throw PreconditionError("advance_turn: null answer segment");
    }
    if (answer->role != SegmentRole::MainAnswer) {
        throw RoleError("advance_turn: answer segment must carry role main-answer, "
                        "got " + std::string(to_string(answer->role)));
    }
    if (backend.has_numeric_kv() && !answer->kv.has_value()) {
        throw PreconditionError("advance_turn: answer segment is missing kv blocks; "
                                "it should have been produced during decoding");
    }
    if (next_query.role != SegmentRole::TurnQuery) {
        throw RoleError("advance_turn: next query draft must carry role turn-query");
    }
    cache.append(std::move(answer));
    return backend.prefill(cache, next_query);
}

}  // namespace ciflex
