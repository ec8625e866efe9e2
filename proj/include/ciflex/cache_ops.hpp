#pragma once

#include "ciflex/backend.hpp"
#include "ciflex/kv_cache.hpp"

#include <optional>
#include <string_view>

namespace ciflex {

// How a retained sub-task output gets its position indices once the
// instruction between it and the checkpoint has been evicted.
enum class RetentionMode {
    // Keep the side-path indices, leaving a gap where the instruction was.
    // Zero recompute; pure cache concatenation.
    PreservePositions,
    // Re-prefill the output tokens at contiguous positions, so the result
    // is indistinguishable from a from-scratch prefill.
    Recompute,
};

std::string_view to_string(RetentionMode mode);
std::optional<RetentionMode> retention_mode_from_string(std::string_view name);

// Snapshot of the main path at query time. The cache must be empty (length
// zero checkpoint) or end with a turn-query segment for `turn`, otherwise
// PreconditionError.
Checkpoint checkpoint(const KvCache& main_cache, int turn);

// Side path: checkpoint segments plus the instruction prefilled on top by
// the backend. Only the instruction tokens incur prefill cost. The
// instruction role must be subtask-instruction or classifier-instruction;
// an empty instruction yields a cache equal to the checkpoint. Backend
// failures are rethrown tagged with stage "branch".
KvCache branch(const Checkpoint& cp, const SegmentDraft& instruction,
               ModelBackend& backend);

// Drops everything the side path added, returning a cache equal to the
// checkpoint (bit-identical kv on numeric backends). Throws LineageError
// if `side` was not derived from `cp`.
KvCache evict_to_checkpoint(const KvCache& side, const Checkpoint& cp);

// Main path resumption: checkpoint ⊕ retained output. The retained segment
// must carry role subtask-output and have been produced on a side path of
// `cp` (its positions start at or after the checkpoint's next position).
// Under Recompute the output tokens are re-prefilled by the backend at
// contiguous positions; under PreservePositions the side-path segment is
// reused as-is.
KvCache rollback(const Checkpoint& cp, SegmentPtr retained_output,
                 RetentionMode mode, ModelBackend& backend);

// Turn update: rollback_cache ⊕ answer ⊕ prefilled next query. The answer
// segment must already carry kv on numeric backends (it was produced during
// decoding); only the next query incurs prefill cost, which is returned.
std::size_t advance_turn(KvCache& cache, SegmentPtr answer,
                         const SegmentDraft& next_query, ModelBackend& backend);

}  // namespace ciflex
