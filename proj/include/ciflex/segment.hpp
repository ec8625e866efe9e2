#pragma once

#include "ciflex/tokenizer.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ciflex {

// Role of a cache segment. Roles partition every token of a cache and
// drive eviction/retention decisions.
enum class SegmentRole {
    MainInstruction,
    TurnQuery,
    RetrievalContext,
    MainAnswer,
    SubtaskInstruction,
    SubtaskReasoning,
    SubtaskOutput,
    ClassifierInstruction,
    ClassifierOutput,
};

std::string_view to_string(SegmentRole role);
std::optional<SegmentRole> role_from_string(std::string_view name);

bool is_instruction_role(SegmentRole role);

// Key/value blocks for one segment in one layer. Row-major:
// token index * kv_dim. kv_dim = heads * head_dim of the producing model.
struct LayerKv {
    std::vector<float> keys;
    std::vector<float> values;

    bool operator==(const LayerKv&) const = default;
};

// Numeric cache payload of a segment: one LayerKv per model layer, each
// holding one row per token.
struct SegmentKv {
    std::vector<LayerKv> layers;

    bool operator==(const SegmentKv&) const = default;
};

// One tagged span of the cache. Immutable after construction; caches and
// checkpoints share segments by pointer, which is what makes checkpoint
// restoration bit-exact.
struct Segment {
    SegmentRole role = SegmentRole::MainInstruction;
    std::vector<TokenId> tokens;
    std::vector<int> positions;  // strictly increasing, one per token
    std::optional<SegmentKv> kv; // absent on the counting backend
    int turn = 0;                // originating turn index (1-based)

    std::size_t size() const { return tokens.size(); }
};

using SegmentPtr = std::shared_ptr<const Segment>;

// Content a backend has not yet processed: what to prefill and under which
// role. Positions and kv are assigned by the backend.
struct SegmentDraft {
    SegmentRole role = SegmentRole::TurnQuery;
    std::vector<TokenId> tokens;
    int turn = 0;
};

// Deep value comparison (tokens, positions, roles, kv floats bit-for-bit).
bool segments_equal(const Segment& a, const Segment& b);

}  // namespace ciflex
